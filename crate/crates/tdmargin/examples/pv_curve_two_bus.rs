//! Trace a full lambda-V curve, nose and lower branch included, with the
//! continuation tracer on a two-bus system — with and without an equivalent
//! feeder impedance in the path, showing how the extra series impedance
//! shrinks the loadability limit.
//!
//!     cargo run --example pv_curve_two_bus

use std::collections::BTreeMap;
use tdmargin::netmodel::{Branch, Bus, BusType, TransmissionNetwork};
use tdmargin::txsolver::{trace_pv_curve, ContinuationOptions};

fn two_bus(extra: Option<(f64, f64)>) -> TransmissionNetwork {
    let mut buses = vec![
        Bus {
            id: "src".into(),
            bus_type: BusType::Slack,
            v_setpoint_pu: 1.0,
            load_mw: 0.0,
            load_mvar: 0.0,
        },
        Bus {
            id: "load".into(),
            bus_type: BusType::Pq,
            v_setpoint_pu: 1.0,
            load_mw: 0.0,
            load_mvar: 0.0,
        },
    ];
    let mut branches = vec![Branch {
        from: "src".into(),
        to: "load".into(),
        r_pu: 0.05,
        x_pu: 0.3,
        b_pu: 0.0,
        rating_mva: 0.0,
    }];
    if let Some((r, x)) = extra {
        // Equivalent feeder branch between the line and the load.
        buses.push(Bus {
            id: "feeder".into(),
            bus_type: BusType::Pq,
            v_setpoint_pu: 1.0,
            load_mw: 0.0,
            load_mvar: 0.0,
        });
        branches[0].to = "feeder".into();
        branches.push(Branch {
            from: "feeder".into(),
            to: "load".into(),
            r_pu: r,
            x_pu: x,
            b_pu: 0.0,
            rating_mva: 0.0,
        });
    }
    TransmissionNetwork {
        name: "twobus".into(),
        s_base_mva: 100.0,
        buses,
        branches,
        generators: vec![],
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let direction: BTreeMap<String, (f64, f64)> = [("load".to_string(), (39.0, 12.8))].into();
    let opts = ContinuationOptions::default();

    for (label, extra) in [
        ("plain line", None),
        ("with equivalent feeder", Some((0.03, 0.06))),
    ] {
        let net = two_bus(extra);
        let trace = trace_pv_curve(&net, &direction, "load", 0.0, &opts)?;
        println!(
            "{label}: lambda_max = {:.4} ({} points, {} on the lower branch)",
            trace.nose_lambda,
            trace.points.len(),
            trace.lower_branch_len()
        );
        for p in trace.points.iter().step_by(6) {
            println!(
                "  lambda = {:>7.4}  v = {:>7.4}  [{}]",
                p.lambda,
                p.v_monitored_pu,
                p.marker.as_str()
            );
        }
    }
    Ok(())
}
