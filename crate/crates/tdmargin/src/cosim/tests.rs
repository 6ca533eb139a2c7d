use super::*;
use crate::netmodel::{
    Branch, Bus, Generator, LineConfig, LineSection, Phase, PhaseSet, VoltageZone, ZipLoad,
};
use num_complex::Complex64;

fn coupled_config(zs: Complex64, zm: Complex64) -> LineConfig {
    let mut z = [[zm; 3]; 3];
    for (ph, row) in z.iter_mut().enumerate() {
        row[ph] = zs;
    }
    LineConfig {
        z_ohm_per_km: z,
        phasing: PhaseSet::ABC,
    }
}

fn small_feeder(p_mw_per_phase: f64, q_mvar_per_phase: f64) -> DistributionFeeder {
    DistributionFeeder {
        name: "unit".into(),
        root_node: "1".into(),
        zones: vec![VoltageZone {
            name: "mv".into(),
            kv_ll: 12.47,
        }],
        line_configs: [(
            "cfg".to_string(),
            coupled_config(Complex64::new(0.29, 0.66), Complex64::new(0.1, 0.27)),
        )]
        .into(),
        sections: vec![LineSection {
            from_node: "1".into(),
            to_node: "2".into(),
            config: "cfg".into(),
            length_km: 1.0,
        }],
        transformers: vec![],
        loads: Phase::ALL
            .iter()
            .map(|&ph| ZipLoad::constant_power("2", ph, p_mw_per_phase, q_mvar_per_phase))
            .collect(),
        dgs: vec![],
    }
}

fn three_bus_tx() -> TransmissionNetwork {
    TransmissionNetwork {
        name: "tx3".into(),
        s_base_mva: 100.0,
        buses: vec![
            Bus {
                id: "1".into(),
                bus_type: BusType::Slack,
                v_setpoint_pu: 1.02,
                load_mw: 0.0,
                load_mvar: 0.0,
            },
            Bus {
                id: "2".into(),
                bus_type: BusType::Pq,
                load_mw: 20.0,
                load_mvar: 5.0,
                v_setpoint_pu: 1.0,
            },
            Bus {
                id: "3".into(),
                bus_type: BusType::Pq,
                load_mw: 0.0,
                load_mvar: 0.0,
                v_setpoint_pu: 1.0,
            },
        ],
        branches: vec![
            Branch {
                from: "1".into(),
                to: "2".into(),
                r_pu: 0.02,
                x_pu: 0.12,
                b_pu: 0.0,
                rating_mva: 0.0,
            },
            Branch {
                from: "2".into(),
                to: "3".into(),
                r_pu: 0.03,
                x_pu: 0.18,
                b_pu: 0.0,
                rating_mva: 0.0,
            },
        ],
        generators: vec![Generator {
            bus: "1".into(),
            p_mw: 0.0,
            q_min_mvar: 0.0,
            q_max_mvar: 0.0,
        }],
    }
}

#[test]
fn null_feeder_converges_immediately_and_matches_bare_network() {
    let net = three_bus_tx();
    let feeder = small_feeder(0.0, 0.0);
    let attachments: BTreeMap<String, &DistributionFeeder> = [("3".to_string(), &feeder)].into();
    let opts = CosimOptions::default();
    let res = solve_cosim(&net, &attachments, 1.0, &opts).unwrap();
    assert!(res.converged, "{:?}", res.diagnostics);
    assert!(res.outer_iterations <= 2, "{}", res.outer_iterations);

    let bare = solve_powerflow(&net, &LoadOverrides::new(), None, &opts.pf).unwrap();
    for (a, b) in res.tx.v_pu.iter().zip(&bare.v_pu) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn boundary_power_accounts_for_feeder_load_plus_loss() {
    let net = three_bus_tx();
    let feeder = small_feeder(3.0, 1.0);
    let attachments: BTreeMap<String, &DistributionFeeder> = [("3".to_string(), &feeder)].into();
    let res = solve_cosim(&net, &attachments, 1.0, &CosimOptions::default()).unwrap();
    assert!(res.converged);
    let b = &res.boundary["3"];
    let fs = &res.feeders["3"];
    let expect_p = fs.total_load.p_mw + fs.total_loss.p_mw - fs.total_dg.p_mw;
    assert!((b.p_up_mw - expect_p).abs() < 1e-6);
    assert!(
        b.p_up_mw > 9.0,
        "load plus loss should exceed the base load"
    );
    // The transmission solve saw (almost) the same boundary power.
    let (v, _) = res.tx.voltage("3").unwrap();
    assert!(v < 1.02 && v > 0.8);
}

#[test]
fn one_extra_outer_iteration_changes_nothing_beyond_tolerance() {
    let net = three_bus_tx();
    let feeder = small_feeder(3.0, 1.0);
    let attachments: BTreeMap<String, &DistributionFeeder> = [("3".to_string(), &feeder)].into();
    let opts = CosimOptions::default();
    let res = solve_cosim(&net, &attachments, 1.0, &opts).unwrap();
    assert!(res.converged);

    // Re-run the two half-steps by hand from the converged state.
    let mut boundary = BTreeMap::new();
    let b = &res.boundary["3"];
    boundary.insert("3".to_string(), (b.p_up_mw, b.q_up_mvar));
    let ov = overrides_for(&net, &boundary, None);
    let tx2 = solve_powerflow(&net, &ov, Some(&res.tx), &opts.pf).unwrap();
    let (v2, th2) = tx2.voltage("3").unwrap();
    assert!((v2 - b.v_pu).abs() < opts.eps_v_pu);

    let fs2 = solve_feeder(
        &feeder,
        SubstationVoltage::Balanced {
            v_pu: v2,
            theta_rad: th2,
        },
        1.0,
        &opts.sweep,
        Some(&res.feeders["3"]),
    )
    .unwrap();
    let ds = ((fs2.p_sub_mw - b.p_up_mw).powi(2) + (fs2.q_sub_mvar - b.q_up_mvar).powi(2)).sqrt()
        / net.s_base_mva;
    assert!(ds < opts.eps_s_pu, "boundary power moved by {ds} pu");
}

#[test]
fn parallel_and_sequential_runs_are_bitwise_identical() {
    let net = three_bus_tx();
    let f1 = small_feeder(2.0, 0.6);
    let f2 = small_feeder(1.0, 0.4);
    let attachments: BTreeMap<String, &DistributionFeeder> =
        [("2".to_string(), &f1), ("3".to_string(), &f2)].into();
    let mut opts = CosimOptions {
        parallel: true,
        ..CosimOptions::default()
    };
    let par = solve_cosim(&net, &attachments, 1.0, &opts).unwrap();
    opts.parallel = false;
    let seq = solve_cosim(&net, &attachments, 1.0, &opts).unwrap();

    assert_eq!(par.outer_iterations, seq.outer_iterations);
    for (a, b) in par.tx.v_pu.iter().zip(&seq.tx.v_pu) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    for bus in attachments.keys() {
        let (pa, pb) = (&par.boundary[bus], &seq.boundary[bus]);
        assert_eq!(pa.p_up_mw.to_bits(), pb.p_up_mw.to_bits());
        assert_eq!(pa.q_up_mvar.to_bits(), pb.q_up_mvar.to_bits());
        for (va, vb) in par.feeders[bus]
            .node_voltage
            .iter()
            .zip(&seq.feeders[bus].node_voltage)
        {
            for ph in 0..3 {
                assert_eq!(va[ph].re.to_bits(), vb[ph].re.to_bits());
                assert_eq!(va[ph].im.to_bits(), vb[ph].im.to_bits());
            }
        }
    }
}

#[test]
fn attachment_to_slack_or_unknown_bus_is_rejected() {
    let net = three_bus_tx();
    let feeder = small_feeder(1.0, 0.3);
    let at_slack: BTreeMap<String, &DistributionFeeder> = [("1".to_string(), &feeder)].into();
    assert!(matches!(
        solve_cosim(&net, &at_slack, 1.0, &CosimOptions::default()),
        Err(CosimError::AttachmentNotPq(_))
    ));
    let nowhere: BTreeMap<String, &DistributionFeeder> = [("9".to_string(), &feeder)].into();
    assert!(matches!(
        solve_cosim(&net, &nowhere, 1.0, &CosimOptions::default()),
        Err(CosimError::UnknownBus(_))
    ));
}

#[test]
fn boundary_log_csv_shape() {
    let net = three_bus_tx();
    let feeder = small_feeder(3.0, 1.0);
    let attachments: BTreeMap<String, &DistributionFeeder> = [("3".to_string(), &feeder)].into();
    let res = solve_cosim(&net, &attachments, 1.0, &CosimOptions::default()).unwrap();
    let csv = res.boundary_log_csv();
    assert!(csv.starts_with("iteration,bus,v_pu,theta_deg,p_mw,q_mvar\n"));
    assert_eq!(csv.lines().count(), res.log.len() + 1);
    assert!(res.log.len() >= res.outer_iterations);
}
