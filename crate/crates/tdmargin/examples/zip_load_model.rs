//! The voltage dependence of a ZIP load: constant-impedance, constant-current
//! and constant-power fractions of the base power, evaluated over a voltage
//! ramp.
//!
//!     cargo run --example zip_load_model

use tdmargin::netmodel::{Phase, ZipLoad};

fn main() {
    let load = ZipLoad {
        node: "demo".into(),
        phase: Phase::A,
        p0_mw: 100.0,
        q0_mvar: 50.0,
        pz: 0.4,
        pi: 0.3,
        pp: 0.3,
        qz: 0.4,
        qi: 0.3,
        qp: 0.3,
        v0_pu: 1.0,
    };

    println!(
        "base: {} MW, {} MVAr at v0 = {} pu",
        load.p0_mw, load.q0_mvar, load.v0_pu
    );
    println!("{:>6} {:>10} {:>10}", "v_pu", "p_mw", "q_mvar");
    let mut v = 0.70;
    while v <= 1.1001 {
        let (p, q) = load.zip_power(v);
        println!("{v:>6.2} {p:>10.4} {q:>10.4}");
        v += 0.05;
    }
}
