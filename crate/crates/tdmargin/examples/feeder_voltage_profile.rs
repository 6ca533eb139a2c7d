//! Solve a three-phase feeder and print its per-phase voltage profile —
//! the node-by-node drop from the substation to the feeder ends.
//!
//!     cargo run --example feeder_voltage_profile [feeder.json]

use std::path::{Path, PathBuf};
use tdmargin::dxsolver::{solve_feeder, SubstationVoltage, SweepOptions};
use tdmargin::netmodel::casefile::load_feeder_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/ieee13.json"));
    let feeder = load_feeder_case(&path)?;
    let sol = solve_feeder(
        &feeder,
        SubstationVoltage::nominal(),
        1.0,
        &SweepOptions::default(),
        None,
    )?;

    println!(
        "{}: converged = {} in {} sweeps",
        feeder.name, sol.converged, sol.iterations
    );
    println!(
        "substation: {:.4} MW, {:.4} MVAr   loss: {:.4} MW, {:.4} MVAr",
        sol.p_sub_mw, sol.q_sub_mvar, sol.total_loss.p_mw, sol.total_loss.q_mvar
    );
    println!();
    print!("{}", sol.voltage_profile_csv());
    Ok(())
}
