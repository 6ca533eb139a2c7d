//! Watch the master-slave boundary exchange converge: the transmission solve
//! sends the substation voltage down, the feeder solve sends net power up,
//! until neither moves.
//!
//!     cargo run --example cosim_boundary

use std::collections::BTreeMap;
use std::path::Path;
use tdmargin::cosim::{solve_cosim, CosimOptions};
use tdmargin::netmodel::casefile::{load_feeder_case, load_transmission_case};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let net = load_transmission_case(&data.join("ieee9.json"))?;
    let feeder = load_feeder_case(&data.join("ieee4_zip_x22_unbal.json"))?;
    let attachments: BTreeMap<String, &tdmargin::netmodel::DistributionFeeder> =
        [("5".to_string(), &feeder)].into();

    let result = solve_cosim(&net, &attachments, 1.0, &CosimOptions::default())?;
    println!(
        "converged = {} in {} outer iterations",
        result.converged, result.outer_iterations
    );
    print!("{}", result.boundary_log_csv());

    let b = &result.boundary["5"];
    let fs = &result.feeders["5"];
    println!();
    println!(
        "final boundary at bus 5: v = {:.6} pu, feeder draws {:.4} MW + j{:.4} MVAr",
        b.v_pu, b.p_up_mw, b.q_up_mvar
    );
    println!(
        "feeder internals: load {:.4} MW, loss {:.4} MW, weakest node at {:.4} pu",
        fs.total_load.p_mw,
        fs.total_loss.p_mw,
        fs.min_v_pu()
    );
    Ok(())
}
