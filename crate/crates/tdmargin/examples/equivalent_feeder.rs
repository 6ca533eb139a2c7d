//! Reduce a feeder to its equivalent series impedance and show how far the
//! lumped model drifts from fresh feeder solves as the load scale moves away
//! from the calibration point.
//!
//!     cargo run --example equivalent_feeder

use std::path::Path;
use tdmargin::dxsolver::SweepOptions;
use tdmargin::equivalents::equivalent_error_profile;
use tdmargin::netmodel::casefile::load_feeder_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/ieee4_bal.json");
    let feeder = load_feeder_case(&path)?;

    let lambdas = [0.0, 0.5, 0.8, 1.0, 1.2, 1.5];
    let (eq, rows) = equivalent_error_profile(
        &feeder,
        1.0,
        3.2435,
        1.0,
        &lambdas,
        &SweepOptions::default(),
    )?;

    println!(
        "{}: r = {:.6} pu, x = {:.6} pu on a {:.4} MVA base (x/r = {:.4})",
        feeder.name,
        eq.r_pu,
        eq.x_pu,
        eq.s_base_mva,
        eq.x_pu / eq.r_pu
    );
    println!(
        "calibrated at lambda {} with losses {:.5} MW / {:.5} MVAr",
        eq.lambda, eq.loss_mw, eq.loss_mvar
    );
    println!();
    println!(
        "{:>7} {:>14} {:>15} {:>10}",
        "lambda", "true loss MW", "lumped loss MW", "error %"
    );
    for r in rows {
        match r.true_loss_mw {
            Some(t) if t > 0.0 => println!(
                "{:>7.2} {:>14.6} {:>15.6} {:>9.3}%",
                r.lambda,
                t,
                r.eq_model_loss_mw,
                100.0 * (r.eq_model_loss_mw - t) / t
            ),
            Some(t) => println!(
                "{:>7.2} {:>14.6} {:>15.6} {:>10}",
                r.lambda, t, r.eq_model_loss_mw, "-"
            ),
            None => println!(
                "{:>7.2} {:>14} {:>15.6} {:>10}",
                r.lambda, "diverged", r.eq_model_loss_mw, "-"
            ),
        }
    }
    Ok(())
}
