//! Compare the voltage stability margin of one study under all four
//! distribution representations: lumped load, equivalent feeder,
//! distribution-only, and full co-simulation with balanced or unbalanced
//! feeders.
//!
//!     cargo run --release --example margin_modes

use std::path::Path;
use tdmargin::analysis::{find_margin, margin_summary_table, MarginOptions};
use tdmargin::cosim::build_study;
use tdmargin::netmodel::casefile::load_scenario_bundle;
use tdmargin::netmodel::RepresentationMode::{CoSim, DOnly, EqFeeder, NoD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/ieee9_4node.json");
    let loaded = load_scenario_bundle(&path)?;
    let opts = MarginOptions::default();
    let schedule = loaded.scenario.lambda_schedule;

    let runs = [
        ("lumped load (NoD)", NoD, None),
        ("equivalent feeder", EqFeeder, None),
        ("distribution only", DOnly, None),
        ("co-sim, balanced split", CoSim, Some("bal")),
        ("co-sim, unbalanced split", CoSim, Some("unbal")),
    ];

    let mut reports = Vec::new();
    for (label, mode, variant) in runs {
        let study = build_study(&loaded, mode, variant, &opts.cosim)?;
        let report = find_margin(&study, &schedule, &opts)?;
        println!(
            "{label:<26} lambda_max = {:.4}   margin = {:>8.2} MW",
            report.lambda_max, report.vsm_mw
        );
        reports.push(report);
    }

    println!();
    print!(
        "{}",
        margin_summary_table(&reports.iter().collect::<Vec<_>>())
    );
    Ok(())
}
