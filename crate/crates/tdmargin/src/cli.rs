//! Batch front end: validate casefiles, run margin studies and DG sweeps,
//! print equivalent-feeder parameters, solve single points.
//!
//! Exit codes are a stable contract: 0 success, 1 validation or model error,
//! 2 i/o or usage error, 3 numerical non-convergence of a base case.

use crate::analysis::{
    self, dg_sweep, find_margin, AnalysisError, MarginOptions, MarginReport, SweepInput,
};
use crate::cosim::{build_study, run_mode, CosimError, CosimOptions};
use crate::dxsolver::{solve_feeder, SubstationVoltage, SweepOptions};
use crate::equivalents::{compute_equivalent, equivalent_error_profile};
use crate::netmodel::casefile::{
    load_feeder_case, load_scenario_bundle, parse_feeder_case, parse_scenario,
    parse_transmission_case, resolve_path, LoadedScenario,
};
use crate::netmodel::{DgMode, ModelError, RepresentationMode, ScaleScope, Scenario};
use crate::txsolver::TxError;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MODEL: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser)]
#[command(
    name = "tdmargin",
    version,
    about = "Voltage stability margins under lumped, equivalent-feeder, \
             distribution-only and co-simulated representations"
)]
pub struct Cli {
    /// Output verbosity: quiet suppresses summaries, debug adds per-attempt
    /// search traces.
    #[arg(long, global = true, value_parser = ["quiet", "info", "debug"], default_value = "info")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Verbosity {
    Quiet,
    Info,
    Debug,
}

impl Verbosity {
    fn parse(s: &str) -> Verbosity {
        match s {
            "quiet" => Verbosity::Quiet,
            "debug" => Verbosity::Debug,
            _ => Verbosity::Info,
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse and validate casefiles or scenarios; exit 0 only if all pass.
    Validate {
        /// Casefile or scenario paths.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Margin search per representation mode, with curve CSVs.
    Margin {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated mode tokens: nod, eqfeeder, donly, cosim, or
        /// mode-variant (e.g. cosim-bal) to pick a named attachment set.
        #[arg(long, value_delimiter = ',')]
        modes: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for independent runs.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Scenario overrides as dotted key=value (last one wins).
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// DG distribution sweep: one margin per (distribution, DG mode).
    Dgsweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Semicolon-separated percentage triplets, e.g. "60,60,60;10,75,75".
        #[arg(long, required = true)]
        distributions: String,
        /// Optional total-MW targets; each produces one sweep with the
        /// distributions rescaled to hit it exactly.
        #[arg(long, value_delimiter = ',')]
        penetration: Vec<f64>,
        /// DG operating modes to compare.
        #[arg(long, value_delimiter = ',', default_values_t = [String::from("vvc"), String::from("upf")])]
        modes: Vec<String>,
        /// Named attachment variant.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Compute and print equivalent-feeder parameters for a feeder casefile.
    Equivalent {
        #[arg(long)]
        feeder: PathBuf,
        /// Load-side voltage the reduction assumes, pu.
        #[arg(long, default_value_t = 1.0)]
        v_load: f64,
        #[arg(long, default_value_t = 100.0)]
        s_base: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Extra lambdas for a loss-error profile table.
        #[arg(long, value_delimiter = ',')]
        error_profile: Vec<f64>,
    },
    /// Single-point solve of a scenario in one mode.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Mode token (defaults to the scenario's own mode).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Write voltage profiles and boundary logs here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
}

#[derive(Debug)]
struct CmdError {
    code: i32,
    message: String,
}

impl CmdError {
    fn usage(msg: impl Into<String>) -> CmdError {
        CmdError {
            code: EXIT_IO,
            message: msg.into(),
        }
    }
}

impl From<ModelError> for CmdError {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::Io { .. } => EXIT_IO,
            _ => EXIT_MODEL,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

fn cosim_code(e: &CosimError) -> i32 {
    match e {
        CosimError::BaseCase(_) | CosimError::Tx(TxError::BaseCaseDiverged) => EXIT_NUMERIC,
        CosimError::Model(ModelError::Io { .. }) => EXIT_IO,
        _ => EXIT_MODEL,
    }
}

impl From<CosimError> for CmdError {
    fn from(e: CosimError) -> Self {
        CmdError {
            code: cosim_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<AnalysisError> for CmdError {
    fn from(e: AnalysisError) -> Self {
        let code = match &e {
            AnalysisError::BaseCase { .. } => EXIT_NUMERIC,
            AnalysisError::Io { .. } => EXIT_IO,
            AnalysisError::Cosim(c) => cosim_code(c),
            AnalysisError::NluUndefined => EXIT_MODEL,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let verbosity = Verbosity::parse(&cli.log_level);
    let result = match cli.command {
        Command::Validate { paths } => cmd_validate(&paths),
        Command::Margin {
            scenario,
            modes,
            out_dir,
            parallel,
            overrides,
        } => cmd_margin(
            &scenario,
            &modes,
            out_dir.as_deref(),
            parallel,
            &overrides,
            verbosity,
        ),
        Command::Dgsweep {
            scenario,
            distributions,
            penetration,
            modes,
            variant,
            out_dir,
            parallel,
            overrides,
        } => cmd_dgsweep(
            &scenario,
            &distributions,
            &penetration,
            &modes,
            variant.as_deref(),
            out_dir.as_deref(),
            parallel,
            &overrides,
            verbosity,
        ),
        Command::Equivalent {
            feeder,
            v_load,
            s_base,
            lambda,
            error_profile,
        } => cmd_equivalent(&feeder, v_load, s_base, lambda, &error_profile),
        Command::Solve {
            scenario,
            mode,
            lambda,
            out_dir,
            overrides,
        } => cmd_solve(
            &scenario,
            mode.as_deref(),
            lambda,
            out_dir.as_deref(),
            &overrides,
        ),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(paths: &[PathBuf]) -> Result<(), CmdError> {
    let mut worst: i32 = EXIT_OK;
    for path in paths {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                println!("{}: unreadable: {e}", path.display());
                worst = worst.max(EXIT_IO);
                continue;
            }
        };
        let schema = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .and_then(|v| v.get("schema").and_then(|s| s.as_str()).map(String::from));
        let outcome: Result<&str, ModelError> = match schema.as_deref() {
            Some(crate::netmodel::casefile::TX_SCHEMA) => {
                parse_transmission_case(&text).map(|_| "transmission case ok")
            }
            Some(crate::netmodel::casefile::FEEDER_SCHEMA) => {
                parse_feeder_case(&text).map(|_| "feeder case ok")
            }
            Some(crate::netmodel::casefile::SCENARIO_SCHEMA) => {
                parse_scenario(&text).map(|_| "scenario ok")
            }
            Some(other) => Err(ModelError::Semantic(format!("unknown schema `{other}`"))),
            None => Err(ModelError::Semantic(
                "document carries no schema field".into(),
            )),
        };
        match outcome {
            Ok(kind) => println!("{}: {kind}", path.display()),
            Err(e) => {
                println!("{}: {e}", path.display());
                worst = worst.max(EXIT_MODEL);
            }
        }
    }
    if worst == EXIT_OK {
        Ok(())
    } else {
        Err(CmdError {
            code: worst,
            message: "validation failed".into(),
        })
    }
}

// ---------------------------------------------------------------------------
// scenario plumbing
// ---------------------------------------------------------------------------

fn load_bundle(path: &Path, overrides: &[String]) -> Result<LoadedScenario, CmdError> {
    let resolved = resolve_path(Path::new("."), path)?;
    let mut loaded = load_scenario_bundle(&resolved)?;
    apply_overrides(&mut loaded.scenario, overrides)?;
    Ok(loaded)
}

/// Flat `key=value` overrides with dotted paths into the scenario document.
fn apply_overrides(scenario: &mut Scenario, overrides: &[String]) -> Result<(), CmdError> {
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CmdError::usage(format!("override `{item}` is not key=value")))?;
        match key {
            "mode" => {
                scenario.mode = RepresentationMode::parse(value)
                    .ok_or_else(|| CmdError::usage(format!("unknown mode `{value}`")))?;
            }
            "scale_scope" => {
                scenario.scale_scope = match value {
                    "study_feeder" => ScaleScope::StudyFeeder,
                    "all_loads" => ScaleScope::AllLoads,
                    other => return Err(CmdError::usage(format!("unknown scale_scope `{other}`"))),
                };
            }
            "dg_mode_override" => {
                scenario.dg_mode_override = match value {
                    "" | "none" => None,
                    "upf" => Some(DgMode::Upf),
                    "vvc" => Some(DgMode::Vvc),
                    other => return Err(CmdError::usage(format!("unknown dg mode `{other}`"))),
                };
            }
            "monitored_bus" => scenario.monitored_bus = Some(value.to_string()),
            "output_dir" => scenario.output_dir = PathBuf::from(value),
            "lambda_schedule.start" => scenario.lambda_schedule.start = parse_f64(key, value)?,
            "lambda_schedule.max" => scenario.lambda_schedule.max = parse_f64(key, value)?,
            "lambda_schedule.initial_step" => {
                scenario.lambda_schedule.initial_step = parse_f64(key, value)?
            }
            "lambda_schedule.min_step" => {
                scenario.lambda_schedule.min_step = parse_f64(key, value)?
            }
            other => return Err(CmdError::usage(format!("unknown override key `{other}`"))),
        }
    }
    Ok(())
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CmdError> {
    value
        .parse()
        .map_err(|_| CmdError::usage(format!("override `{key}` needs a number, got `{value}`")))
}

/// A mode token is either a plain mode or `mode-variant`.
fn parse_mode_token(token: &str) -> Result<(RepresentationMode, Option<String>), CmdError> {
    if let Some(mode) = RepresentationMode::parse(token) {
        return Ok((mode, None));
    }
    if let Some((head, variant)) = token.split_once('-') {
        if let Some(mode) = RepresentationMode::parse(head) {
            return Ok((mode, Some(variant.to_string())));
        }
    }
    Err(CmdError::usage(format!("unknown mode token `{token}`")))
}

fn thread_pool(parallel: usize) -> Result<rayon::ThreadPool, CmdError> {
    if parallel == 0 {
        return Err(CmdError::usage("--parallel must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| CmdError::usage(format!("cannot build worker pool: {e}")))
}

// ---------------------------------------------------------------------------
// margin
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_margin(
    scenario_path: &Path,
    mode_tokens: &[String],
    out_dir: Option<&Path>,
    parallel: usize,
    overrides: &[String],
    verbosity: Verbosity,
) -> Result<(), CmdError> {
    let loaded = load_bundle(scenario_path, overrides)?;
    let tokens: Vec<String> = if mode_tokens.is_empty() {
        vec![loaded.scenario.mode.to_string()]
    } else {
        mode_tokens.to_vec()
    };
    let parsed: Vec<(String, RepresentationMode, Option<String>)> = tokens
        .iter()
        .map(|t| parse_mode_token(t).map(|(m, v)| (t.clone(), m, v)))
        .collect::<Result<_, _>>()?;

    let opts = MarginOptions::default();
    let schedule = loaded.scenario.lambda_schedule;
    let pool = thread_pool(parallel)?;
    let reports: Vec<(String, Result<MarginReport, CmdError>)> = pool.install(|| {
        use rayon::prelude::*;
        parsed
            .par_iter()
            .map(|(token, mode, variant)| {
                let run = || -> Result<MarginReport, CmdError> {
                    let study = build_study(&loaded, *mode, variant.as_deref(), &opts.cosim)?;
                    Ok(find_margin(&study, &schedule, &opts)?)
                };
                (token.clone(), run())
            })
            .collect()
    });

    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| loaded.scenario.output_dir.clone());
    let mut ok_reports = Vec::new();
    for (token, result) in &reports {
        match result {
            Ok(report) => {
                analysis::export_report(
                    &dir.join(format!("curve_{token}.csv")),
                    &analysis::margin_curve_csv(report),
                )?;
                analysis::export_report(
                    &dir.join(format!("curve_{token}_full.csv")),
                    &analysis::margin_full_curve_csv(report),
                )?;
                if verbosity >= Verbosity::Info {
                    println!(
                        "{token}: lambda_max = {:.6}, vsm = {:.3} MW (base {:.3} MW{})",
                        report.lambda_max,
                        report.vsm_mw,
                        report.scalable_base_mw,
                        if report.degenerate {
                            ", degenerate"
                        } else {
                            ""
                        }
                    );
                }
                if verbosity >= Verbosity::Debug {
                    for &(lambda, ok) in &report.search_trace {
                        println!(
                            "  {token} lambda {lambda:.6}: {}",
                            if ok { "converged" } else { "failed" }
                        );
                    }
                }
                ok_reports.push(report);
            }
            Err(e) => {
                return Err(CmdError {
                    code: e.code,
                    message: format!("mode `{token}`: {}", e.message),
                })
            }
        }
    }
    let summary = analysis::margin_summary_table(&ok_reports);
    analysis::export_report(&dir.join("margin_summary.txt"), &summary)?;
    if verbosity >= Verbosity::Info {
        print!("{summary}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dgsweep
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_dgsweep(
    scenario_path: &Path,
    distributions: &str,
    penetration: &[f64],
    mode_names: &[String],
    variant: Option<&str>,
    out_dir: Option<&Path>,
    parallel: usize,
    overrides: &[String],
    verbosity: Verbosity,
) -> Result<(), CmdError> {
    let loaded = load_bundle(scenario_path, overrides)?;
    if loaded.scenario.mode != RepresentationMode::CoSim {
        return Err(CmdError {
            code: EXIT_MODEL,
            message: "dgsweep requires a co-simulation scenario".into(),
        });
    }
    let dists = parse_distributions(distributions)?;
    let modes: Vec<DgMode> = mode_names
        .iter()
        .map(|m| match m.to_ascii_lowercase().as_str() {
            "upf" => Ok(DgMode::Upf),
            "vvc" => Ok(DgMode::Vvc),
            other => Err(CmdError::usage(format!("unknown dg mode `{other}`"))),
        })
        .collect::<Result<_, _>>()?;
    if modes.is_empty() {
        return Err(CmdError::usage("at least one dg mode is required"));
    }

    let opts = MarginOptions::default();
    let study = build_study(&loaded, RepresentationMode::CoSim, variant, &opts.cosim)?;
    let schedule = loaded.scenario.lambda_schedule;
    let input = SweepInput {
        study: &study,
        schedule: &schedule,
    };

    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| loaded.scenario.output_dir.clone());
    let pool = thread_pool(parallel)?;
    let targets: Vec<Option<f64>> = if penetration.is_empty() {
        vec![None]
    } else {
        penetration.iter().map(|&p| Some(p)).collect()
    };
    for target in targets {
        let table = pool.install(|| dg_sweep(&input, &dists, target, &modes, &opts));
        let tag = target.map(|p| format!("_p{p:.0}")).unwrap_or_default();
        analysis::export_report(
            &dir.join(format!("dgsweep{tag}.csv")),
            &analysis::sweep_csv(&table),
        )?;
        let text = analysis::sweep_text_table(&table);
        analysis::export_report(&dir.join(format!("dgsweep{tag}.txt")), &text)?;
        if verbosity >= Verbosity::Info {
            print!("{text}");
        }
    }
    Ok(())
}

fn parse_distributions(arg: &str) -> Result<Vec<[f64; 3]>, CmdError> {
    let mut out = Vec::new();
    for part in arg.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let nums: Vec<f64> = part
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CmdError::usage(format!("bad distribution triplet `{part}`")))?;
        if nums.len() != 3 {
            return Err(CmdError::usage(format!(
                "distribution `{part}` must have three percentages"
            )));
        }
        out.push([nums[0], nums[1], nums[2]]);
    }
    if out.is_empty() {
        return Err(CmdError::usage("empty distribution list"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// equivalent
// ---------------------------------------------------------------------------

fn cmd_equivalent(
    feeder_path: &Path,
    v_load: f64,
    s_base: f64,
    lambda: f64,
    error_profile: &[f64],
) -> Result<(), CmdError> {
    let resolved = resolve_path(Path::new("."), feeder_path)?;
    let feeder = load_feeder_case(&resolved)?;
    let sweep = SweepOptions::default();
    if error_profile.is_empty() {
        let sub = SubstationVoltage::Balanced {
            v_pu: v_load,
            theta_rad: 0.0,
        };
        let sol = solve_feeder(&feeder, sub, lambda, &sweep, None).map_err(CosimError::Dx)?;
        if !sol.converged {
            return Err(CmdError {
                code: EXIT_NUMERIC,
                message: "feeder solve did not converge".into(),
            });
        }
        let eq =
            compute_equivalent(&sol, v_load, s_base, lambda).map_err(CosimError::Equivalent)?;
        print_equivalent(&feeder.name, &eq, &sol);
    } else {
        let (eq, rows) =
            equivalent_error_profile(&feeder, v_load, s_base, lambda, error_profile, &sweep)
                .map_err(CosimError::Equivalent)?;
        println!(
            "{}: r = {:.6} pu, x = {:.6} pu on {:.4} MVA (x/r = {:.6})",
            feeder.name,
            eq.r_pu,
            eq.x_pu,
            eq.s_base_mva,
            eq.x_pu / eq.r_pu
        );
        println!(
            "{:>8} {:>14} {:>16} {:>12}",
            "lambda", "true_loss_mw", "eq_model_loss_mw", "rel_err"
        );
        for r in rows {
            match r.true_loss_mw {
                Some(t) => {
                    let rel = if t != 0.0 {
                        (r.eq_model_loss_mw - t) / t
                    } else {
                        0.0
                    };
                    println!(
                        "{:>8.4} {:>14.6} {:>16.6} {:>12.6}",
                        r.lambda, t, r.eq_model_loss_mw, rel
                    );
                }
                None => println!(
                    "{:>8.4} {:>14} {:>16.6} {:>12}",
                    r.lambda, "diverged", r.eq_model_loss_mw, "-"
                ),
            }
        }
    }
    Ok(())
}

fn print_equivalent(
    name: &str,
    eq: &crate::equivalents::EquivalentFeeder,
    sol: &crate::dxsolver::DxSolution,
) {
    println!("feeder: {name}");
    println!(
        "  net substation power: {:.5} MW, {:.5} MVAr ({:.5} MVA)",
        sol.p_sub_mw, sol.q_sub_mvar, sol.s_sub_mva
    );
    println!(
        "  losses: {:.5} MW, {:.5} MVAr",
        sol.total_loss.p_mw, sol.total_loss.q_mvar
    );
    println!(
        "  equivalent on {:.4} MVA at v = {:.4} pu: r = {:.6} pu, x = {:.6} pu (x/r = {:.6})",
        eq.s_base_mva,
        eq.v_load_pu,
        eq.r_pu,
        eq.x_pu,
        eq.x_pu / eq.r_pu
    );
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn cmd_solve(
    scenario_path: &Path,
    mode_token: Option<&str>,
    lambda: f64,
    out_dir: Option<&Path>,
    overrides: &[String],
) -> Result<(), CmdError> {
    let loaded = load_bundle(scenario_path, overrides)?;
    let (mode, variant) = match mode_token {
        Some(t) => parse_mode_token(t)?,
        None => (loaded.scenario.mode, None),
    };
    let opts = CosimOptions::default();
    let study = build_study(&loaded, mode, variant.as_deref(), &opts)?;
    let sol = run_mode(&study, lambda, &opts)?;
    println!(
        "{mode} at lambda {lambda}: converged = {}, monitored v = {:.6} pu, boundary = ({:.4} MW, {:.4} MVAr)",
        sol.converged, sol.monitored_v_pu, sol.boundary_p_mw, sol.boundary_q_mvar
    );
    if mode == RepresentationMode::CoSim {
        println!("  outer iterations: {}", sol.outer_iterations);
    }
    for (bus, fs) in &sol.feeders {
        println!(
            "  feeder at {bus}: sub = ({:.4}, {:.4}), loss = ({:.5}, {:.5}), min v = {:.4} pu",
            fs.p_sub_mw,
            fs.q_sub_mvar,
            fs.total_loss.p_mw,
            fs.total_loss.q_mvar,
            fs.min_v_pu()
        );
    }
    if let Some(dir) = out_dir {
        for (bus, fs) in &sol.feeders {
            analysis::export_report(
                &dir.join(format!("profile_{bus}.csv")),
                &fs.voltage_profile_csv(),
            )?;
        }
        if !sol.boundary.is_empty() {
            let mut csv = String::from("iteration,bus,v_pu,theta_deg,p_mw,q_mvar\n");
            for (bus, b) in &sol.boundary {
                csv.push_str(&format!(
                    "{},{},{:.8},{:.6},{:.8},{:.8}\n",
                    b.iteration,
                    bus,
                    b.v_pu,
                    b.theta_rad.to_degrees(),
                    b.p_up_mw,
                    b.q_up_mvar
                ));
            }
            analysis::export_report(&dir.join("boundary.csv"), &csv)?;
        }
    }
    Ok(())
}
