//! Margin search, net-load unbalance, DG sweeps and report files.
//!
//! The margin search steps lambda upward with adaptive halving until the step
//! floor, so the reported maximum is always bracketed: the solver converges
//! at `lambda_max` and demonstrably fails one minimum step beyond it. For the
//! transmission-only representations the report also carries a full
//! nose-rounding curve from the continuation tracer.

use crate::cosim::{run_mode, CosimError, CosimOptions, ModeSolution, Study};
use crate::netmodel::{DgMode, DistributionFeeder, LambdaSchedule, RepresentationMode};
use crate::txsolver::{trace_pv_curve, BranchMarker, ContinuationOptions, LoadOverrides};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("NLU undefined for zero average net load")]
    NluUndefined,
    #[error("base case failed at lambda {lambda}: {detail}")]
    BaseCase { lambda: f64, detail: String },
    #[error(transparent)]
    Cosim(#[from] CosimError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Net-load unbalance
// ---------------------------------------------------------------------------

/// Net-load unbalance: per-phase deviation from the average net load, the
/// worst phase quoted in percent.
#[derive(Debug, Clone, Copy)]
pub struct NluReport {
    pub p_a_mw: f64,
    pub p_b_mw: f64,
    pub p_c_mw: f64,
    pub p_avg_mw: f64,
    pub deviations: [f64; 3],
    pub nlu_percent: f64,
}

pub fn compute_nlu(p_phases: (f64, f64, f64)) -> Result<NluReport, AnalysisError> {
    let (a, b, c) = p_phases;
    let avg = (a + b + c) / 3.0;
    if avg == 0.0 {
        return Err(AnalysisError::NluUndefined);
    }
    let deviations = [(a - avg) / avg, (b - avg) / avg, (c - avg) / avg];
    let nlu = deviations.iter().fold(0.0f64, |m, u| m.max(u.abs())) * 100.0;
    Ok(NluReport {
        p_a_mw: a,
        p_b_mw: b,
        p_c_mw: c,
        p_avg_mw: avg,
        deviations,
        nlu_percent: nlu,
    })
}

/// NLU of a feeder's connection-point powers: per-phase base load scaled by
/// lambda, minus rated DG. Losses are deliberately not included.
pub fn nlu_of_feeder(feeder: &DistributionFeeder, lambda: f64) -> Result<NluReport, AnalysisError> {
    let load = feeder.phase_base_load();
    let dg = feeder.phase_dg_mw();
    compute_nlu((
        load[0].0 * lambda - dg[0],
        load[1].0 * lambda - dg[1],
        load[2].0 * lambda - dg[2],
    ))
}

/// NLU over a set of feeders (summed per phase), as attached in a study.
pub fn nlu_of_feeders<'a, I>(feeders: I, lambda: f64) -> Result<NluReport, AnalysisError>
where
    I: IntoIterator<Item = &'a DistributionFeeder>,
{
    let mut p = [0.0; 3];
    for f in feeders {
        let load = f.phase_base_load();
        let dg = f.phase_dg_mw();
        for ph in 0..3 {
            p[ph] += load[ph].0 * lambda - dg[ph];
        }
    }
    compute_nlu((p[0], p[1], p[2]))
}

// ---------------------------------------------------------------------------
// Margin search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct MarginOptions {
    pub cosim: CosimOptions,
    pub continuation: ContinuationOptions,
    /// Attach a full continuation curve for NoD / EqFeeder reports.
    pub cpf_curve: bool,
    /// Safety cap on solver attempts per search.
    pub max_attempts: usize,
}

impl Default for MarginOptions {
    fn default() -> Self {
        MarginOptions {
            cosim: CosimOptions::default(),
            continuation: ContinuationOptions::default(),
            cpf_curve: true,
            max_attempts: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarginReport {
    pub mode: RepresentationMode,
    pub lambda_start: f64,
    pub lambda_max: f64,
    /// (lambda_max - lambda_start) * total scalable base real load.
    pub vsm_mw: f64,
    pub scalable_base_mw: f64,
    pub min_step: f64,
    /// Monitored voltage per converged lambda, strictly increasing in
    /// lambda.
    pub curve: Vec<(f64, f64)>,
    /// Every solver attempt, in order.
    pub search_trace: Vec<(f64, bool)>,
    /// Full nose-rounding curve (lambda, v, marker) when the continuation
    /// tracer ran.
    pub full_trace: Vec<(f64, f64, BranchMarker)>,
    /// Nose from the continuation tracer, when it ran.
    pub cpf_nose_lambda: Option<f64>,
    /// Search never left the starting point.
    pub degenerate: bool,
    /// Search hit the schedule's lambda cap while still converging.
    pub capped: bool,
    /// A continuation curve was requested but the tracer failed; the curve
    /// falls back to the stepping points.
    pub cpf_fallback: bool,
}

/// One robust solve attempt: co-simulation failures retry once with halved
/// boundary damping before counting as past the nose.
fn attempt(study: &Study, lambda: f64, opts: &CosimOptions) -> Result<ModeSolution, CosimError> {
    let sol = run_mode(study, lambda, opts)?;
    if sol.converged || study.mode != RepresentationMode::CoSim {
        return Ok(sol);
    }
    let mut damped = *opts;
    damped.damping *= 0.5;
    run_mode(study, lambda, &damped)
}

/// Step lambda until the representation stops solving. The base case must
/// converge; from there the step halves on failure and the search ends only
/// when a step of `min_step` itself fails, so `lambda_max` is bracketed to
/// within one minimum step.
pub fn find_margin(
    study: &Study,
    schedule: &LambdaSchedule,
    opts: &MarginOptions,
) -> Result<MarginReport, AnalysisError> {
    let mut search_trace = Vec::new();
    let mut curve = Vec::new();

    let base = attempt(study, schedule.start, &opts.cosim)?;
    search_trace.push((schedule.start, base.converged));
    if !base.converged {
        return Err(AnalysisError::BaseCase {
            lambda: schedule.start,
            detail: "representation did not converge at the starting lambda".into(),
        });
    }
    curve.push((schedule.start, base.monitored_v_pu));

    let mut lambda = schedule.start;
    let mut step = schedule.initial_step;
    let mut clean = 0usize;
    let mut capped = false;
    let mut attempts = 0usize;

    'search: loop {
        if lambda >= schedule.max {
            capped = true;
            break;
        }
        if attempts >= opts.max_attempts {
            break;
        }
        let next = (lambda + step).min(schedule.max);
        attempts += 1;
        let sol = attempt(study, next, &opts.cosim)?;
        search_trace.push((next, sol.converged));
        if sol.converged {
            lambda = next;
            curve.push((next, sol.monitored_v_pu));
            clean += 1;
            if clean >= 2 {
                step = (step * 1.25).min(schedule.initial_step);
                clean = 0;
            }
            continue;
        }
        clean = 0;
        step *= 0.5;
        if step >= schedule.min_step {
            continue;
        }
        // Step collapsed: pin the bracket with one attempt at exactly
        // min_step past the last converged point.
        let probe = lambda + schedule.min_step;
        attempts += 1;
        let sol = attempt(study, probe, &opts.cosim)?;
        search_trace.push((probe, sol.converged));
        if sol.converged {
            lambda = probe;
            curve.push((probe, sol.monitored_v_pu));
            step = schedule.min_step;
            continue 'search;
        }
        break;
    }

    // Optional full nose-rounding curve for the transmission-only modes.
    let mut full_trace = Vec::new();
    let mut cpf_nose_lambda = None;
    let mut cpf_fallback = false;
    if opts.cpf_curve
        && matches!(
            study.mode,
            RepresentationMode::NoD | RepresentationMode::EqFeeder
        )
    {
        let direction: LoadOverrides = study
            .scalable_lumps
            .iter()
            .map(|(bus, &(p, q))| (bus.clone(), (p, q)))
            .collect();
        match trace_pv_curve(
            &study.tx,
            &direction,
            &study.monitored_bus,
            schedule.start,
            &opts.continuation,
        ) {
            Ok(trace) => {
                cpf_nose_lambda = Some(trace.nose_lambda);
                full_trace = trace
                    .points
                    .iter()
                    .map(|p| (p.lambda, p.v_monitored_pu, p.marker))
                    .collect();
            }
            Err(_) => cpf_fallback = true,
        }
    }

    let degenerate = lambda <= schedule.start;
    Ok(MarginReport {
        mode: study.mode,
        lambda_start: schedule.start,
        lambda_max: lambda,
        vsm_mw: (lambda - schedule.start) * study.scalable_base_mw,
        scalable_base_mw: study.scalable_base_mw,
        min_step: schedule.min_step,
        curve,
        search_trace,
        full_trace,
        cpf_nose_lambda,
        degenerate,
        capped,
        cpf_fallback,
    })
}

/// Re-verify the margin bracket after the fact: the representation must
/// converge at `lambda_max` and fail at `lambda_max + min_step`.
pub fn verify_bracket(
    study: &Study,
    report: &MarginReport,
    opts: &MarginOptions,
) -> Result<(bool, bool), AnalysisError> {
    let at_max = attempt(study, report.lambda_max, &opts.cosim)?;
    let beyond = if report.capped {
        // The schedule cap ended the search; nothing failed beyond it.
        None
    } else {
        Some(attempt(
            study,
            report.lambda_max + report.min_step,
            &opts.cosim,
        )?)
    };
    Ok((
        at_max.converged,
        beyond.map(|s| !s.converged).unwrap_or(true),
    ))
}

// ---------------------------------------------------------------------------
// DG sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub pct: [f64; 3],
    pub effective_pct: [f64; 3],
    pub dg_total_mw: f64,
    pub nlu_percent: f64,
    /// Margin per DG mode; a failed margin carries the error text.
    pub margins: BTreeMap<DgMode, Result<(f64, f64), String>>,
}

impl SweepRow {
    pub fn vsm(&self, mode: DgMode) -> Option<f64> {
        self.margins
            .get(&mode)
            .and_then(|r| r.as_ref().ok())
            .map(|&(_, vsm)| vsm)
    }

    pub fn lambda_max(&self, mode: DgMode) -> Option<f64> {
        self.margins
            .get(&mode)
            .and_then(|r| r.as_ref().ok())
            .map(|&(l, _)| l)
    }
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub penetration_mw: Option<f64>,
}

/// Inputs shared by every sweep row: the base study (no DG) plus the stock
/// of feeders DG gets applied to.
pub struct SweepInput<'a> {
    pub study: &'a Study,
    pub schedule: &'a LambdaSchedule,
}

/// Run one margin per (distribution, DG mode), each on a copy of the study
/// whose feeders carry the distribution's DG. Rows come back sorted by NLU.
/// Individual failures are recorded in the row, never aborting the sweep.
pub fn dg_sweep(
    input: &SweepInput,
    distributions: &[[f64; 3]],
    penetration_mw: Option<f64>,
    modes: &[DgMode],
    opts: &MarginOptions,
) -> SweepTable {
    let study = input.study;
    let rows: Vec<SweepRow> = distributions
        .par_iter()
        .map(|&pct| sweep_row(study, input.schedule, pct, penetration_mw, modes, opts))
        .collect();
    let mut rows = rows;
    rows.sort_by(|a, b| {
        a.nlu_percent
            .partial_cmp(&b.nlu_percent)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SweepTable {
        rows,
        penetration_mw,
    }
}

fn sweep_row(
    study: &Study,
    schedule: &LambdaSchedule,
    pct: [f64; 3],
    penetration_mw: Option<f64>,
    modes: &[DgMode],
    opts: &MarginOptions,
) -> SweepRow {
    // Penetration targets are totals across all attached feeders; compute
    // the shared rescale first.
    let raw_total: f64 = study
        .feeders
        .values()
        .map(|f| {
            let load = f.phase_base_load();
            (0..3).map(|ph| pct[ph] / 100.0 * load[ph].0).sum::<f64>()
        })
        .sum();
    let scale = match penetration_mw {
        Some(t) if raw_total > 0.0 => t / raw_total,
        _ => 1.0,
    };
    let eff = [pct[0] * scale, pct[1] * scale, pct[2] * scale];

    let mut margins = BTreeMap::new();
    let mut nlu_percent = f64::NAN;
    let mut dg_total = 0.0;
    for &mode in modes {
        let mut run = || -> Result<(f64, f64), AnalysisError> {
            let mut with_dg = study.clone();
            let mut total = 0.0;
            for feeder in with_dg.feeders.values_mut() {
                let (f, alloc) = crate::dxsolver::apply_dg_distribution(feeder, eff, None, mode)
                    .map_err(CosimError::Dx)?;
                total += alloc.total_mw;
                *feeder = f;
            }
            dg_total = total;
            let report = find_margin(&with_dg, schedule, opts)?;
            if nlu_percent.is_nan() {
                nlu_percent = nlu_of_feeders(with_dg.feeders.values(), 1.0)?.nlu_percent;
            }
            Ok((report.lambda_max, report.vsm_mw))
        };
        margins.insert(mode, run().map_err(|e| e.to_string()));
    }
    SweepRow {
        pct,
        effective_pct: eff,
        dg_total_mw: dg_total,
        nlu_percent,
        margins,
    }
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

/// `lambda,v_pu` rows of the margin search curve.
pub fn margin_curve_csv(report: &MarginReport) -> String {
    let mut out = String::from("lambda,v_pu\n");
    for &(l, v) in &report.curve {
        out.push_str(&format!("{l:.8},{v:.8}\n"));
    }
    out
}

/// `lambda,v_pu,branch_marker` rows of the full continuation curve when one
/// was traced, otherwise of the stepping curve marked `upper`.
pub fn margin_full_curve_csv(report: &MarginReport) -> String {
    let mut out = String::from("lambda,v_pu,branch_marker\n");
    if report.full_trace.is_empty() {
        for &(l, v) in &report.curve {
            out.push_str(&format!("{l:.8},{v:.8},upper\n"));
        }
    } else {
        for &(l, v, m) in &report.full_trace {
            out.push_str(&format!("{l:.8},{v:.8},{}\n", m.as_str()));
        }
    }
    out
}

/// Fixed-width margin summary, one line per report.
pub fn margin_summary_table(reports: &[&MarginReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>12} {:>12} {:>14} {:>10}\n",
        "mode", "lambda_max", "vsm_mw", "base_load_mw", "flags"
    ));
    for r in reports {
        let mut flags = Vec::new();
        if r.degenerate {
            flags.push("degenerate");
        }
        if r.capped {
            flags.push("capped");
        }
        if r.cpf_fallback {
            flags.push("cpf-fallback");
        }
        out.push_str(&format!(
            "{:<10} {:>12.6} {:>12.3} {:>14.3} {:>10}\n",
            r.mode.to_string(),
            r.lambda_max,
            r.vsm_mw,
            r.scalable_base_mw,
            if flags.is_empty() {
                "-".to_string()
            } else {
                flags.join(",")
            }
        ));
    }
    out
}

/// `pct_a,pct_b,pct_c,nlu_pct,vsm_vvc_mw,vsm_upf_mw` rows, NLU-sorted.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("pct_a,pct_b,pct_c,nlu_pct,vsm_vvc_mw,vsm_upf_mw\n");
    for row in &table.rows {
        let cell = |mode| match row.margins.get(&mode) {
            Some(Ok((_, vsm))) => format!("{vsm:.3}"),
            Some(Err(_)) => "failed".to_string(),
            None => String::new(),
        };
        out.push_str(&format!(
            "{:.3},{:.3},{:.3},{:.4},{},{}\n",
            row.pct[0],
            row.pct[1],
            row.pct[2],
            row.nlu_percent,
            cell(DgMode::Vvc),
            cell(DgMode::Upf),
        ));
    }
    out
}

/// Fixed-width rendering of a sweep table.
pub fn sweep_text_table(table: &SweepTable) -> String {
    let mut out = String::new();
    if let Some(p) = table.penetration_mw {
        out.push_str(&format!("target DG penetration: {p:.3} MW\n"));
    }
    out.push_str(&format!(
        "{:>7} {:>7} {:>7} {:>9} {:>12} {:>12} {:>10}\n",
        "pct_a", "pct_b", "pct_c", "nlu_pct", "vsm_vvc_mw", "vsm_upf_mw", "dg_mw"
    ));
    for row in &table.rows {
        let cell = |mode| match row.margins.get(&mode) {
            Some(Ok((_, vsm))) => format!("{vsm:.3}"),
            Some(Err(_)) => "failed".to_string(),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:>7.2} {:>7.2} {:>7.2} {:>9.4} {:>12} {:>12} {:>10.3}\n",
            row.pct[0],
            row.pct[1],
            row.pct[2],
            row.nlu_percent,
            cell(DgMode::Vvc),
            cell(DgMode::Upf),
            row.dg_total_mw,
        ));
    }
    out
}

/// Write a report file, surfacing the path on failure.
pub fn export_report(path: &Path, content: &str) -> Result<(), AnalysisError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| AnalysisError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, content).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Branch, Bus, BusType, TransmissionNetwork};

    #[test]
    fn nlu_balanced_is_zero() {
        let r = compute_nlu((10.0, 10.0, 10.0)).unwrap();
        assert_eq!(r.nlu_percent, 0.0);
        assert_eq!(r.p_avg_mw, 10.0);
    }

    #[test]
    fn nlu_example_arithmetic() {
        let r = compute_nlu((1.2, 1.0, 0.8)).unwrap();
        assert!((r.p_avg_mw - 1.0).abs() < 1e-12);
        assert!((r.deviations[0] - 0.2).abs() < 1e-12);
        assert!(r.deviations[1].abs() < 1e-12);
        assert!((r.deviations[2] + 0.2).abs() < 1e-12);
        assert!((r.nlu_percent - 20.0).abs() < 1e-9);
    }

    #[test]
    fn nlu_is_scale_invariant() {
        let a = compute_nlu((1.2, 1.0, 0.8)).unwrap();
        for k in [0.5, 2.0, 17.0] {
            let b = compute_nlu((1.2 * k, 1.0 * k, 0.8 * k)).unwrap();
            assert!((a.nlu_percent - b.nlu_percent).abs() < 1e-9);
        }
    }

    #[test]
    fn nlu_all_zero_is_undefined() {
        assert!(matches!(
            compute_nlu((0.0, 0.0, 0.0)),
            Err(AnalysisError::NluUndefined)
        ));
    }

    fn lossless_two_bus_study(load_mw: f64) -> Study {
        let tx = TransmissionNetwork {
            name: "twobus".into(),
            s_base_mva: 100.0,
            buses: vec![
                Bus {
                    id: "1".into(),
                    bus_type: BusType::Slack,
                    v_setpoint_pu: 1.0,
                    load_mw: 0.0,
                    load_mvar: 0.0,
                },
                Bus {
                    id: "2".into(),
                    bus_type: BusType::Pq,
                    v_setpoint_pu: 1.0,
                    load_mw,
                    load_mvar: 0.0,
                },
            ],
            branches: vec![Branch {
                from: "1".into(),
                to: "2".into(),
                r_pu: 0.0,
                x_pu: 0.3,
                b_pu: 0.0,
                rating_mva: 0.0,
            }],
            generators: vec![],
        };
        Study {
            mode: RepresentationMode::NoD,
            tx,
            feeders: BTreeMap::new(),
            scalable_lumps: [("2".to_string(), (load_mw, 0.0))].into(),
            eq_branches: BTreeMap::new(),
            equivalents: BTreeMap::new(),
            monitored_bus: "2".into(),
            scale_all_loads: false,
            scalable_base_mw: load_mw,
        }
    }

    #[test]
    fn lossless_margin_matches_maximum_power_transfer() {
        let study = lossless_two_bus_study(100.0);
        let schedule = LambdaSchedule {
            start: 1.0,
            max: 5.0,
            initial_step: 0.1,
            min_step: 1e-3,
        };
        let report = find_margin(&study, &schedule, &MarginOptions::default()).unwrap();
        // Total load at the nose: 1 / (2 * 0.3) pu on a 100 MVA base.
        let nose_mw = report.lambda_max * 100.0;
        let expected = 100.0 / 0.6;
        assert!(
            (nose_mw - expected).abs() / expected < 5e-3,
            "nose load {nose_mw} vs {expected}"
        );
        assert!((report.vsm_mw - (nose_mw - 100.0)).abs() < 1e-9);
        assert!(!report.degenerate);
        assert!(report.cpf_nose_lambda.is_some());
        assert!((report.cpf_nose_lambda.unwrap() * 100.0 - expected).abs() / expected < 2e-3);
    }

    #[test]
    fn margin_bracket_is_verified_post_hoc() {
        let study = lossless_two_bus_study(100.0);
        let schedule = LambdaSchedule {
            start: 1.0,
            max: 5.0,
            initial_step: 0.1,
            min_step: 1e-3,
        };
        let opts = MarginOptions::default();
        let report = find_margin(&study, &schedule, &opts).unwrap();
        let (at_max, beyond_fails) = verify_bracket(&study, &report, &opts).unwrap();
        assert!(at_max);
        assert!(beyond_fails);
        // Last converged and first failed lambda differ by at most min_step.
        let last_fail = report
            .search_trace
            .iter()
            .rev()
            .find(|(_, ok)| !ok)
            .map(|&(l, _)| l)
            .unwrap();
        assert!(last_fail - report.lambda_max <= schedule.min_step + 1e-12);
    }

    #[test]
    fn start_past_nose_is_degenerate() {
        let study = lossless_two_bus_study(100.0);
        // Base case converges right below the nose but no step survives.
        let schedule = LambdaSchedule {
            start: 1.66,
            max: 5.0,
            initial_step: 0.1,
            min_step: 1e-2,
        };
        let report = find_margin(&study, &schedule, &MarginOptions::default()).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.lambda_max, 1.66);
        assert_eq!(report.vsm_mw, 0.0);
    }

    #[test]
    fn base_case_beyond_nose_errors() {
        let study = lossless_two_bus_study(100.0);
        let schedule = LambdaSchedule {
            start: 2.0,
            max: 5.0,
            initial_step: 0.1,
            min_step: 1e-3,
        };
        assert!(matches!(
            find_margin(&study, &schedule, &MarginOptions::default()),
            Err(AnalysisError::BaseCase { .. })
        ));
    }

    #[test]
    fn curve_lambdas_strictly_increase() {
        let study = lossless_two_bus_study(100.0);
        let schedule = LambdaSchedule::default();
        let report = find_margin(&study, &schedule, &MarginOptions::default()).unwrap();
        for w in report.curve.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
    }

    #[test]
    fn csv_exports_are_structurally_stable() {
        let study = lossless_two_bus_study(100.0);
        let schedule = LambdaSchedule::default();
        let opts = MarginOptions::default();
        let report = find_margin(&study, &schedule, &opts).unwrap();
        let a = margin_curve_csv(&report);
        assert!(a.starts_with("lambda,v_pu\n"));
        assert_eq!(a.lines().count(), report.curve.len() + 1);
        let b = margin_full_curve_csv(&report);
        assert!(b.contains(",nose"));
        // Deterministic: regenerating the report reproduces the bytes.
        let report2 = find_margin(&study, &schedule, &opts).unwrap();
        assert_eq!(a, margin_curve_csv(&report2));
    }

    #[test]
    fn empty_curve_exports_header_only() {
        let report = MarginReport {
            mode: RepresentationMode::NoD,
            lambda_start: 1.0,
            lambda_max: 1.0,
            vsm_mw: 0.0,
            scalable_base_mw: 0.0,
            min_step: 1e-3,
            curve: vec![],
            search_trace: vec![],
            full_trace: vec![],
            cpf_nose_lambda: None,
            degenerate: true,
            capped: false,
            cpf_fallback: false,
        };
        assert_eq!(margin_curve_csv(&report), "lambda,v_pu\n");
    }

    #[test]
    fn empty_sweep_csv_is_header_only() {
        let table = SweepTable {
            rows: vec![],
            penetration_mw: None,
        };
        assert_eq!(
            sweep_csv(&table),
            "pct_a,pct_b,pct_c,nlu_pct,vsm_vvc_mw,vsm_upf_mw\n"
        );
    }
}
