//! Master-slave splitting between the transmission and distribution solvers,
//! plus the dispatcher for the four distribution-representation modes.
//!
//! The split happens at the substation bus: the transmission solve (master)
//! sends the boundary voltage down, each feeder solve (slave) sends its net
//! substation power back up, and the loop runs plain Gauss-Seidel between the
//! two until both quantities stop moving. Feeder solves within one outer
//! iteration are independent and run in parallel; results merge in bus-id
//! order so the outcome is bit-identical to a sequential run.

use crate::dxsolver::{solve_feeder, DxError, DxSolution, SubstationVoltage, SweepOptions};
use crate::equivalents::{compute_equivalent, EquivalentError, EquivalentFeeder};
use crate::netmodel::casefile::LoadedScenario;
use crate::netmodel::{
    BusType, DistributionFeeder, ModelError, RepresentationMode, ScaleScope, TransmissionNetwork,
};
use crate::txsolver::{solve_powerflow, LoadOverrides, PowerFlowOptions, TxError, TxSolution};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CosimError {
    #[error("attachment bus `{0}` is not a PQ bus")]
    AttachmentNotPq(String),
    #[error("attachment bus `{0}` does not exist")]
    UnknownBus(String),
    #[error("mode `{mode}` {problem}")]
    ModeMismatch {
        mode: RepresentationMode,
        problem: String,
    },
    #[error("variant `{0}` is not defined by the scenario")]
    UnknownVariant(String),
    #[error("base case failed: {0}")]
    BaseCase(String),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Dx(#[from] DxError),
    #[error(transparent)]
    Equivalent(#[from] EquivalentError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct CosimOptions {
    /// Boundary voltage tolerance between consecutive outer iterations, pu.
    pub eps_v_pu: f64,
    /// Boundary power tolerance, pu on the transmission base.
    pub eps_s_pu: f64,
    pub max_outer: usize,
    /// Relaxation on the upward power update; 1.0 is plain Gauss-Seidel.
    pub damping: f64,
    pub parallel: bool,
    /// When set, lumped loads at non-attachment buses scale by this factor.
    pub lumped_lambda: Option<f64>,
    pub pf: PowerFlowOptions,
    pub sweep: SweepOptions,
}

impl Default for CosimOptions {
    fn default() -> Self {
        CosimOptions {
            eps_v_pu: 1e-4,
            eps_s_pu: 1e-4,
            max_outer: 50,
            damping: 1.0,
            parallel: true,
            lumped_lambda: None,
            pf: PowerFlowOptions::default(),
            sweep: SweepOptions::default(),
        }
    }
}

/// Boundary quantities exchanged at one substation bus.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryState {
    pub v_pu: f64,
    pub theta_rad: f64,
    /// Net power flowing into the feeder, MW / MVAr.
    pub p_up_mw: f64,
    pub q_up_mvar: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct BoundaryLogRow {
    pub iteration: usize,
    pub bus: String,
    pub v_pu: f64,
    pub theta_deg: f64,
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone)]
pub struct CosimResult {
    pub tx: TxSolution,
    pub feeders: BTreeMap<String, DxSolution>,
    pub boundary: BTreeMap<String, BoundaryState>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub log: Vec<BoundaryLogRow>,
    /// Per-boundary failure descriptions when not converged.
    pub diagnostics: Vec<String>,
}

impl CosimResult {
    /// `iteration,bus,v_pu,theta_deg,p_mw,q_mvar` rows.
    pub fn boundary_log_csv(&self) -> String {
        let mut out = String::from("iteration,bus,v_pu,theta_deg,p_mw,q_mvar\n");
        for r in &self.log {
            out.push_str(&format!(
                "{},{},{:.8},{:.6},{:.8},{:.8}\n",
                r.iteration, r.bus, r.v_pu, r.theta_deg, r.p_mw, r.q_mvar
            ));
        }
        out
    }
}

/// Build the lumped-load override map for one lambda: attachment buses carry
/// the given boundary powers, every other loaded bus optionally scales.
fn overrides_for(
    net: &TransmissionNetwork,
    boundary: &BTreeMap<String, (f64, f64)>,
    lumped_lambda: Option<f64>,
) -> LoadOverrides {
    let mut ov: LoadOverrides = boundary
        .iter()
        .map(|(bus, &(p, q))| (bus.clone(), (p, q)))
        .collect();
    if let Some(k) = lumped_lambda {
        for bus in &net.buses {
            if boundary.contains_key(&bus.id) {
                continue;
            }
            if bus.load_mw != 0.0 || bus.load_mvar != 0.0 {
                ov.insert(bus.id.clone(), (bus.load_mw * k, bus.load_mvar * k));
            }
        }
    }
    ov
}

/// Co-simulate the transmission network with three-phase feeders attached at
/// PQ buses. ZIP loads inside the feeders scale by `lambda`; DG does not.
pub fn solve_cosim(
    net: &TransmissionNetwork,
    attachments: &BTreeMap<String, &DistributionFeeder>,
    lambda: f64,
    opts: &CosimOptions,
) -> Result<CosimResult, CosimError> {
    for bus_id in attachments.keys() {
        let bus = net
            .bus(bus_id)
            .ok_or_else(|| CosimError::UnknownBus(bus_id.clone()))?;
        if bus.bus_type != BusType::Pq {
            return Err(CosimError::AttachmentNotPq(bus_id.clone()));
        }
    }

    let buses: Vec<&String> = attachments.keys().collect();
    let mut diagnostics = Vec::new();
    let mut log = Vec::new();

    // Initial upward power from one cheap feeder pre-solve at nominal
    // voltage. A feeder that cannot solve even there ends the search.
    let mut s_up: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut feeder_solutions: BTreeMap<String, DxSolution> = BTreeMap::new();
    for (&bus, feeder) in buses.iter().zip(attachments.values()) {
        let pre = solve_feeder(
            feeder,
            SubstationVoltage::nominal(),
            lambda,
            &opts.sweep,
            None,
        )?;
        let guess = if pre.converged && !pre.low_voltage {
            (pre.p_sub_mw, pre.q_sub_mvar)
        } else {
            diagnostics.push(format!(
                "feeder at bus `{bus}` failed its nominal-voltage pre-solve"
            ));
            let (p0, q0) = feeder.total_base_load();
            (p0 * lambda, q0 * lambda)
        };
        s_up.insert(bus.clone(), guess);
        feeder_solutions.insert(bus.clone(), pre);
    }

    let mut tx_sol: Option<TxSolution> = None;
    let mut prev_v: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut converged = false;
    let mut outer = 0;

    if diagnostics.is_empty() {
        while outer < opts.max_outer {
            outer += 1;
            let ov = overrides_for(net, &s_up, opts.lumped_lambda);
            let sol = solve_powerflow(net, &ov, tx_sol.as_ref(), &opts.pf)?;
            if !sol.converged {
                diagnostics.push(format!(
                    "transmission solve diverged at outer iteration {outer}"
                ));
                tx_sol = Some(sol);
                break;
            }

            // Boundary voltages down, feeder solves in parallel, bus order
            // fixed for determinism.
            let jobs: Vec<(String, &DistributionFeeder, (f64, f64), Option<DxSolution>)> = buses
                .iter()
                .map(|&bus| {
                    let (v, th) = sol.voltage(bus).expect("attachment bus exists");
                    (
                        bus.clone(),
                        attachments[bus],
                        (v, th),
                        feeder_solutions.remove(bus),
                    )
                })
                .collect();
            let solve_one = |(bus, feeder, (v, th), warm): (
                String,
                &DistributionFeeder,
                (f64, f64),
                Option<DxSolution>,
            )| {
                let sub = SubstationVoltage::Balanced {
                    v_pu: v,
                    theta_rad: th,
                };
                let sol = solve_feeder(feeder, sub, lambda, &opts.sweep, warm.as_ref());
                (bus, v, th, sol)
            };
            let results: Vec<_> = if opts.parallel {
                jobs.into_par_iter().map(solve_one).collect()
            } else {
                jobs.into_iter().map(solve_one).collect()
            };

            let mut dv_worst = 0.0f64;
            let mut ds_worst = 0.0f64;
            let mut failed = false;
            for (bus, v, th, sol) in results {
                let sol = sol?;
                if !(sol.converged && !sol.low_voltage) {
                    diagnostics.push(format!(
                        "feeder at bus `{bus}` {} at outer iteration {outer}",
                        if sol.converged {
                            "collapsed below the voltage floor"
                        } else {
                            "did not converge"
                        }
                    ));
                    failed = true;
                }
                let s_new = (sol.p_sub_mw, sol.q_sub_mvar);
                log.push(BoundaryLogRow {
                    iteration: outer,
                    bus: bus.clone(),
                    v_pu: v,
                    theta_deg: th.to_degrees(),
                    p_mw: s_new.0,
                    q_mvar: s_new.1,
                });
                if let Some(&(pv, pth)) = prev_v.get(&bus) {
                    let dv = ((v - pv).powi(2) + (v * (th - pth)).powi(2)).sqrt();
                    dv_worst = dv_worst.max(dv);
                } else {
                    dv_worst = f64::INFINITY;
                }
                let used = s_up[&bus];
                let ds = ((s_new.0 - used.0).powi(2) + (s_new.1 - used.1).powi(2)).sqrt()
                    / net.s_base_mva;
                ds_worst = ds_worst.max(ds);
                prev_v.insert(bus.clone(), (v, th));
                let relaxed = (
                    used.0 + opts.damping * (s_new.0 - used.0),
                    used.1 + opts.damping * (s_new.1 - used.1),
                );
                s_up.insert(bus.clone(), relaxed);
                feeder_solutions.insert(bus, sol);
            }
            tx_sol = Some(sol);
            if failed {
                break;
            }
            if dv_worst < opts.eps_v_pu && ds_worst < opts.eps_s_pu {
                converged = true;
                break;
            }
        }
        if !converged && diagnostics.is_empty() {
            diagnostics.push(format!(
                "boundary exchange did not settle within {} outer iterations",
                opts.max_outer
            ));
        }
    }

    let tx = match tx_sol {
        Some(t) => t,
        // Never entered the loop; report the plain network state.
        None => solve_powerflow(
            net,
            &overrides_for(net, &s_up, opts.lumped_lambda),
            None,
            &opts.pf,
        )?,
    };
    let boundary = buses
        .iter()
        .map(|&bus| {
            let (v, th) = tx.voltage(bus).unwrap_or((f64::NAN, f64::NAN));
            let s = s_up[bus];
            (
                bus.clone(),
                BoundaryState {
                    v_pu: v,
                    theta_rad: th,
                    p_up_mw: s.0,
                    q_up_mvar: s.1,
                    iteration: outer,
                },
            )
        })
        .collect();

    Ok(CosimResult {
        tx,
        feeders: feeder_solutions,
        boundary,
        converged,
        outer_iterations: outer,
        log,
        diagnostics,
    })
}

// ---------------------------------------------------------------------------
// Representation modes
// ---------------------------------------------------------------------------

/// A fully resolved study: the network, the feeders in their final form, and
/// everything mode dispatch needs. Built once per mode via [`build_study`],
/// then solved at as many lambdas as the caller wants.
#[derive(Debug, Clone)]
pub struct Study {
    pub mode: RepresentationMode,
    pub tx: TransmissionNetwork,
    /// Attached feeders; empty for NoD and EqFeeder.
    pub feeders: BTreeMap<String, DistributionFeeder>,
    /// Buses whose lumped load is lambda-scaled, with base (MW, MVAr):
    /// the NoD lump or the EqFeeder net-load bus.
    pub scalable_lumps: BTreeMap<String, (f64, f64)>,
    /// Branch index of each attachment's equivalent branch (EqFeeder only).
    pub eq_branches: BTreeMap<String, usize>,
    pub equivalents: BTreeMap<String, EquivalentFeeder>,
    pub monitored_bus: String,
    pub scale_all_loads: bool,
    /// Total scalable base real load, MW (what lambda multiplies).
    pub scalable_base_mw: f64,
}

/// Uniform single-point record across all four modes.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub mode: RepresentationMode,
    pub lambda: f64,
    pub converged: bool,
    /// Monitored voltage: the study bus for transmission-coupled modes, the
    /// weakest feeder node for DOnly.
    pub monitored_v_pu: f64,
    /// Net power drawn by the distribution representation at the monitored
    /// bus, MW / MVAr.
    pub boundary_p_mw: f64,
    pub boundary_q_mvar: f64,
    pub tx: Option<TxSolution>,
    pub feeders: BTreeMap<String, DxSolution>,
    pub boundary: BTreeMap<String, BoundaryState>,
    pub outer_iterations: usize,
}

fn apply_dg_override(
    feeders: &BTreeMap<String, DistributionFeeder>,
    mode: Option<crate::netmodel::DgMode>,
) -> BTreeMap<String, DistributionFeeder> {
    feeders
        .iter()
        .map(|(bus, f)| {
            let mut f = f.clone();
            if let Some(m) = mode {
                for dg in &mut f.dgs {
                    dg.mode = m;
                }
            }
            (bus.clone(), f)
        })
        .collect()
}

/// Resolve a loaded scenario into a study for one representation mode.
/// `variant` picks a named attachment set (`cosim-bal` style selectors pass
/// the suffix here). NoD and EqFeeder studies derive their lumped stand-ins
/// from a feeder calibration solve at the schedule's starting lambda.
pub fn build_study(
    loaded: &LoadedScenario,
    mode: RepresentationMode,
    variant: Option<&str>,
    opts: &CosimOptions,
) -> Result<Study, CosimError> {
    let scenario = &loaded.scenario;
    let feeders_src = match variant {
        None => &loaded.feeders,
        Some(name) => loaded
            .variants
            .get(name)
            .ok_or_else(|| CosimError::UnknownVariant(name.to_string()))?,
    };
    if feeders_src.is_empty() {
        // A pure-transmission study: lambda scales the monitored bus's own
        // lumped load. Only the lumped representation can express this.
        if mode != RepresentationMode::NoD {
            return Err(CosimError::ModeMismatch {
                mode,
                problem: "requires at least one feeder attachment".into(),
            });
        }
        let monitored_bus = scenario.monitored_bus.clone().ok_or_else(|| {
            CosimError::BaseCase("a lumped study needs an explicit monitored_bus".into())
        })?;
        let bus = loaded
            .tx
            .bus(&monitored_bus)
            .ok_or_else(|| CosimError::UnknownBus(monitored_bus.clone()))?;
        if bus.bus_type != BusType::Pq {
            return Err(CosimError::AttachmentNotPq(monitored_bus.clone()));
        }
        let scale_all = scenario.scale_scope == ScaleScope::AllLoads;
        let lumps: BTreeMap<String, (f64, f64)> =
            [(monitored_bus.clone(), (bus.load_mw, bus.load_mvar))].into();
        let others: f64 = loaded
            .tx
            .buses
            .iter()
            .filter(|b| b.id != monitored_bus)
            .map(|b| b.load_mw)
            .sum();
        return Ok(Study {
            mode,
            tx: loaded.tx.clone(),
            feeders: BTreeMap::new(),
            scalable_base_mw: bus.load_mw + if scale_all { others } else { 0.0 },
            scalable_lumps: lumps,
            eq_branches: BTreeMap::new(),
            equivalents: BTreeMap::new(),
            monitored_bus,
            scale_all_loads: scale_all,
        });
    }
    let feeders = apply_dg_override(feeders_src, scenario.dg_mode_override);
    let monitored_bus = scenario
        .monitored_bus
        .clone()
        .or_else(|| feeders.keys().next().cloned())
        .expect("non-empty attachments");
    let scale_all = scenario.scale_scope == ScaleScope::AllLoads;
    let cal_lambda = if scenario.lambda_schedule.start > 0.0 {
        scenario.lambda_schedule.start
    } else {
        1.0
    };

    for bus_id in feeders.keys() {
        let bus = loaded
            .tx
            .bus(bus_id)
            .ok_or_else(|| CosimError::UnknownBus(bus_id.clone()))?;
        if bus.bus_type != BusType::Pq {
            return Err(CosimError::AttachmentNotPq(bus_id.clone()));
        }
    }

    let feeder_scalable: f64 = feeders.values().map(|f| f.total_base_load().0).sum();

    match mode {
        RepresentationMode::CoSim | RepresentationMode::DOnly => Ok(Study {
            mode,
            tx: loaded.tx.clone(),
            scalable_base_mw: feeder_scalable
                + if scale_all {
                    other_lumped_mw(&loaded.tx, &feeders)
                } else {
                    0.0
                },
            feeders,
            scalable_lumps: BTreeMap::new(),
            eq_branches: BTreeMap::new(),
            equivalents: BTreeMap::new(),
            monitored_bus,
            scale_all_loads: scale_all,
        }),
        RepresentationMode::NoD => {
            // Lumped stand-in: net substation power from a nominal-voltage
            // feeder solve, scaled linearly with lambda (loss folded into
            // the load).
            let mut lumps = BTreeMap::new();
            for (bus, feeder) in &feeders {
                let sol = solve_feeder(
                    feeder,
                    SubstationVoltage::nominal(),
                    cal_lambda,
                    &opts.sweep,
                    None,
                )?;
                if !sol.converged || sol.low_voltage {
                    return Err(CosimError::BaseCase(format!(
                        "feeder at bus `{bus}` did not solve at nominal voltage"
                    )));
                }
                lumps.insert(
                    bus.clone(),
                    (sol.p_sub_mw / cal_lambda, sol.q_sub_mvar / cal_lambda),
                );
            }
            Ok(Study {
                mode,
                tx: loaded.tx.clone(),
                feeders: BTreeMap::new(),
                scalable_base_mw: lumps.values().map(|l| l.0).sum::<f64>()
                    + if scale_all {
                        other_lumped_mw(&loaded.tx, &feeders)
                    } else {
                        0.0
                    },
                scalable_lumps: lumps,
                eq_branches: BTreeMap::new(),
                equivalents: BTreeMap::new(),
                monitored_bus,
                scale_all_loads: scale_all,
            })
        }
        RepresentationMode::EqFeeder => {
            // Calibration: the boundary operating point comes from the
            // coupled fixed point at the starting lambda (a tight boundary
            // exchange), so the equivalent reproduces the feeder exactly
            // where the study begins.
            let attachments: BTreeMap<String, &DistributionFeeder> =
                feeders.iter().map(|(b, f)| (b.clone(), f)).collect();
            let mut cal_opts = *opts;
            cal_opts.eps_v_pu = 1e-6;
            cal_opts.eps_s_pu = 1e-6;
            let fixed = solve_cosim(&loaded.tx, &attachments, cal_lambda, &cal_opts)?;
            if !fixed.converged {
                return Err(CosimError::BaseCase(format!(
                    "calibration exchange did not settle: {}",
                    fixed.diagnostics.join("; ")
                )));
            }

            let mut tx = loaded.tx.clone();
            let mut lumps = BTreeMap::new();
            let mut eq_branches = BTreeMap::new();
            let mut equivalents = BTreeMap::new();
            for bus in feeders.keys() {
                let v = fixed.boundary[bus].v_pu;
                let sol = &fixed.feeders[bus];
                let eq = compute_equivalent(sol, v, loaded.tx.s_base_mva, cal_lambda)?;
                let branch_index = tx.branches.len();
                let df_bus = crate::equivalents::attach_equivalent(&mut tx, bus, &eq);
                eq_branches.insert(bus.clone(), branch_index);
                lumps.insert(
                    df_bus,
                    (eq.net_load_mw / cal_lambda, eq.net_load_mvar / cal_lambda),
                );
                equivalents.insert(bus.clone(), eq);
            }
            Ok(Study {
                mode,
                tx,
                feeders: BTreeMap::new(),
                scalable_base_mw: lumps.values().map(|l| l.0).sum::<f64>()
                    + if scale_all {
                        other_lumped_mw(&loaded.tx, &feeders)
                    } else {
                        0.0
                    },
                scalable_lumps: lumps,
                eq_branches,
                equivalents,
                monitored_bus,
                scale_all_loads: scale_all,
            })
        }
    }
}

fn other_lumped_mw(
    tx: &TransmissionNetwork,
    attachments: &BTreeMap<String, DistributionFeeder>,
) -> f64 {
    tx.buses
        .iter()
        .filter(|b| !attachments.contains_key(&b.id))
        .map(|b| b.load_mw)
        .sum()
}

/// Solve the study at one load scale. All four modes return the same record
/// shape so curves can sit side by side.
pub fn run_mode(
    study: &Study,
    lambda: f64,
    opts: &CosimOptions,
) -> Result<ModeSolution, CosimError> {
    let lumped_lambda = if study.scale_all_loads {
        Some(lambda)
    } else {
        None
    };
    match study.mode {
        RepresentationMode::NoD | RepresentationMode::EqFeeder => {
            let mut boundary: BTreeMap<String, (f64, f64)> = BTreeMap::new();
            for (bus, &(p, q)) in &study.scalable_lumps {
                boundary.insert(bus.clone(), (p * lambda, q * lambda));
            }
            let ov = overrides_for(&study.tx, &boundary, lumped_lambda);
            let sol = solve_powerflow(&study.tx, &ov, None, &opts.pf)?;
            let converged = sol.converged;
            let (v, _) = sol
                .voltage(&study.monitored_bus)
                .ok_or_else(|| CosimError::UnknownBus(study.monitored_bus.clone()))?;
            let (p_b, q_b) = match study.mode {
                RepresentationMode::NoD => study
                    .scalable_lumps
                    .get(&study.monitored_bus)
                    .map(|&(p, q)| (p * lambda, q * lambda))
                    .unwrap_or((0.0, 0.0)),
                _ => study
                    .eq_branches
                    .get(&study.monitored_bus)
                    .map(|&i| (sol.p_flow_mw[i], sol.q_flow_mvar[i]))
                    .unwrap_or((0.0, 0.0)),
            };
            Ok(ModeSolution {
                mode: study.mode,
                lambda,
                converged,
                monitored_v_pu: v,
                boundary_p_mw: p_b,
                boundary_q_mvar: q_b,
                tx: Some(sol),
                feeders: BTreeMap::new(),
                boundary: BTreeMap::new(),
                outer_iterations: 0,
            })
        }
        RepresentationMode::DOnly => {
            // Substation held at nominal voltage; the transmission side does
            // not exist in this representation.
            let mut feeders = BTreeMap::new();
            let mut converged = true;
            let mut v_min = f64::INFINITY;
            let mut p_b = 0.0;
            let mut q_b = 0.0;
            for (bus, feeder) in &study.feeders {
                let sol = solve_feeder(
                    feeder,
                    SubstationVoltage::nominal(),
                    lambda,
                    &opts.sweep,
                    None,
                )?;
                converged &= sol.converged && !sol.low_voltage;
                if sol.converged {
                    v_min = v_min.min(sol.min_v_pu());
                    if *bus == study.monitored_bus {
                        p_b = sol.p_sub_mw;
                        q_b = sol.q_sub_mvar;
                    }
                }
                feeders.insert(bus.clone(), sol);
            }
            Ok(ModeSolution {
                mode: study.mode,
                lambda,
                converged,
                monitored_v_pu: if v_min.is_finite() { v_min } else { f64::NAN },
                boundary_p_mw: p_b,
                boundary_q_mvar: q_b,
                tx: None,
                feeders,
                boundary: BTreeMap::new(),
                outer_iterations: 0,
            })
        }
        RepresentationMode::CoSim => {
            let attachments: BTreeMap<String, &DistributionFeeder> = study
                .feeders
                .iter()
                .map(|(bus, f)| (bus.clone(), f))
                .collect();
            let mut cs_opts = *opts;
            cs_opts.lumped_lambda = lumped_lambda;
            let result = solve_cosim(&study.tx, &attachments, lambda, &cs_opts)?;
            let converged = result.converged;
            let (v, _) = result
                .tx
                .voltage(&study.monitored_bus)
                .unwrap_or((f64::NAN, f64::NAN));
            let (p_b, q_b) = result
                .boundary
                .get(&study.monitored_bus)
                .map(|b| (b.p_up_mw, b.q_up_mvar))
                .unwrap_or((0.0, 0.0));
            Ok(ModeSolution {
                mode: study.mode,
                lambda,
                converged,
                monitored_v_pu: v,
                boundary_p_mw: p_b,
                boundary_q_mvar: q_b,
                outer_iterations: result.outer_iterations,
                feeders: result.feeders.clone(),
                boundary: result.boundary.clone(),
                tx: Some(result.tx),
            })
        }
    }
}

#[cfg(test)]
mod tests;
