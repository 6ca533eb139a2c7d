//! Balanced positive-sequence AC power flow.
//!
//! Full Newton-Raphson in polar coordinates on the nodal power balance
//! equations. Networks in this crate are small (tens of buses), so the
//! Jacobian is dense and factored with LU. Generator reactive limits are not
//! enforced.

mod continuation;

pub use continuation::{
    trace_pv_curve, BranchMarker, ContinuationOptions, ContinuationTrace, TracePoint,
};

use crate::netmodel::{BusType, ModelError, TransmissionNetwork};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TxError {
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("bus `{0}` is not a PQ bus")]
    NotLoadBus(String),
    #[error("base case power flow diverged")]
    BaseCaseDiverged,
    #[error("degenerate continuation direction")]
    DegenerateDirection,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    /// Convergence tolerance on the largest power mismatch, pu.
    pub tolerance_pu: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions {
            tolerance_pu: 1e-8,
            max_iterations: 20,
        }
    }
}

/// Per-bus load overrides in MW/MVAr, replacing the bus's lumped load.
pub type LoadOverrides = BTreeMap<String, (f64, f64)>;

#[derive(Debug, Clone)]
pub struct TxSolution {
    pub bus_ids: Vec<String>,
    pub v_pu: Vec<f64>,
    pub theta_rad: Vec<f64>,
    /// From-side branch flows, MW / MVAr, aligned with the network's branch
    /// list.
    pub p_flow_mw: Vec<f64>,
    pub q_flow_mvar: Vec<f64>,
    pub slack_p_mw: f64,
    pub slack_q_mvar: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch_pu: f64,
}

impl TxSolution {
    pub fn voltage(&self, bus: &str) -> Option<(f64, f64)> {
        self.bus_ids
            .iter()
            .position(|b| b == bus)
            .map(|i| (self.v_pu[i], self.theta_rad[i]))
    }
}

/// Precomputed admittance structure shared by the solver and the
/// continuation tracer.
pub(crate) struct YBus {
    pub n: usize,
    pub y: Vec<Vec<Complex64>>,
    pub index: BTreeMap<String, usize>,
    pub slack: usize,
    pub pv: Vec<usize>,
    pub pq: Vec<usize>,
}

impl YBus {
    pub fn build(net: &TransmissionNetwork) -> Result<YBus, TxError> {
        net.validate()?;
        let n = net.buses.len();
        let index: BTreeMap<String, usize> = net
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let mut y = vec![vec![Complex64::default(); n]; n];
        for br in &net.branches {
            let (i, j) = (index[&br.from], index[&br.to]);
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r_pu, br.x_pu);
            let ysh = Complex64::new(0.0, br.b_pu / 2.0);
            y[i][i] += ys + ysh;
            y[j][j] += ys + ysh;
            y[i][j] -= ys;
            y[j][i] -= ys;
        }
        let mut slack = 0;
        let mut pv = Vec::new();
        let mut pq = Vec::new();
        for (i, b) in net.buses.iter().enumerate() {
            match b.bus_type {
                BusType::Slack => slack = i,
                BusType::Pv => pv.push(i),
                BusType::Pq => pq.push(i),
            }
        }
        Ok(YBus {
            n,
            y,
            index,
            slack,
            pv,
            pq,
        })
    }

    /// Complex power injected at every bus for the given state, pu.
    pub fn injections(&self, v: &[f64], theta: &[f64]) -> Vec<Complex64> {
        let vc: Vec<Complex64> = (0..self.n)
            .map(|i| Complex64::from_polar(v[i], theta[i]))
            .collect();
        (0..self.n)
            .map(|i| {
                let mut i_sum = Complex64::default();
                for j in 0..self.n {
                    i_sum += self.y[i][j] * vc[j];
                }
                vc[i] * i_sum.conj()
            })
            .collect()
    }
}

/// Scheduled net injection (generation minus load) per bus, pu.
pub(crate) fn scheduled_injection(
    net: &TransmissionNetwork,
    overrides: &LoadOverrides,
) -> Vec<Complex64> {
    let index = net.bus_index();
    let mut s = vec![Complex64::default(); net.buses.len()];
    for (i, b) in net.buses.iter().enumerate() {
        let (p_load, q_load) = overrides
            .get(&b.id)
            .copied()
            .unwrap_or((b.load_mw, b.load_mvar));
        s[i] -= Complex64::new(p_load, q_load) / net.s_base_mva;
    }
    for g in &net.generators {
        s[index[g.bus.as_str()]] += Complex64::new(g.p_mw / net.s_base_mva, 0.0);
    }
    s
}

pub(crate) struct NrState {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

/// One Newton solve over the given scheduled injections. Mutates `state`
/// in place; returns (converged, iterations, max_mismatch).
pub(crate) fn newton_solve(
    yb: &YBus,
    s_sched: &[Complex64],
    state: &mut NrState,
    opts: &PowerFlowOptions,
) -> (bool, usize, f64) {
    let pv_pq: Vec<usize> = yb.pv.iter().chain(yb.pq.iter()).copied().collect();
    let npvpq = pv_pq.len();
    let npq = yb.pq.len();
    let dim = npvpq + npq;
    if dim == 0 {
        return (true, 0, 0.0);
    }

    let mismatch = |state: &NrState| -> Vec<f64> {
        let s_calc = yb.injections(&state.v, &state.theta);
        let mut f = Vec::with_capacity(dim);
        for &i in &pv_pq {
            f.push(s_sched[i].re - s_calc[i].re);
        }
        for &i in &yb.pq {
            f.push(s_sched[i].im - s_calc[i].im);
        }
        f
    };

    let mut f = mismatch(state);
    let mut max_mis = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut iterations = 0;
    while max_mis >= opts.tolerance_pu && iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(yb, &state.v, &state.theta, &pv_pq);
        let rhs = DVector::from_vec(f.clone());
        let lu = jac.lu();
        let Some(dx) = lu.solve(&rhs) else {
            return (false, iterations, max_mis);
        };
        for (k, &i) in pv_pq.iter().enumerate() {
            state.theta[i] += dx[k];
        }
        for (k, &i) in yb.pq.iter().enumerate() {
            state.v[i] += dx[npvpq + k];
        }
        if state.v.iter().any(|v| !v.is_finite() || *v <= 0.0)
            || state.theta.iter().any(|t| !t.is_finite())
        {
            return (false, iterations, f64::INFINITY);
        }
        f = mismatch(state);
        max_mis = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    (max_mis < opts.tolerance_pu, iterations, max_mis)
}

/// Dense power-flow Jacobian for unknowns [theta(pv+pq), v(pq)].
fn jacobian(yb: &YBus, v: &[f64], theta: &[f64], pv_pq: &[usize]) -> DMatrix<f64> {
    let npvpq = pv_pq.len();
    let npq = yb.pq.len();
    let dim = npvpq + npq;
    let s_calc = yb.injections(v, theta);
    let mut j = DMatrix::zeros(dim, dim);

    let g = |i: usize, k: usize| yb.y[i][k].re;
    let b = |i: usize, k: usize| yb.y[i][k].im;

    for (r, &i) in pv_pq.iter().enumerate() {
        // dP_i rows
        for (c, &k) in pv_pq.iter().enumerate() {
            j[(r, c)] = if i == k {
                -s_calc[i].im - b(i, i) * v[i] * v[i]
            } else {
                let t = theta[i] - theta[k];
                v[i] * v[k] * (g(i, k) * t.sin() - b(i, k) * t.cos())
            };
        }
        for (c, &k) in yb.pq.iter().enumerate() {
            j[(r, npvpq + c)] = if i == k {
                s_calc[i].re / v[i] + g(i, i) * v[i]
            } else {
                let t = theta[i] - theta[k];
                v[i] * (g(i, k) * t.cos() + b(i, k) * t.sin())
            };
        }
    }
    for (r, &i) in yb.pq.iter().enumerate() {
        // dQ_i rows
        for (c, &k) in pv_pq.iter().enumerate() {
            j[(npvpq + r, c)] = if i == k {
                s_calc[i].re - g(i, i) * v[i] * v[i]
            } else {
                let t = theta[i] - theta[k];
                -v[i] * v[k] * (g(i, k) * t.cos() + b(i, k) * t.sin())
            };
        }
        for (c, &k) in yb.pq.iter().enumerate() {
            j[(npvpq + r, npvpq + c)] = if i == k {
                s_calc[i].im / v[i] - b(i, i) * v[i]
            } else {
                let t = theta[i] - theta[k];
                v[i] * (g(i, k) * t.sin() - b(i, k) * t.cos())
            };
        }
    }

    // The Newton update solves J * dx = f with f = S_sched - S_calc, so the
    // conventional sign convention already matches.
    j
}

pub(crate) fn flat_start(net: &TransmissionNetwork, yb: &YBus) -> NrState {
    let mut v = vec![1.0; yb.n];
    let theta = vec![0.0; yb.n];
    for (i, bus) in net.buses.iter().enumerate() {
        if bus.bus_type != BusType::Pq {
            v[i] = bus.v_setpoint_pu;
        }
    }
    NrState { v, theta }
}

fn package_solution(
    net: &TransmissionNetwork,
    yb: &YBus,
    state: &NrState,
    converged: bool,
    iterations: usize,
    max_mismatch: f64,
) -> TxSolution {
    let sb = net.s_base_mva;
    let vc: Vec<Complex64> = (0..yb.n)
        .map(|i| Complex64::from_polar(state.v[i], state.theta[i]))
        .collect();
    let mut p_flow = Vec::with_capacity(net.branches.len());
    let mut q_flow = Vec::with_capacity(net.branches.len());
    for br in &net.branches {
        let (i, j) = (yb.index[&br.from], yb.index[&br.to]);
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r_pu, br.x_pu);
        let ysh = Complex64::new(0.0, br.b_pu / 2.0);
        let i_from = ys * (vc[i] - vc[j]) + ysh * vc[i];
        let s_from = vc[i] * i_from.conj() * sb;
        p_flow.push(s_from.re);
        q_flow.push(s_from.im);
    }
    let s_inj = yb.injections(&state.v, &state.theta);
    let slack_bus = &net.buses[yb.slack];
    let slack_s = s_inj[yb.slack] * sb + Complex64::new(slack_bus.load_mw, slack_bus.load_mvar);
    TxSolution {
        bus_ids: net.buses.iter().map(|b| b.id.clone()).collect(),
        v_pu: state.v.clone(),
        theta_rad: state.theta.clone(),
        p_flow_mw: p_flow,
        q_flow_mvar: q_flow,
        slack_p_mw: slack_s.re,
        slack_q_mvar: slack_s.im,
        converged,
        iterations,
        max_mismatch_pu: max_mismatch,
    }
}

/// Solve the AC power flow. `overrides` replace the lumped load at the named
/// buses; `warm` seeds the iteration with a previous solution instead of a
/// flat start. Non-convergence is reported through the solution flags, never
/// as a fabricated state.
pub fn solve_powerflow(
    net: &TransmissionNetwork,
    overrides: &LoadOverrides,
    warm: Option<&TxSolution>,
    opts: &PowerFlowOptions,
) -> Result<TxSolution, TxError> {
    let yb = YBus::build(net)?;
    for bus in overrides.keys() {
        if !yb.index.contains_key(bus) {
            return Err(TxError::UnknownBus(bus.clone()));
        }
    }
    let mut state = match warm {
        Some(sol) if sol.v_pu.len() == yb.n => NrState {
            v: sol.v_pu.clone(),
            theta: sol.theta_rad.clone(),
        },
        _ => flat_start(net, &yb),
    };
    // Pin controlled magnitudes and the slack angle regardless of start.
    for (i, bus) in net.buses.iter().enumerate() {
        if bus.bus_type != BusType::Pq {
            state.v[i] = bus.v_setpoint_pu;
        }
    }
    state.theta[yb.slack] = 0.0;
    let s_sched = scheduled_injection(net, overrides);
    let (converged, iterations, max_mis) = newton_solve(&yb, &s_sched, &mut state, opts);
    Ok(package_solution(
        net, &yb, &state, converged, iterations, max_mis,
    ))
}

/// Largest power-balance residual of a solution, re-evaluated from scratch,
/// pu. PV buses contribute only their real-power residual.
pub fn residual(
    net: &TransmissionNetwork,
    overrides: &LoadOverrides,
    sol: &TxSolution,
) -> Result<f64, TxError> {
    let yb = YBus::build(net)?;
    let s_calc = yb.injections(&sol.v_pu, &sol.theta_rad);
    let s_sched = scheduled_injection(net, overrides);
    let mut worst = 0.0f64;
    for &i in &yb.pv {
        worst = worst.max((s_sched[i].re - s_calc[i].re).abs());
    }
    for &i in &yb.pq {
        worst = worst.max((s_sched[i] - s_calc[i]).norm());
    }
    Ok(worst)
}

/// Replace the lumped load at a PQ bus, returning the modified network.
pub fn attach_boundary_load(
    net: &TransmissionNetwork,
    bus_id: &str,
    p_mw: f64,
    q_mvar: f64,
) -> Result<TransmissionNetwork, TxError> {
    let mut out = net.clone();
    let bus = out
        .buses
        .iter_mut()
        .find(|b| b.id == bus_id)
        .ok_or_else(|| TxError::UnknownBus(bus_id.to_string()))?;
    if bus.bus_type != BusType::Pq {
        return Err(TxError::NotLoadBus(bus_id.to_string()));
    }
    bus.load_mw = p_mw;
    bus.load_mvar = q_mvar;
    Ok(out)
}
