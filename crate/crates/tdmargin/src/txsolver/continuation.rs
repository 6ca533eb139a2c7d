//! Predictor-corrector continuation power flow.
//!
//! Traces the full lambda-V curve through the nose. The predictor steps along
//! the tangent of the augmented system [theta, v, lambda]; the corrector is a
//! Newton solve with one state component held fixed (local
//! parameterization). The continuation parameter switches from lambda to the
//! monitored bus voltage when the tangent's lambda component falls below the
//! monitored dV component, which is what lets the trace round the nose and
//! follow the lower branch.

use super::{
    flat_start, newton_solve, scheduled_injection, LoadOverrides, NrState, PowerFlowOptions,
    TxError, TxSolution, YBus,
};
use crate::netmodel::TransmissionNetwork;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    /// Initial step in the continuation parameter.
    pub initial_step: f64,
    /// Abort threshold for step halving.
    pub min_step: f64,
    /// Growth factor applied after two clean steps (capped at
    /// `initial_step`).
    pub step_growth: f64,
    /// Step cap while parameterized by voltage; keeps the lower branch
    /// densely sampled.
    pub voltage_step_cap: f64,
    /// Stop once the monitored voltage falls below this.
    pub v_floor_pu: f64,
    pub max_points: usize,
    pub corrector_tolerance: f64,
    pub corrector_max_iterations: usize,
    pub pf: PowerFlowOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            initial_step: 0.1,
            min_step: 1e-4,
            step_growth: 1.25,
            voltage_step_cap: 0.015,
            v_floor_pu: 0.4,
            max_points: 2000,
            corrector_tolerance: 1e-10,
            corrector_max_iterations: 30,
            pf: PowerFlowOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchMarker {
    Upper,
    Nose,
    Lower,
}

impl BranchMarker {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchMarker::Upper => "upper",
            BranchMarker::Nose => "nose",
            BranchMarker::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TracePoint {
    pub lambda: f64,
    pub v_monitored_pu: f64,
    pub marker: BranchMarker,
    pub solution: TxSolution,
}

#[derive(Debug, Clone)]
pub struct ContinuationTrace {
    pub points: Vec<TracePoint>,
    pub nose_lambda: f64,
    pub monitored_bus: String,
    /// False when the trace stopped early (step collapse before descending
    /// the lower branch).
    pub complete: bool,
}

impl ContinuationTrace {
    /// `lambda,v_pu,branch_marker` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,v_pu,branch_marker\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.8},{:.8},{}\n",
                p.lambda,
                p.v_monitored_pu,
                p.marker.as_str()
            ));
        }
        out
    }

    pub fn lower_branch_len(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.marker == BranchMarker::Lower)
            .count()
    }
}

/// Index space of the augmented state [theta(pv+pq), v(pq), lambda].
struct AugSpace {
    pv_pq: Vec<usize>,
    pq: Vec<usize>,
    dim: usize,
    lambda_index: usize,
}

impl AugSpace {
    fn new(yb: &YBus) -> AugSpace {
        let pv_pq: Vec<usize> = yb.pv.iter().chain(yb.pq.iter()).copied().collect();
        let dim = pv_pq.len() + yb.pq.len() + 1;
        AugSpace {
            lambda_index: dim - 1,
            pq: yb.pq.clone(),
            pv_pq,
            dim,
        }
    }

    /// Index of a PQ bus voltage inside the augmented state.
    fn v_index(&self, bus: usize) -> Option<usize> {
        self.pq
            .iter()
            .position(|&b| b == bus)
            .map(|k| self.pv_pq.len() + k)
    }

    fn unpack(&self, x: &[f64], v: &mut [f64], theta: &mut [f64]) -> f64 {
        for (k, &i) in self.pv_pq.iter().enumerate() {
            theta[i] = x[k];
        }
        for (k, &i) in self.pq.iter().enumerate() {
            v[i] = x[self.pv_pq.len() + k];
        }
        x[self.lambda_index]
    }
}

struct CpfSystem<'a> {
    yb: &'a YBus,
    space: AugSpace,
    /// Scheduled injection at lambda = 0, pu.
    s_fixed: Vec<Complex64>,
    /// Injection decrement per unit lambda, pu (load growth direction).
    s_dir: Vec<Complex64>,
    v_work: Vec<f64>,
    theta_work: Vec<f64>,
}

impl<'a> CpfSystem<'a> {
    fn mismatch(&mut self, x: &[f64]) -> Vec<f64> {
        let lambda = self.space.unpack(x, &mut self.v_work, &mut self.theta_work);
        let s_calc = self.yb.injections(&self.v_work, &self.theta_work);
        let mut f = Vec::with_capacity(self.space.dim - 1);
        for &i in &self.space.pv_pq {
            let sched = self.s_fixed[i].re - lambda * self.s_dir[i].re;
            f.push(sched - s_calc[i].re);
        }
        for &i in &self.space.pq {
            let sched = self.s_fixed[i].im - lambda * self.s_dir[i].im;
            f.push(sched - s_calc[i].im);
        }
        f
    }

    /// Jacobian of the mismatch vector (dF/dx), an m x (m+1) block extended
    /// with the parameterization row e_k.
    fn aug_jacobian(&mut self, x: &[f64], param: usize) -> DMatrix<f64> {
        self.space.unpack(x, &mut self.v_work, &mut self.theta_work);
        let m = self.space.dim - 1;
        let inner = super::jacobian(self.yb, &self.v_work, &self.theta_work, &self.space.pv_pq);
        let mut j = DMatrix::zeros(self.space.dim, self.space.dim);
        // dF/d(theta, v) = -dS_calc/d(theta, v)
        for r in 0..m {
            for c in 0..m {
                j[(r, c)] = -inner[(r, c)];
            }
        }
        // dF/dlambda = -s_dir
        for (r, &i) in self.space.pv_pq.iter().enumerate() {
            j[(r, self.space.lambda_index)] = -self.s_dir[i].re;
        }
        for (r, &i) in self.space.pq.iter().enumerate() {
            j[(self.space.pv_pq.len() + r, self.space.lambda_index)] = -self.s_dir[i].im;
        }
        j[(m, param)] = 1.0;
        j
    }

    /// Newton corrector holding component `param` fixed. Returns false when
    /// it fails to converge.
    fn correct(&mut self, x: &mut [f64], param: usize, opts: &ContinuationOptions) -> bool {
        for _ in 0..opts.corrector_max_iterations {
            let f = self.mismatch(x);
            let worst = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if worst < opts.corrector_tolerance {
                return true;
            }
            let j = self.aug_jacobian(x, param);
            let mut rhs = DVector::zeros(self.space.dim);
            for (r, fv) in f.iter().enumerate() {
                rhs[r] = -fv;
            }
            let Some(dx) = j.lu().solve(&rhs) else {
                return false;
            };
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += dx[i];
            }
            if x.iter().any(|v| !v.is_finite()) {
                return false;
            }
        }
        false
    }

    /// Unit-parameter tangent: solves the augmented system for the nullspace
    /// direction of dF, normalized so the `param` component is one.
    fn tangent(&mut self, x: &[f64], param: usize) -> Option<DVector<f64>> {
        let j = self.aug_jacobian(x, param);
        let mut rhs = DVector::zeros(self.space.dim);
        rhs[self.space.dim - 1] = 1.0;
        j.lu().solve(&rhs)
    }
}

/// Trace the lambda-V curve for a load growth `direction` (MW/MVAr per unit
/// lambda, replacing the lumped load at those buses; all other bus loads stay
/// fixed). The trace starts from a solved base case at `lambda_start`, rounds
/// the nose and follows the lower branch until the monitored voltage drops
/// below the floor or lambda falls back below `lambda_start`.
pub fn trace_pv_curve(
    net: &TransmissionNetwork,
    direction: &LoadOverrides,
    monitored_bus: &str,
    lambda_start: f64,
    opts: &ContinuationOptions,
) -> Result<ContinuationTrace, TxError> {
    let yb = YBus::build(net)?;
    let dir_norm: f64 = direction.values().map(|(p, q)| p.abs() + q.abs()).sum();
    if direction.is_empty() || dir_norm == 0.0 {
        return Err(TxError::DegenerateDirection);
    }
    for bus in direction.keys() {
        if !yb.index.contains_key(bus) {
            return Err(TxError::UnknownBus(bus.clone()));
        }
    }
    let mon = *yb
        .index
        .get(monitored_bus)
        .ok_or_else(|| TxError::UnknownBus(monitored_bus.to_string()))?;

    let space = AugSpace::new(&yb);
    let Some(mon_v_index) = space.v_index(mon) else {
        return Err(TxError::NotLoadBus(monitored_bus.to_string()));
    };
    let lambda_index = space.lambda_index;

    // Scheduled injection split into a fixed part and a per-lambda direction.
    // Buses named in `direction` have their lumped load replaced by
    // lambda * direction.
    let mut zeroed = LoadOverrides::new();
    for bus in direction.keys() {
        zeroed.insert(bus.clone(), (0.0, 0.0));
    }
    let s_fixed = scheduled_injection(net, &zeroed);
    let mut s_dir = vec![Complex64::default(); yb.n];
    for (bus, (p, q)) in direction {
        s_dir[yb.index[bus]] = Complex64::new(*p, *q) / net.s_base_mva;
    }

    // Base case at lambda_start via a plain Newton solve.
    let base_overrides: LoadOverrides = direction
        .iter()
        .map(|(bus, (p, q))| (bus.clone(), (lambda_start * p, lambda_start * q)))
        .collect();
    let mut state = flat_start(net, &yb);
    let sched0 = scheduled_injection(net, &base_overrides);
    let (ok, _, _) = newton_solve(&yb, &sched0, &mut state, &opts.pf);
    if !ok {
        return Err(TxError::BaseCaseDiverged);
    }

    let mut sys = CpfSystem {
        yb: &yb,
        s_fixed,
        s_dir,
        v_work: state.v.clone(),
        theta_work: state.theta.clone(),
        space,
    };

    // Pack the augmented state.
    let mut x = vec![0.0; sys.space.dim];
    for (k, &i) in sys.space.pv_pq.iter().enumerate() {
        x[k] = state.theta[i];
    }
    for (k, &i) in sys.space.pq.iter().enumerate() {
        x[sys.space.pv_pq.len() + k] = state.v[i];
    }
    x[lambda_index] = lambda_start;

    let snapshot = |sys: &mut CpfSystem, x: &[f64]| -> (f64, f64, TxSolution) {
        let lambda = sys.space.unpack(x, &mut sys.v_work, &mut sys.theta_work);
        let st = NrState {
            v: sys.v_work.clone(),
            theta: sys.theta_work.clone(),
        };
        let sol = super::package_solution(net, sys.yb, &st, true, 0, 0.0);
        (lambda, sys.v_work[mon], sol)
    };

    let mut raw_points = Vec::new();
    let (l0, v0, sol0) = snapshot(&mut sys, &x);
    raw_points.push((l0, v0, sol0));

    let mut param = lambda_index;
    let mut prev_tangent: Option<DVector<f64>> = None;
    let mut step = opts.initial_step;
    let mut clean_streak = 0usize;
    let mut complete = false;

    while raw_points.len() < opts.max_points {
        // Tangent at the current point; fall back to voltage
        // parameterization if the lambda-parameterized system is singular
        // (exactly at the nose).
        let mut t = match sys.tangent(&x, param) {
            Some(t) => t,
            None => {
                param = mon_v_index;
                match sys.tangent(&x, param) {
                    Some(t) => t,
                    None => break,
                }
            }
        };
        if let Some(prev) = &prev_tangent {
            if t.dot(prev) < 0.0 {
                t = -t;
            }
        } else if t[lambda_index] < 0.0 {
            t = -t;
        }

        // Local parameterization rule: leave lambda for the monitored
        // voltage once the nose flattens the lambda component.
        param = if t[lambda_index].abs() < t[mon_v_index].abs() {
            mon_v_index
        } else {
            lambda_index
        };
        let scale = t[param].abs();
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        // Normalize so the step applies to the chosen parameter.
        let t_scaled = &t / scale;

        let mut this_step = step;
        if param == mon_v_index {
            this_step = this_step.min(opts.voltage_step_cap);
        }

        let predicted = DVector::from_vec(x.clone()) + &t_scaled * this_step;
        let mut xc: Vec<f64> = predicted.iter().copied().collect();
        let mut ok = sys.correct(&mut xc, param, opts);
        // Reject correctors that wandered to non-physical voltage.
        if ok {
            for &vi in &xc[sys.space.pv_pq.len()..sys.space.dim - 1] {
                if vi <= 0.05 {
                    ok = false;
                }
            }
        }

        if !ok {
            clean_streak = 0;
            step *= 0.5;
            if step < opts.min_step {
                break;
            }
            continue;
        }

        x = xc;
        prev_tangent = Some(t_scaled);
        clean_streak += 1;
        if clean_streak >= 2 {
            step = (step * opts.step_growth).min(opts.initial_step);
            clean_streak = 0;
        }

        let (lambda, v_mon, sol) = snapshot(&mut sys, &x);
        raw_points.push((lambda, v_mon, sol));

        if v_mon < opts.v_floor_pu || lambda < lambda_start {
            complete = true;
            break;
        }
    }

    // Assign branch markers around the maximum-lambda point.
    let nose_idx = raw_points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let nose_lambda = raw_points[nose_idx].0;
    let points = raw_points
        .into_iter()
        .enumerate()
        .map(|(i, (lambda, v, sol))| TracePoint {
            lambda,
            v_monitored_pu: v,
            marker: match i.cmp(&nose_idx) {
                std::cmp::Ordering::Less => BranchMarker::Upper,
                std::cmp::Ordering::Equal => BranchMarker::Nose,
                std::cmp::Ordering::Greater => BranchMarker::Lower,
            },
            solution: sol,
        })
        .collect();

    Ok(ContinuationTrace {
        points,
        nose_lambda,
        monitored_bus: monitored_bus.to_string(),
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Branch, Bus, BusType};

    fn two_bus(r: f64, x: f64) -> TransmissionNetwork {
        TransmissionNetwork {
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
                    load_mw: 0.0,
                    load_mvar: 0.0,
                },
            ],
            branches: vec![Branch {
                from: "1".into(),
                to: "2".into(),
                r_pu: r,
                x_pu: x,
                b_pu: 0.0,
                rating_mva: 0.0,
            }],
            generators: vec![],
        }
    }

    #[test]
    fn lossless_nose_matches_maximum_power_transfer() {
        // Unity-pf load through x = 0.3: P_max = 1 / (2 * 0.3).
        let net = two_bus(0.0, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (100.0, 0.0))].into();
        let trace = trace_pv_curve(&net, &dir, "2", 0.0, &ContinuationOptions::default()).unwrap();
        let expected = 1.0 / 0.6;
        assert!(
            (trace.nose_lambda - expected).abs() / expected < 1e-3,
            "nose {} vs {expected}",
            trace.nose_lambda
        );
        assert!(trace.complete);
        assert!(
            trace.lower_branch_len() >= 10,
            "lower branch has {} points",
            trace.lower_branch_len()
        );
    }

    #[test]
    fn nose_voltage_near_invsqrt2_for_lossless_line() {
        let net = two_bus(0.0, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (100.0, 0.0))].into();
        let trace = trace_pv_curve(&net, &dir, "2", 0.0, &ContinuationOptions::default()).unwrap();
        let nose = trace
            .points
            .iter()
            .find(|p| p.marker == BranchMarker::Nose)
            .unwrap();
        assert!((nose.v_monitored_pu - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let net = two_bus(0.0, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (0.0, 0.0))].into();
        assert!(matches!(
            trace_pv_curve(&net, &dir, "2", 0.0, &ContinuationOptions::default()),
            Err(TxError::DegenerateDirection)
        ));
    }

    #[test]
    fn corrector_rerun_does_not_move_points() {
        let net = two_bus(0.05, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (100.0, 20.0))].into();
        let opts = ContinuationOptions::default();
        let trace = trace_pv_curve(&net, &dir, "2", 0.0, &opts).unwrap();
        // Re-solving each upper-branch point with plain Newton at its lambda
        // reproduces the recorded voltage.
        for p in trace
            .points
            .iter()
            .filter(|p| p.marker == BranchMarker::Upper)
        {
            let ov: LoadOverrides = [("2".to_string(), (100.0 * p.lambda, 20.0 * p.lambda))].into();
            let sol =
                super::super::solve_powerflow(&net, &ov, Some(&p.solution), &opts.pf).unwrap();
            assert!(sol.converged);
            let (v, _) = sol.voltage("2").unwrap();
            assert!(
                (v - p.v_monitored_pu).abs() < 1e-8,
                "lambda {}: {v} vs {}",
                p.lambda,
                p.v_monitored_pu
            );
        }
    }

    #[test]
    fn truncated_trace_is_flagged_incomplete() {
        let net = two_bus(0.0, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (100.0, 0.0))].into();
        let opts = ContinuationOptions {
            max_points: 3,
            ..ContinuationOptions::default()
        };
        let trace = trace_pv_curve(&net, &dir, "2", 0.0, &opts).unwrap();
        assert!(!trace.complete);
        assert_eq!(trace.points.len(), 3);
    }

    #[test]
    fn csv_export_shape() {
        let net = two_bus(0.0, 0.3);
        let dir: LoadOverrides = [("2".to_string(), (100.0, 0.0))].into();
        let trace = trace_pv_curve(&net, &dir, "2", 0.0, &ContinuationOptions::default()).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "lambda,v_pu,branch_marker");
        assert!(csv.lines().count() == trace.points.len() + 1);
        assert!(csv.contains(",nose"));
    }
}
