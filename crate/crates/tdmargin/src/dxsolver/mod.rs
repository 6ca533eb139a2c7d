//! Three-phase unbalanced power flow on radial feeders.
//!
//! Ladder-iterative (forward-backward sweep) solver working in physical
//! volts, amps and ohms. The backward pass accumulates phase currents from
//! ZIP loads evaluated at the present voltages minus DG injections; the
//! forward pass propagates voltage drops through the 3x3 phase impedance
//! matrices and transformer models. Iteration stops when no phase voltage
//! moves by more than the tolerance (in pu of the local zone nominal).
//!
//! Transformers appear as a per-phase series impedance behind an ideal ratio
//! formed from the zone voltages and the tap; phase-shifting connections are
//! treated as non-shifting.
//!
//! Non-convergence is reported through flags and is interpreted upstream as
//! operation past the loadability limit.

use crate::netmodel::{DgMode, DgUnit, DistributionFeeder, ModelError, Phase, ZipLoad};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DxError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dg distribution places {pct}% on phase {phase} but that phase carries no load")]
    DgOnUnloadedPhase { phase: Phase, pct: f64 },
    #[error("substation voltage must be positive on energized phases")]
    DeadSubstation,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Per-phase voltage convergence tolerance, pu.
    pub tolerance_pu: f64,
    pub max_iterations: usize,
    /// Converged solutions with any energized phase below this are flagged
    /// low-voltage non-physical.
    pub collapse_floor_pu: f64,
    /// Damping on volt-var reactive updates between sweeps.
    pub vvc_damping: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            tolerance_pu: 1e-6,
            max_iterations: 100,
            collapse_floor_pu: 0.3,
            vvc_damping: 0.5,
        }
    }
}

/// Substation (root) voltage specification.
#[derive(Debug, Clone, Copy)]
pub enum SubstationVoltage {
    /// Balanced positive-sequence set: magnitude in pu of the root zone
    /// nominal, angle in radians; phases B and C follow at -120/+120 degrees.
    Balanced { v_pu: f64, theta_rad: f64 },
    /// Explicit per-phase line-to-neutral volts.
    PerPhase([Complex64; 3]),
}

impl SubstationVoltage {
    pub fn nominal() -> SubstationVoltage {
        SubstationVoltage::Balanced {
            v_pu: 1.0,
            theta_rad: 0.0,
        }
    }

    fn phasors(&self, v_base_ln: f64) -> [Complex64; 3] {
        match *self {
            SubstationVoltage::Balanced { v_pu, theta_rad } => {
                let deg120 = 2.0 * std::f64::consts::PI / 3.0;
                [
                    Complex64::from_polar(v_pu * v_base_ln, theta_rad),
                    Complex64::from_polar(v_pu * v_base_ln, theta_rad - deg120),
                    Complex64::from_polar(v_pu * v_base_ln, theta_rad + deg120),
                ]
            }
            SubstationVoltage::PerPhase(v) => v,
        }
    }
}

/// Per-phase power totals, MW / MVAr.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhasePower {
    pub p_mw: f64,
    pub q_mvar: f64,
}

#[derive(Debug, Clone)]
pub struct DxSolution {
    pub node_ids: Vec<String>,
    /// Line-to-neutral volts per node and phase.
    pub node_voltage: Vec<[Complex64; 3]>,
    /// Voltage magnitude in pu of each node's zone nominal.
    pub node_v_pu: Vec<[f64; 3]>,
    /// Which phases are energized at each node.
    pub phase_active: Vec<[bool; 3]>,
    /// Series current per tree edge, amps, measured on the child side.
    /// `edge_to_node[k]` names the child node of edge `k`.
    pub edge_current: Vec<[Complex64; 3]>,
    pub edge_to_node: Vec<String>,
    pub p_sub_mw: f64,
    pub q_sub_mvar: f64,
    pub s_sub_mva: f64,
    pub sub_by_phase: [PhasePower; 3],
    pub total_load: PhasePower,
    pub load_by_phase: [PhasePower; 3],
    pub total_loss: PhasePower,
    pub loss_by_phase: [PhasePower; 3],
    pub total_dg: PhasePower,
    pub dg_by_phase: [PhasePower; 3],
    pub converged: bool,
    pub low_voltage: bool,
    pub iterations: usize,
    /// Max per-phase voltage change after each sweep, pu.
    pub delta_history: Vec<f64>,
}

impl DxSolution {
    pub fn node_index(&self, node: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == node)
    }

    /// Lowest energized-phase voltage across the feeder, pu.
    pub fn min_v_pu(&self) -> f64 {
        let mut min = f64::INFINITY;
        for (vs, active) in self.node_v_pu.iter().zip(&self.phase_active) {
            for ph in 0..3 {
                if active[ph] {
                    min = min.min(vs[ph]);
                }
            }
        }
        min
    }

    /// `node,phase,v_pu,angle_deg` rows for feeder-drop studies.
    pub fn voltage_profile_csv(&self) -> String {
        let mut out = String::from("node,phase,v_pu,angle_deg\n");
        for (i, node) in self.node_ids.iter().enumerate() {
            for ph in Phase::ALL {
                if !self.phase_active[i][ph.index()] {
                    continue;
                }
                let v = self.node_voltage[i][ph.index()];
                out.push_str(&format!(
                    "{},{},{:.6},{:.4}\n",
                    node,
                    ph,
                    self.node_v_pu[i][ph.index()],
                    v.arg().to_degrees()
                ));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Feeder graph preprocessing
// ---------------------------------------------------------------------------

enum EdgeKind {
    Line {
        /// Total series impedance, ohms.
        z: [[Complex64; 3]; 3],
        phasing: [bool; 3],
    },
    Transformer {
        /// Ideal voltage ratio from-side over to-side (includes tap).
        ratio: f64,
        /// Series impedance referred to the to-side, ohms per phase.
        z: Complex64,
    },
}

struct Edge {
    kind: EdgeKind,
    /// Index into DxSolution::edge_current.
    slot: usize,
}

struct FeederGraph {
    node_ids: Vec<String>,
    /// Parent node per node (root points at itself).
    parent: Vec<usize>,
    /// Edge connecting each non-root node to its parent.
    parent_edge: Vec<Option<Edge>>,
    /// Nodes in breadth-first order from the root.
    bfs: Vec<usize>,
    /// Nominal line-to-neutral volts per node.
    v_base_ln: Vec<f64>,
    phase_active: Vec<[bool; 3]>,
    /// Loads and DG grouped per node.
    loads: Vec<Vec<ZipLoad>>,
    dgs: Vec<Vec<DgUnit>>,
    edge_count: usize,
    /// Child node per edge slot.
    edge_to_node: Vec<usize>,
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

impl FeederGraph {
    fn build(feeder: &DistributionFeeder) -> Result<FeederGraph, DxError> {
        feeder.validate()?;
        let node_ids = feeder.node_ids();
        let index: BTreeMap<String, usize> = node_ids
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let n = node_ids.len();

        // Undirected adjacency with edge payloads, then orient away from the
        // root with a BFS.
        enum Proto<'a> {
            Line(&'a crate::netmodel::LineSection),
            Xfmr(&'a crate::netmodel::TransformerBranch),
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (other, proto idx)
        let mut protos = Vec::new();
        for s in &feeder.sections {
            let id = protos.len();
            protos.push(Proto::Line(s));
            adj[index[&s.from_node]].push((index[&s.to_node], id));
            adj[index[&s.to_node]].push((index[&s.from_node], id));
        }
        for t in &feeder.transformers {
            let id = protos.len();
            protos.push(Proto::Xfmr(t));
            adj[index[&t.from_node]].push((index[&t.to_node], id));
            adj[index[&t.to_node]].push((index[&t.from_node], id));
        }

        let root = index[&feeder.root_node];
        let root_zone_kv = feeder.zones[0].kv_ll;
        let mut parent = vec![usize::MAX; n];
        let mut parent_edge: Vec<Option<Edge>> = (0..n).map(|_| None).collect();
        let mut v_base_ln = vec![0.0; n];
        let mut phase_active = vec![[false; 3]; n];
        let mut bfs = vec![root];
        parent[root] = root;
        v_base_ln[root] = root_zone_kv * 1000.0 / SQRT3;
        phase_active[root] = [true; 3];

        let mut head = 0;
        let mut slot = 0;
        let mut edge_to_node = Vec::new();
        while head < bfs.len() {
            let u = bfs[head];
            head += 1;
            for &(v, pid) in &adj[u] {
                if parent[v] != usize::MAX {
                    continue;
                }
                parent[v] = u;
                let edge = match protos[pid] {
                    Proto::Line(s) => {
                        let m = feeder.section_impedance(s).map_err(DxError::Model)?;
                        let z = m.total_ohms();
                        let mut phasing = [false; 3];
                        for ph in m.phasing.iter() {
                            phasing[ph.index()] = true;
                        }
                        v_base_ln[v] = v_base_ln[u];
                        for ph in 0..3 {
                            phase_active[v][ph] = phase_active[u][ph] && phasing[ph];
                        }
                        EdgeKind::Line { z, phasing }
                    }
                    Proto::Xfmr(t) => {
                        // Oriented from-side must be the parent side; the
                        // casefile's from/to order matches tree orientation
                        // on radial feeders.
                        let (hi_zone, lo_zone) = if index[&t.from_node] == u {
                            (&t.from_zone, &t.to_zone)
                        } else {
                            (&t.to_zone, &t.from_zone)
                        };
                        let kv_from = feeder.zone_kv(hi_zone).expect("validated");
                        let kv_to = feeder.zone_kv(lo_zone).expect("validated");
                        let ratio = kv_from / kv_to * t.tap;
                        let z_base_to = kv_to * kv_to / t.rating_mva;
                        let z = Complex64::new(t.series_r_pu, t.series_x_pu) * z_base_to;
                        v_base_ln[v] = kv_to * 1000.0 / SQRT3;
                        phase_active[v] = phase_active[u];
                        EdgeKind::Transformer { ratio, z }
                    }
                };
                parent_edge[v] = Some(Edge { kind: edge, slot });
                edge_to_node.push(v);
                slot += 1;
                bfs.push(v);
            }
        }

        let mut loads = vec![Vec::new(); n];
        for l in &feeder.loads {
            let ni = index[&l.node];
            if !phase_active[ni][l.phase.index()] {
                return Err(DxError::Model(ModelError::Semantic(format!(
                    "load at `{}` sits on de-energized phase {}",
                    l.node, l.phase
                ))));
            }
            loads[ni].push(l.clone());
        }
        let mut dgs = vec![Vec::new(); n];
        for d in &feeder.dgs {
            let ni = index[&d.node];
            if !phase_active[ni][d.phase.index()] {
                return Err(DxError::Model(ModelError::Semantic(format!(
                    "dg at `{}` sits on de-energized phase {}",
                    d.node, d.phase
                ))));
            }
            dgs[ni].push(d.clone());
        }

        Ok(FeederGraph {
            node_ids,
            parent,
            parent_edge,
            bfs,
            v_base_ln,
            phase_active,
            loads,
            dgs,
            edge_count: slot,
            edge_to_node,
        })
    }
}

// ---------------------------------------------------------------------------
// DG injection
// ---------------------------------------------------------------------------

/// Steady-state DG output at a local voltage. UPF returns rated real power
/// and zero reactive. VVC holds rated real power and follows the droop curve
/// (flat beyond its endpoints); the result is clamped to the apparent-power
/// rating by reducing reactive output, never real.
pub fn dg_injection(dg: &DgUnit, v_node_pu: f64) -> (f64, f64) {
    match dg.mode {
        DgMode::Upf => (dg.p_rated_mw, 0.0),
        DgMode::Vvc => {
            let q_frac = piecewise(&dg.vvc_curve, v_node_pu);
            let mut q = q_frac * dg.s_rated_mva;
            let p = dg.p_rated_mw;
            let headroom = (dg.s_rated_mva * dg.s_rated_mva - p * p).max(0.0).sqrt();
            q = q.clamp(-headroom, headroom);
            (p, q)
        }
    }
}

fn piecewise(curve: &[(f64, f64)], v: f64) -> f64 {
    match curve {
        [] => 0.0,
        [only] => only.1,
        _ => {
            if v <= curve[0].0 {
                return curve[0].1;
            }
            if v >= curve[curve.len() - 1].0 {
                return curve[curve.len() - 1].1;
            }
            for w in curve.windows(2) {
                if v <= w[1].0 {
                    let t = (v - w[0].0) / (w[1].0 - w[0].0);
                    return w[0].1 + t * (w[1].1 - w[0].1);
                }
            }
            curve[curve.len() - 1].1
        }
    }
}

// ---------------------------------------------------------------------------
// Sweep solver
// ---------------------------------------------------------------------------

fn matvec(m: &[[Complex64; 3]; 3], v: &[Complex64; 3]) -> [Complex64; 3] {
    let mut out = [Complex64::default(); 3];
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            out[i] += z * v[j];
        }
    }
    out
}

/// Solve the feeder at the given substation voltage and load scale. ZIP base
/// powers scale with `lambda`; DG stays at its rated output. A previous
/// solution can seed the voltages (`warm`).
pub fn solve_feeder(
    feeder: &DistributionFeeder,
    substation: SubstationVoltage,
    lambda: f64,
    opts: &SweepOptions,
    warm: Option<&DxSolution>,
) -> Result<DxSolution, DxError> {
    let g = FeederGraph::build(feeder)?;
    let n = g.node_ids.len();
    let root = g.bfs[0];
    let v_root = substation.phasors(g.v_base_ln[root]);
    if v_root.iter().all(|v| v.norm() == 0.0) {
        return Err(DxError::DeadSubstation);
    }

    // Initial profile: nominal-ratio copy of the substation voltage, or the
    // warm start when shapes match.
    let mut v: Vec<[Complex64; 3]> = match warm {
        Some(w) if w.node_ids == g.node_ids => w.node_voltage.clone(),
        _ => (0..n)
            .map(|i| {
                let scale = g.v_base_ln[i] / g.v_base_ln[root];
                [v_root[0] * scale, v_root[1] * scale, v_root[2] * scale]
            })
            .collect(),
    };
    v[root] = v_root;

    // Per-DG damped reactive state, flattened over nodes.
    let mut dg_q: Vec<Vec<f64>> = g.dgs.iter().map(|ds| vec![0.0; ds.len()]).collect();

    // Load and DG currents are kept separate so the final report can price
    // both at the last forward-pass voltages; that makes the substation /
    // load / loss / DG balance telescope to float precision.
    let mut i_load = vec![[Complex64::default(); 3]; n];
    let mut i_dg = vec![[Complex64::default(); 3]; n];
    let mut inj = vec![[Complex64::default(); 3]; n]; // load - dg current, A
    let mut flow = vec![[Complex64::default(); 3]; n]; // current into node from parent
    let mut edge_current = vec![[Complex64::default(); 3]; g.edge_count];
    let mut delta_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iterations {
        iterations = it + 1;
        // Injection currents from ZIP loads (lambda-scaled) and DG.
        let mut vvc_settled = true;
        for ni in 0..n {
            let mut s_load = [Complex64::default(); 3]; // MW + jMVAr consumed
            let mut s_dg = [Complex64::default(); 3];
            for l in &g.loads[ni] {
                let ph = l.phase.index();
                let v_pu = v[ni][ph].norm() / g.v_base_ln[ni];
                let (p, q) = l.zip_power(v_pu);
                s_load[ph] += Complex64::new(p, q) * lambda;
            }
            for (k, d) in g.dgs[ni].iter().enumerate() {
                let ph = d.phase.index();
                let v_pu = v[ni][ph].norm() / g.v_base_ln[ni];
                let (p, q_target) = dg_injection(d, v_pu);
                let q_prev = dg_q[ni][k];
                let q_new = q_prev + opts.vvc_damping * (q_target - q_prev);
                if (q_target - q_new).abs() > 1e-6 * d.s_rated_mva.max(1e-9) {
                    vvc_settled = false;
                }
                dg_q[ni][k] = q_new;
                s_dg[ph] += Complex64::new(p, q_new);
            }
            for ph in 0..3 {
                let vn = v[ni][ph];
                if (s_load[ph] != Complex64::default() || s_dg[ph] != Complex64::default())
                    && vn.norm() < 1.0
                {
                    // Volts; a dead node under constant-power load has no
                    // finite current. Bail out via non-convergence.
                    return Ok(failed_solution(&g, &v, iterations, delta_history));
                }
                i_load[ni][ph] = if s_load[ph] != Complex64::default() {
                    (s_load[ph] * 1e6 / vn).conj()
                } else {
                    Complex64::default()
                };
                i_dg[ni][ph] = if s_dg[ph] != Complex64::default() {
                    (s_dg[ph] * 1e6 / vn).conj()
                } else {
                    Complex64::default()
                };
                inj[ni][ph] = i_load[ni][ph] - i_dg[ni][ph];
            }
        }

        // Backward: accumulate currents toward the root.
        for &ni in g.bfs.iter().rev() {
            flow[ni] = inj[ni];
            // children contributions were added when visiting the children
        }
        for &ni in g.bfs.iter().rev() {
            if ni == root {
                continue;
            }
            let p = g.parent[ni];
            let edge = g.parent_edge[ni].as_ref().expect("non-root");
            let through = flow[ni];
            edge_current[edge.slot] = through;
            let up = match &edge.kind {
                EdgeKind::Line { .. } => through,
                EdgeKind::Transformer { ratio, .. } => {
                    [through[0] / ratio, through[1] / ratio, through[2] / ratio]
                }
            };
            for ph in 0..3 {
                flow[p][ph] += up[ph];
            }
        }

        // Forward: propagate voltage drops from the root.
        let mut delta = 0.0f64;
        for &ni in &g.bfs {
            if ni == root {
                continue;
            }
            let p = g.parent[ni];
            let edge = g.parent_edge[ni].as_ref().expect("non-root");
            let i_edge = edge_current[edge.slot];
            let v_new = match &edge.kind {
                EdgeKind::Line { z, phasing } => {
                    let drop = matvec(z, &i_edge);
                    let mut out = [Complex64::default(); 3];
                    for ph in 0..3 {
                        out[ph] = if phasing[ph] {
                            v[p][ph] - drop[ph]
                        } else {
                            v[p][ph] * (g.v_base_ln[ni] / g.v_base_ln[p])
                        };
                    }
                    out
                }
                EdgeKind::Transformer { ratio, z } => {
                    let mut out = [Complex64::default(); 3];
                    for ph in 0..3 {
                        out[ph] = v[p][ph] / ratio - z * i_edge[ph];
                    }
                    out
                }
            };
            for ph in 0..3 {
                let d = (v_new[ph] - v[ni][ph]).norm() / g.v_base_ln[ni];
                delta = delta.max(d);
            }
            v[ni] = v_new;
        }
        delta_history.push(delta);

        if !delta.is_finite() {
            return Ok(failed_solution(&g, &v, iterations, delta_history));
        }
        if delta < opts.tolerance_pu && vvc_settled {
            converged = true;
            break;
        }
        // Bail out early once the profile is clearly collapsing.
        if it >= 5 {
            let mut worst = f64::INFINITY;
            for ni in 0..n {
                for ph in 0..3 {
                    if g.phase_active[ni][ph] {
                        worst = worst.min(v[ni][ph].norm() / g.v_base_ln[ni]);
                    }
                }
            }
            if worst < 0.02 {
                return Ok(failed_solution(&g, &v, iterations, delta_history));
            }
        }
    }

    Ok(package(
        &g,
        &v,
        v_root,
        &edge_current,
        &i_load,
        &i_dg,
        converged,
        iterations,
        delta_history,
        opts,
    ))
}

fn failed_solution(
    g: &FeederGraph,
    v: &[[Complex64; 3]],
    iterations: usize,
    delta_history: Vec<f64>,
) -> DxSolution {
    DxSolution {
        node_ids: g.node_ids.clone(),
        node_voltage: v.to_vec(),
        node_v_pu: v
            .iter()
            .enumerate()
            .map(|(i, vs)| {
                [
                    vs[0].norm() / g.v_base_ln[i],
                    vs[1].norm() / g.v_base_ln[i],
                    vs[2].norm() / g.v_base_ln[i],
                ]
            })
            .collect(),
        phase_active: g.phase_active.clone(),
        edge_current: vec![[Complex64::default(); 3]; g.edge_count],
        edge_to_node: g
            .edge_to_node
            .iter()
            .map(|&ni| g.node_ids[ni].clone())
            .collect(),
        p_sub_mw: f64::NAN,
        q_sub_mvar: f64::NAN,
        s_sub_mva: f64::NAN,
        sub_by_phase: [PhasePower::default(); 3],
        total_load: PhasePower::default(),
        load_by_phase: [PhasePower::default(); 3],
        total_loss: PhasePower::default(),
        loss_by_phase: [PhasePower::default(); 3],
        total_dg: PhasePower::default(),
        dg_by_phase: [PhasePower::default(); 3],
        converged: false,
        low_voltage: true,
        iterations,
        delta_history,
    }
}

#[allow(clippy::too_many_arguments)]
fn package(
    g: &FeederGraph,
    v: &[[Complex64; 3]],
    v_root: [Complex64; 3],
    edge_current: &[[Complex64; 3]],
    i_load: &[[Complex64; 3]],
    i_dg: &[[Complex64; 3]],
    converged: bool,
    iterations: usize,
    delta_history: Vec<f64>,
    opts: &SweepOptions,
) -> DxSolution {
    let n = g.node_ids.len();
    let root = g.bfs[0];

    // Substation injection: the root's own net load current plus the sum
    // over its child edges, referred through any transformer ratio.
    let mut i_root = [Complex64::default(); 3];
    for ph in 0..3 {
        i_root[ph] = i_load[root][ph] - i_dg[root][ph];
    }
    for ni in 0..n {
        if ni == root || g.parent[ni] != root {
            continue;
        }
        let edge = g.parent_edge[ni].as_ref().expect("non-root");
        let through = edge_current[edge.slot];
        match &edge.kind {
            EdgeKind::Line { .. } => {
                for ph in 0..3 {
                    i_root[ph] += through[ph];
                }
            }
            EdgeKind::Transformer { ratio, .. } => {
                for ph in 0..3 {
                    i_root[ph] += through[ph] / ratio;
                }
            }
        }
    }
    let mut sub_by_phase = [PhasePower::default(); 3];
    for ph in 0..3 {
        let s = v_root[ph] * i_root[ph].conj() / 1e6;
        sub_by_phase[ph] = PhasePower {
            p_mw: s.re,
            q_mvar: s.im,
        };
    }

    // Losses from the series drops: for lines the full coupled drop, for
    // transformers the scalar series impedance.
    let mut loss_by_phase = [PhasePower::default(); 3];
    for ni in 0..n {
        if ni == root || g.parent[ni] == usize::MAX {
            continue;
        }
        let edge = g.parent_edge[ni].as_ref().expect("non-root");
        let i_edge = edge_current[edge.slot];
        match &edge.kind {
            EdgeKind::Line { z, .. } => {
                let drop = matvec(z, &i_edge);
                for ph in 0..3 {
                    let s = drop[ph] * i_edge[ph].conj() / 1e6;
                    loss_by_phase[ph].p_mw += s.re;
                    loss_by_phase[ph].q_mvar += s.im;
                }
            }
            EdgeKind::Transformer { z, .. } => {
                for ph in 0..3 {
                    let s = z * i_edge[ph] * i_edge[ph].conj() / 1e6;
                    loss_by_phase[ph].p_mw += s.re;
                    loss_by_phase[ph].q_mvar += s.im;
                }
            }
        }
    }

    // Loads and DG priced at the voltages the last forward pass produced,
    // with the same currents the backward pass used.
    let mut load_by_phase = [PhasePower::default(); 3];
    let mut dg_by_phase = [PhasePower::default(); 3];
    let mut node_v_pu = vec![[0.0; 3]; n];
    for ni in 0..n {
        for ph in 0..3 {
            let vpu = v[ni][ph].norm() / g.v_base_ln[ni];
            node_v_pu[ni][ph] = vpu;
            let s = v[ni][ph] * i_load[ni][ph].conj() / 1e6;
            load_by_phase[ph].p_mw += s.re;
            load_by_phase[ph].q_mvar += s.im;
            let s = v[ni][ph] * i_dg[ni][ph].conj() / 1e6;
            dg_by_phase[ph].p_mw += s.re;
            dg_by_phase[ph].q_mvar += s.im;
        }
    }

    let sum = |parts: &[PhasePower; 3]| PhasePower {
        p_mw: parts.iter().map(|p| p.p_mw).sum(),
        q_mvar: parts.iter().map(|p| p.q_mvar).sum(),
    };
    let total_load = sum(&load_by_phase);
    let total_loss = sum(&loss_by_phase);
    let total_dg = sum(&dg_by_phase);
    let sub = sum(&sub_by_phase);

    let low_voltage = converged
        && node_v_pu
            .iter()
            .zip(&g.phase_active)
            .any(|(vs, act)| (0..3).any(|ph| act[ph] && vs[ph] < opts.collapse_floor_pu));

    DxSolution {
        node_ids: g.node_ids.clone(),
        node_voltage: v.to_vec(),
        node_v_pu,
        phase_active: g.phase_active.clone(),
        edge_current: edge_current.to_vec(),
        edge_to_node: g
            .edge_to_node
            .iter()
            .map(|&ni| g.node_ids[ni].clone())
            .collect(),
        p_sub_mw: sub.p_mw,
        q_sub_mvar: sub.q_mvar,
        s_sub_mva: (sub.p_mw * sub.p_mw + sub.q_mvar * sub.q_mvar).sqrt(),
        sub_by_phase,
        total_load,
        load_by_phase,
        total_loss,
        loss_by_phase,
        total_dg,
        dg_by_phase,
        converged,
        low_voltage,
        iterations,
        delta_history,
    }
}

// ---------------------------------------------------------------------------
// DG distribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DgAllocation {
    /// Percent of each phase's base load actually applied.
    pub effective_pct: [f64; 3],
    /// MW added per phase.
    pub phase_mw: [f64; 3],
    pub total_mw: f64,
}

/// Add DG sized as a percentage of each phase's base load, spread across the
/// load nodes of that phase proportionally to their base load. When
/// `target_total_mw` is given the percentages are rescaled so the total
/// comes out exactly there. `s_rated` defaults to `p_rated / 0.9`.
pub fn apply_dg_distribution(
    feeder: &DistributionFeeder,
    pct: [f64; 3],
    target_total_mw: Option<f64>,
    mode: DgMode,
) -> Result<(DistributionFeeder, DgAllocation), DxError> {
    let phase_load = feeder.phase_base_load();
    for ph in 0..3 {
        if pct[ph] < 0.0 {
            return Err(DxError::Model(ModelError::Semantic(format!(
                "negative dg percentage on phase {}",
                Phase::from_index(ph)
            ))));
        }
        if pct[ph] > 0.0 && phase_load[ph].0 <= 0.0 {
            return Err(DxError::DgOnUnloadedPhase {
                phase: Phase::from_index(ph),
                pct: pct[ph],
            });
        }
    }
    let raw_total: f64 = (0..3).map(|ph| pct[ph] / 100.0 * phase_load[ph].0).sum();
    let scale = match target_total_mw {
        Some(t) if raw_total > 0.0 => t / raw_total,
        _ => 1.0,
    };
    let effective_pct = [pct[0] * scale, pct[1] * scale, pct[2] * scale];

    let mut out = feeder.clone();
    let mut phase_mw = [0.0; 3];
    for ph in 0..3 {
        let dg_mw = effective_pct[ph] / 100.0 * phase_load[ph].0;
        if dg_mw == 0.0 {
            continue;
        }
        phase_mw[ph] = dg_mw;
        for l in &feeder.loads {
            if l.phase.index() != ph || l.p0_mw <= 0.0 {
                continue;
            }
            let share = dg_mw * l.p0_mw / phase_load[ph].0;
            out.dgs.push(DgUnit {
                node: l.node.clone(),
                phase: l.phase,
                p_rated_mw: share,
                s_rated_mva: share / 0.9,
                mode,
                vvc_curve: DgUnit::default_vvc_curve(),
            });
        }
    }
    let total_mw = phase_mw.iter().sum();
    Ok((
        out,
        DgAllocation {
            effective_pct,
            phase_mw,
            total_mw,
        },
    ))
}
