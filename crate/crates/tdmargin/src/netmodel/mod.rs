//! Domain types shared by both subsystems: ZIP loads, phase-coupled line
//! sections, transformers, DG units, radial feeders, the balanced
//! transmission network, and study scenarios. Also the JSON casefile
//! parsers/serializers (see [`casefile`]).
//!
//! Per-unit convention: the transmission network lives in per unit on its own
//! `s_base_mva`; distribution feeders are solved in physical volts, amps and
//! ohms and converted only at the substation boundary.

pub mod casefile;

use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

/// Model-level failures: malformed casefile text or a violated invariant.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The document is not valid JSON (message carries line/column).
    #[error("syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    /// The document parsed but violates a model invariant.
    #[error("{0}")]
    Semantic(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn semantic(msg: impl Into<String>) -> ModelError {
    ModelError::Semantic(msg.into())
}

// ---------------------------------------------------------------------------
// Phases
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        match self {
            Phase::A => 0,
            Phase::B => 1,
            Phase::C => 2,
        }
    }

    pub fn from_index(i: usize) -> Phase {
        Self::ALL[i]
    }

    pub fn parse(s: &str) -> Result<Phase, ModelError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Phase::A),
            "B" => Ok(Phase::B),
            "C" => Ok(Phase::C),
            other => Err(semantic(format!("unknown phase label `{other}`"))),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::A => write!(f, "A"),
            Phase::B => write!(f, "B"),
            Phase::C => write!(f, "C"),
        }
    }
}

/// Subset of {A, B, C} present on a line section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSet {
    mask: u8,
}

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet { mask: 0b111 };

    pub fn contains(self, p: Phase) -> bool {
        self.mask & (1 << p.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn parse(s: &str) -> Result<PhaseSet, ModelError> {
        let mut mask = 0u8;
        for ch in s.trim().chars() {
            let bit = match ch.to_ascii_uppercase() {
                'A' => 0,
                'B' => 1,
                'C' => 2,
                other => return Err(semantic(format!("unknown phase label `{other}`"))),
            };
            mask |= 1 << bit;
        }
        if mask == 0 {
            return Err(semantic("empty phasing"));
        }
        Ok(PhaseSet { mask })
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// ZIP load
// ---------------------------------------------------------------------------

/// Per-phase voltage-dependent load: a mix of constant-impedance,
/// constant-current and constant-power fractions of a base power.
///
/// `p(v) = p0 * (pz*(v/v0)^2 + pi*(v/v0) + pp)`, and analogously for `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipLoad {
    pub node: String,
    pub phase: Phase,
    /// Base real power, MW (per phase).
    pub p0_mw: f64,
    /// Base reactive power, MVAr (per phase).
    pub q0_mvar: f64,
    pub pz: f64,
    pub pi: f64,
    pub pp: f64,
    pub qz: f64,
    pub qi: f64,
    pub qp: f64,
    /// Nominal voltage, pu.
    pub v0_pu: f64,
}

/// Fractions must sum to one within this tolerance.
pub const ZIP_SUM_TOL: f64 = 1e-9;

impl ZipLoad {
    /// Constant-power load helper (pp = qp = 1).
    pub fn constant_power(node: &str, phase: Phase, p0_mw: f64, q0_mvar: f64) -> ZipLoad {
        ZipLoad {
            node: node.to_string(),
            phase,
            p0_mw,
            q0_mvar,
            pz: 0.0,
            pi: 0.0,
            pp: 1.0,
            qz: 0.0,
            qi: 0.0,
            qp: 1.0,
            v0_pu: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, f) in [
            ("pz", self.pz),
            ("pi", self.pi),
            ("pp", self.pp),
            ("qz", self.qz),
            ("qi", self.qi),
            ("qp", self.qp),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(semantic(format!(
                    "load at `{}` phase {}: fraction {name}={f} outside [0, 1]",
                    self.node, self.phase
                )));
            }
        }
        if (self.pz + self.pi + self.pp - 1.0).abs() > ZIP_SUM_TOL {
            return Err(semantic(format!(
                "load at `{}` phase {}: real-power fractions sum to {}, expected 1",
                self.node,
                self.phase,
                self.pz + self.pi + self.pp
            )));
        }
        if (self.qz + self.qi + self.qp - 1.0).abs() > ZIP_SUM_TOL {
            return Err(semantic(format!(
                "load at `{}` phase {}: reactive fractions sum to {}, expected 1",
                self.node,
                self.phase,
                self.qz + self.qi + self.qp
            )));
        }
        if self.v0_pu <= 0.0 {
            return Err(semantic(format!(
                "load at `{}`: nominal voltage v0={} must be positive",
                self.node, self.v0_pu
            )));
        }
        Ok(())
    }

    /// Evaluate the load at voltage magnitude `v_pu`.
    ///
    /// Defined for all `v_pu >= 0`; at zero voltage only the constant-power
    /// term survives (solvers guard against collapse separately).
    pub fn zip_power(&self, v_pu: f64) -> (f64, f64) {
        let r = v_pu / self.v0_pu;
        let p = self.p0_mw * (self.pz * r * r + self.pi * r + self.pp);
        let q = self.q0_mvar * (self.qz * r * r + self.qi * r + self.qp);
        (p, q)
    }
}

// ---------------------------------------------------------------------------
// Lines, transformers, DG
// ---------------------------------------------------------------------------

/// Tolerance on impedance matrix symmetry.
pub const IMPEDANCE_SYM_TOL: f64 = 1e-12;

/// Named 3x3 complex series impedance in ohms per km, shared by sections.
#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    pub z_ohm_per_km: [[Complex64; 3]; 3],
    pub phasing: PhaseSet,
}

impl LineConfig {
    pub fn validate(&self, name: &str) -> Result<(), ModelError> {
        for i in 0..3 {
            for j in 0..3 {
                let zij = self.z_ohm_per_km[i][j];
                if (zij - self.z_ohm_per_km[j][i]).norm() > IMPEDANCE_SYM_TOL {
                    return Err(semantic(format!(
                        "line config `{name}`: asymmetric impedance matrix at ({i},{j})"
                    )));
                }
                let absent = !self.phasing.contains(Phase::from_index(i))
                    || !self.phasing.contains(Phase::from_index(j));
                if absent && zij.norm() != 0.0 {
                    return Err(semantic(format!(
                        "line config `{name}`: nonzero impedance on absent phase at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Total series impedance of one resolved section.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseImpedanceMatrix {
    /// Total ohms when `length_km == 0`, otherwise ohms per km.
    pub z: [[Complex64; 3]; 3],
    pub length_km: f64,
    pub phasing: PhaseSet,
}

impl PhaseImpedanceMatrix {
    pub fn total_ohms(&self) -> [[Complex64; 3]; 3] {
        if self.length_km == 0.0 {
            self.z
        } else {
            let mut out = self.z;
            for row in out.iter_mut() {
                for z in row.iter_mut() {
                    *z *= self.length_km;
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSection {
    pub from_node: String,
    pub to_node: String,
    /// Name of the shared [`LineConfig`] carrying the impedance matrix.
    pub config: String,
    pub length_km: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerBranch {
    pub from_node: String,
    pub to_node: String,
    /// Voltage zone on each side; zones carry the nominal line-to-line kV.
    pub from_zone: String,
    pub to_zone: String,
    /// Series impedance in pu on the transformer's own MVA rating.
    pub series_r_pu: f64,
    pub series_x_pu: f64,
    pub rating_mva: f64,
    pub tap: f64,
    pub connection: String,
}

impl TransformerBranch {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rating_mva <= 0.0 {
            return Err(semantic(format!(
                "transformer {}-{}: rating must be positive",
                self.from_node, self.to_node
            )));
        }
        if !(0.9..=1.1).contains(&self.tap) {
            return Err(semantic(format!(
                "transformer {}-{}: tap {} outside [0.9, 1.1]",
                self.from_node, self.to_node, self.tap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DgMode {
    /// Unity power factor: rated real power, zero reactive.
    Upf,
    /// Volt-var droop: reactive output follows a piecewise-linear curve of
    /// local voltage, clamped to the apparent-power rating.
    Vvc,
}

impl fmt::Display for DgMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DgMode::Upf => write!(f, "upf"),
            DgMode::Vvc => write!(f, "vvc"),
        }
    }
}

/// Single-phase distributed generation unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DgUnit {
    pub node: String,
    pub phase: Phase,
    pub p_rated_mw: f64,
    pub s_rated_mva: f64,
    pub mode: DgMode,
    /// Volt-var breakpoints as (v_pu, q fraction of s_rated).
    pub vvc_curve: Vec<(f64, f64)>,
}

impl DgUnit {
    /// Default droop curve: +44% var injection below 0.92 pu, a dead band
    /// over [0.98, 1.02], -44% absorption above 1.08 pu.
    pub fn default_vvc_curve() -> Vec<(f64, f64)> {
        vec![(0.92, 0.44), (0.98, 0.0), (1.02, 0.0), (1.08, -0.44)]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.p_rated_mw < 0.0 || self.s_rated_mva <= 0.0 {
            return Err(semantic(format!(
                "dg at `{}`: ratings must be positive",
                self.node
            )));
        }
        if self.p_rated_mw > self.s_rated_mva + 1e-12 {
            return Err(semantic(format!(
                "dg at `{}`: p_rated {} exceeds s_rated {}",
                self.node, self.p_rated_mw, self.s_rated_mva
            )));
        }
        if self.vvc_curve.len() < 2 {
            return Err(semantic(format!(
                "dg at `{}`: volt-var curve needs at least two breakpoints",
                self.node
            )));
        }
        for w in self.vvc_curve.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(semantic(format!(
                    "dg at `{}`: volt-var breakpoints must be strictly increasing in voltage",
                    self.node
                )));
            }
            if w[1].1 > w[0].1 {
                return Err(semantic(format!(
                    "dg at `{}`: volt-var curve must be non-increasing in q",
                    self.node
                )));
            }
        }
        for (_, q) in &self.vvc_curve {
            if !(-1.0..=1.0).contains(q) {
                return Err(semantic(format!(
                    "dg at `{}`: volt-var q fraction {q} outside [-1, 1]",
                    self.node
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Distribution feeder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageZone {
    pub name: String,
    /// Nominal line-to-line kV of this zone.
    pub kv_ll: f64,
}

/// Radial three-phase distribution network. The union of sections and
/// transformers must form a spanning tree rooted at `root_node`; the first
/// voltage zone is the root's.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFeeder {
    pub name: String,
    pub root_node: String,
    pub zones: Vec<VoltageZone>,
    pub line_configs: BTreeMap<String, LineConfig>,
    pub sections: Vec<LineSection>,
    pub transformers: Vec<TransformerBranch>,
    pub loads: Vec<ZipLoad>,
    pub dgs: Vec<DgUnit>,
}

impl DistributionFeeder {
    /// All node ids mentioned by the topology, root first.
    pub fn node_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = vec![self.root_node.clone()];
        seen.insert(self.root_node.clone());
        for s in &self.sections {
            for n in [&s.from_node, &s.to_node] {
                if seen.insert(n.clone()) {
                    out.push(n.clone());
                }
            }
        }
        for t in &self.transformers {
            for n in [&t.from_node, &t.to_node] {
                if seen.insert(n.clone()) {
                    out.push(n.clone());
                }
            }
        }
        out
    }

    /// Resolved total impedance of a section.
    pub fn section_impedance(
        &self,
        section: &LineSection,
    ) -> Result<PhaseImpedanceMatrix, ModelError> {
        let cfg = self.line_configs.get(&section.config).ok_or_else(|| {
            semantic(format!(
                "section {}-{} references unknown line config `{}`",
                section.from_node, section.to_node, section.config
            ))
        })?;
        Ok(PhaseImpedanceMatrix {
            z: cfg.z_ohm_per_km,
            length_km: section.length_km,
            phasing: cfg.phasing,
        })
    }

    pub fn zone_kv(&self, zone: &str) -> Option<f64> {
        self.zones.iter().find(|z| z.name == zone).map(|z| z.kv_ll)
    }

    /// Total base load over all phases, (MW, MVAr).
    pub fn total_base_load(&self) -> (f64, f64) {
        self.loads
            .iter()
            .fold((0.0, 0.0), |(p, q), l| (p + l.p0_mw, q + l.q0_mvar))
    }

    /// Per-phase base load, indexed A, B, C.
    pub fn phase_base_load(&self) -> [(f64, f64); 3] {
        let mut out = [(0.0, 0.0); 3];
        for l in &self.loads {
            let i = l.phase.index();
            out[i].0 += l.p0_mw;
            out[i].1 += l.q0_mvar;
        }
        out
    }

    /// Per-phase rated DG real power, MW.
    pub fn phase_dg_mw(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for dg in &self.dgs {
            out[dg.phase.index()] += dg.p_rated_mw;
        }
        out
    }

    /// Checks radiality, referential integrity and per-element invariants.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.zones.is_empty() {
            return Err(semantic("feeder must declare at least one voltage zone"));
        }
        for (name, cfg) in &self.line_configs {
            cfg.validate(name)?;
        }
        for t in &self.transformers {
            t.validate()?;
            for zone in [&t.from_zone, &t.to_zone] {
                if self.zone_kv(zone).is_none() {
                    return Err(semantic(format!(
                        "transformer {}-{} references unknown zone `{zone}`",
                        t.from_node, t.to_node
                    )));
                }
            }
        }
        for s in &self.sections {
            if s.from_node == s.to_node {
                return Err(semantic(format!(
                    "section {}-{} connects a node to itself",
                    s.from_node, s.to_node
                )));
            }
            self.section_impedance(s)?;
        }

        // Spanning-tree check: |edges| == |nodes| - 1 and every node reachable
        // from the root.
        let nodes = self.node_ids();
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let edge_count = self.sections.len() + self.transformers.len();
        if edge_count != nodes.len().saturating_sub(1) {
            return Err(semantic("non-radial feeder"));
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut push_edge = |a: &str, b: &str| {
            let (ia, ib) = (index[a], index[b]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        };
        for s in &self.sections {
            push_edge(&s.from_node, &s.to_node);
        }
        for t in &self.transformers {
            push_edge(&t.from_node, &t.to_node);
        }
        let mut visited = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut reached = 0;
        while let Some(n) = stack.pop() {
            reached += 1;
            for &m in &adj[n] {
                if !visited[m] {
                    visited[m] = true;
                    stack.push(m);
                }
            }
        }
        if reached != nodes.len() {
            // Equal edge count with unreached nodes implies a cycle elsewhere.
            return Err(semantic("non-radial feeder"));
        }

        for l in &self.loads {
            l.validate()?;
            if !index.contains_key(l.node.as_str()) {
                return Err(semantic(format!(
                    "load references missing node `{}`",
                    l.node
                )));
            }
        }
        for dg in &self.dgs {
            dg.validate()?;
            if !index.contains_key(dg.node.as_str()) {
                return Err(semantic(format!(
                    "dg references missing node `{}`",
                    dg.node
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transmission network
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusType {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub bus_type: BusType,
    /// Voltage setpoint in pu; meaningful for slack and PV buses.
    pub v_setpoint_pu: f64,
    pub load_mw: f64,
    pub load_mvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub r_pu: f64,
    pub x_pu: f64,
    /// Total line-charging susceptance, pu.
    pub b_pu: f64,
    pub rating_mva: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: String,
    pub p_mw: f64,
    pub q_min_mvar: f64,
    pub q_max_mvar: f64,
}

/// Balanced positive-sequence transmission network in per unit on
/// `s_base_mva`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionNetwork {
    pub name: String,
    pub s_base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl TransmissionNetwork {
    pub fn bus_index(&self) -> BTreeMap<&str, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.as_str(), i))
            .collect()
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.s_base_mva <= 0.0 {
            return Err(semantic("s_base_mva must be positive"));
        }
        let mut ids = BTreeSet::new();
        for b in &self.buses {
            if !ids.insert(b.id.as_str()) {
                return Err(semantic(format!("duplicate bus id `{}`", b.id)));
            }
        }
        let slack_count = self
            .buses
            .iter()
            .filter(|b| b.bus_type == BusType::Slack)
            .count();
        if slack_count == 0 {
            return Err(semantic("no slack bus"));
        }
        if slack_count > 1 {
            return Err(semantic("two slack buses"));
        }
        for br in &self.branches {
            for end in [&br.from, &br.to] {
                if !ids.contains(end.as_str()) {
                    return Err(semantic(format!(
                        "branch {}-{} references missing bus `{end}`",
                        br.from, br.to
                    )));
                }
            }
            if br.r_pu == 0.0 && br.x_pu == 0.0 {
                return Err(semantic(format!(
                    "branch {}-{} has zero impedance",
                    br.from, br.to
                )));
            }
        }
        for g in &self.generators {
            if !ids.contains(g.bus.as_str()) {
                return Err(semantic(format!(
                    "generator references missing bus `{}`",
                    g.bus
                )));
            }
        }
        for b in &self.buses {
            if b.bus_type == BusType::Pv && !self.generators.iter().any(|g| g.bus == b.id) {
                return Err(semantic(format!("PV bus `{}` has no generator", b.id)));
            }
        }

        // Connectivity over branches.
        let index = self.bus_index();
        let mut adj = vec![Vec::new(); self.buses.len()];
        for br in &self.branches {
            let (ia, ib) = (index[br.from.as_str()], index[br.to.as_str()]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        let mut visited = vec![false; self.buses.len()];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut reached = 0;
        while let Some(n) = stack.pop() {
            reached += 1;
            for &m in &adj[n] {
                if !visited[m] {
                    visited[m] = true;
                    stack.push(m);
                }
            }
        }
        if reached != self.buses.len() {
            return Err(semantic("transmission network is disconnected"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RepresentationMode {
    /// Transmission only; the feeder is a fixed lumped load with losses
    /// folded in linearly.
    NoD,
    /// Transmission with a calibrated equivalent-feeder branch per
    /// attachment.
    EqFeeder,
    /// Distribution only; substation held at nominal voltage.
    DOnly,
    /// Master-slave-splitting co-simulation of both subsystems.
    CoSim,
}

impl RepresentationMode {
    pub fn parse(s: &str) -> Option<RepresentationMode> {
        match s.to_ascii_lowercase().as_str() {
            "nod" | "no-d" | "no_d" => Some(RepresentationMode::NoD),
            "eqfeeder" | "eq-feeder" | "eq_feeder" => Some(RepresentationMode::EqFeeder),
            "donly" | "d-only" | "d_only" => Some(RepresentationMode::DOnly),
            "cosim" | "co-sim" | "co_sim" => Some(RepresentationMode::CoSim),
            _ => None,
        }
    }
}

impl fmt::Display for RepresentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepresentationMode::NoD => write!(f, "nod"),
            RepresentationMode::EqFeeder => write!(f, "eqfeeder"),
            RepresentationMode::DOnly => write!(f, "donly"),
            RepresentationMode::CoSim => write!(f, "cosim"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleScope {
    /// Lambda multiplies only the loads of attached study feeders (and their
    /// lumped stand-ins); other transmission loads stay fixed.
    StudyFeeder,
    /// Lambda multiplies every load in the study.
    AllLoads,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub start: f64,
    pub max: f64,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule {
            start: 1.0,
            max: 10.0,
            initial_step: 0.1,
            min_step: 1e-3,
        }
    }
}

/// A study definition: which cases to load, how to represent the
/// distribution side, and how to drive the load parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub mode: RepresentationMode,
    pub transmission_case: PathBuf,
    /// Transmission bus id -> feeder casefile (relative to the scenario).
    pub attachments: BTreeMap<String, PathBuf>,
    /// Named alternative attachment sets, selectable as `cosim-<name>` etc.
    pub feeder_variants: BTreeMap<String, BTreeMap<String, PathBuf>>,
    pub lambda_schedule: LambdaSchedule,
    pub scale_scope: ScaleScope,
    pub dg_mode_override: Option<DgMode>,
    /// Bus whose voltage the margin search monitors. Defaults to the single
    /// attachment bus.
    pub monitored_bus: Option<String>,
    pub output_dir: PathBuf,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ModelError> {
        let s = &self.lambda_schedule;
        if s.min_step <= 0.0 {
            return Err(semantic("lambda schedule: min_step must be positive"));
        }
        if s.start < 0.0 {
            return Err(semantic("lambda schedule: start must be non-negative"));
        }
        if s.initial_step < s.min_step {
            return Err(semantic(
                "lambda schedule: initial_step must be at least min_step",
            ));
        }
        match self.mode {
            RepresentationMode::NoD => {
                if !self.attachments.is_empty() {
                    return Err(semantic(
                        "mode `nod` represents feeders as lumped loads and takes no attachments",
                    ));
                }
                if self.monitored_bus.is_none() {
                    return Err(semantic("mode `nod` requires an explicit monitored_bus"));
                }
            }
            _ => {
                if self.attachments.is_empty() {
                    return Err(semantic(format!(
                        "mode `{}` requires at least one attachment",
                        self.mode
                    )));
                }
            }
        }
        if self.monitored_bus.is_none() && self.attachments.len() > 1 {
            return Err(semantic(
                "monitored_bus must be set when more than one feeder is attached",
            ));
        }
        Ok(())
    }

    /// The monitored bus, defaulting to the single attachment bus.
    pub fn monitored_bus(&self) -> Option<&str> {
        self.monitored_bus
            .as_deref()
            .or_else(|| self.attachments.keys().next().map(|s| s.as_str()))
    }
}
