//! JSON casefile formats and their (de)serialization.
//!
//! Three document kinds, each tagged with a `schema` field:
//!
//! * `tdmargin-tx-1` — transmission network: `s_base_mva`, `buses[]`,
//!   `branches[]`, `generators[]`.
//! * `tdmargin-feeder-1` — distribution feeder: `root`, `nominal_kv[]`
//!   (voltage zones, first entry is the root's), `line_configs[]` (named 3x3
//!   complex matrices in ohms/km as `[re, im]` pairs), `sections[]`,
//!   `transformers[]`, `loads[]`, `dgs[]`.
//! * `tdmargin-scenario-1` — study definition referencing casefiles by
//!   relative path.
//!
//! A load entry with phase `"ABC"` is balanced shorthand: it expands to three
//! per-phase loads each carrying a third of the entry's base power.
//! Serialization always writes expanded per-phase loads, so
//! `parse(serialize(x))` reproduces `x` structurally.

use super::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const TX_SCHEMA: &str = "tdmargin-tx-1";
pub const FEEDER_SCHEMA: &str = "tdmargin-feeder-1";
pub const SCENARIO_SCHEMA: &str = "tdmargin-scenario-1";

// ---------------------------------------------------------------------------
// Document structs (wire shape)
// ---------------------------------------------------------------------------

type Cx = [f64; 2];

#[derive(Serialize, Deserialize)]
struct TxDoc {
    schema: String,
    name: String,
    s_base_mva: f64,
    buses: Vec<TxBusDoc>,
    branches: Vec<TxBranchDoc>,
    generators: Vec<TxGenDoc>,
}

#[derive(Serialize, Deserialize)]
struct TxBusDoc {
    id: String,
    #[serde(rename = "type")]
    bus_type: String,
    #[serde(default = "one")]
    v_setpoint: f64,
    #[serde(default)]
    load_mw: f64,
    #[serde(default)]
    load_mvar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct TxBranchDoc {
    from: String,
    to: String,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default)]
    rating_mva: f64,
}

#[derive(Serialize, Deserialize)]
struct TxGenDoc {
    bus: String,
    p_mw: f64,
    #[serde(default)]
    q_min_mvar: f64,
    #[serde(default)]
    q_max_mvar: f64,
}

#[derive(Serialize, Deserialize)]
struct FeederDoc {
    schema: String,
    name: String,
    root: String,
    nominal_kv: Vec<ZoneDoc>,
    line_configs: Vec<LineConfigDoc>,
    sections: Vec<SectionDoc>,
    #[serde(default)]
    transformers: Vec<TransformerDoc>,
    #[serde(default)]
    loads: Vec<LoadDoc>,
    #[serde(default)]
    dgs: Vec<DgDoc>,
}

#[derive(Serialize, Deserialize)]
struct ZoneDoc {
    zone: String,
    kv_ll: f64,
}

#[derive(Serialize, Deserialize)]
struct LineConfigDoc {
    name: String,
    phasing: String,
    z_ohm_per_km: [[Cx; 3]; 3],
}

#[derive(Serialize, Deserialize)]
struct SectionDoc {
    from: String,
    to: String,
    config: String,
    length_km: f64,
}

#[derive(Serialize, Deserialize)]
struct TransformerDoc {
    from: String,
    to: String,
    from_zone: String,
    to_zone: String,
    series_r: f64,
    series_x: f64,
    rating_mva: f64,
    #[serde(default = "one")]
    tap: f64,
    connection: String,
}

#[derive(Serialize, Deserialize)]
struct LoadDoc {
    node: String,
    phase: String,
    p0_mw: f64,
    q0_mvar: f64,
    /// [constant-impedance, constant-current, constant-power] fractions.
    zip_p: [f64; 3],
    zip_q: [f64; 3],
    #[serde(default = "one")]
    v0: f64,
}

#[derive(Serialize, Deserialize)]
struct DgDoc {
    node: String,
    phase: String,
    p_rated_mw: f64,
    #[serde(default)]
    s_rated_mva: Option<f64>,
    mode: String,
    #[serde(default)]
    vvc_curve: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    schema: String,
    name: String,
    mode: String,
    transmission_case: String,
    #[serde(default)]
    attachments: BTreeMap<String, String>,
    #[serde(default)]
    feeder_variants: BTreeMap<String, BTreeMap<String, String>>,
    lambda_schedule: LambdaScheduleDoc,
    #[serde(default = "default_scope")]
    scale_scope: String,
    #[serde(default)]
    dg_mode_override: Option<String>,
    #[serde(default)]
    monitored_bus: Option<String>,
    #[serde(default = "default_outdir")]
    output_dir: String,
}

fn default_scope() -> String {
    "study_feeder".into()
}

fn default_outdir() -> String {
    "out".into()
}

#[derive(Serialize, Deserialize)]
struct LambdaScheduleDoc {
    start: f64,
    max: f64,
    initial_step: f64,
    min_step: f64,
}

// ---------------------------------------------------------------------------
// Parse
// ---------------------------------------------------------------------------

fn check_schema(found: &str, expected: &str) -> Result<(), ModelError> {
    if found != expected {
        return Err(ModelError::Semantic(format!(
            "unexpected schema `{found}`, expected `{expected}`"
        )));
    }
    Ok(())
}

/// Parse a transmission casefile. Syntax errors carry line/column; semantic
/// errors name the violated invariant.
pub fn parse_transmission_case(text: &str) -> Result<TransmissionNetwork, ModelError> {
    let doc: TxDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, TX_SCHEMA)?;
    let buses = doc
        .buses
        .into_iter()
        .map(|b| {
            let bus_type = match b.bus_type.to_ascii_lowercase().as_str() {
                "slack" => BusType::Slack,
                "pv" => BusType::Pv,
                "pq" => BusType::Pq,
                other => {
                    return Err(ModelError::Semantic(format!(
                        "bus `{}`: unknown type `{other}`",
                        b.id
                    )))
                }
            };
            Ok(Bus {
                id: b.id,
                bus_type,
                v_setpoint_pu: b.v_setpoint,
                load_mw: b.load_mw,
                load_mvar: b.load_mvar,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let net = TransmissionNetwork {
        name: doc.name,
        s_base_mva: doc.s_base_mva,
        buses,
        branches: doc
            .branches
            .into_iter()
            .map(|b| Branch {
                from: b.from,
                to: b.to,
                r_pu: b.r,
                x_pu: b.x,
                b_pu: b.b,
                rating_mva: b.rating_mva,
            })
            .collect(),
        generators: doc
            .generators
            .into_iter()
            .map(|g| Generator {
                bus: g.bus,
                p_mw: g.p_mw,
                q_min_mvar: g.q_min_mvar,
                q_max_mvar: g.q_max_mvar,
            })
            .collect(),
    };
    net.validate()?;
    Ok(net)
}

fn cx(p: Cx) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Parse a feeder casefile, expanding balanced `"ABC"` load entries into
/// per-phase loads.
pub fn parse_feeder_case(text: &str) -> Result<DistributionFeeder, ModelError> {
    let doc: FeederDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, FEEDER_SCHEMA)?;

    let mut line_configs = BTreeMap::new();
    for c in doc.line_configs {
        let mut z = [[Complex64::default(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                z[i][j] = cx(c.z_ohm_per_km[i][j]);
            }
        }
        let cfg = LineConfig {
            z_ohm_per_km: z,
            phasing: PhaseSet::parse(&c.phasing)?,
        };
        if line_configs.insert(c.name.clone(), cfg).is_some() {
            return Err(ModelError::Semantic(format!(
                "duplicate line config `{}`",
                c.name
            )));
        }
    }

    let mut loads = Vec::new();
    for l in doc.loads {
        let phases: Vec<Phase> = if l.phase.trim().eq_ignore_ascii_case("abc") {
            Phase::ALL.to_vec()
        } else {
            vec![Phase::parse(&l.phase)?]
        };
        let share = phases.len() as f64;
        for ph in phases {
            loads.push(ZipLoad {
                node: l.node.clone(),
                phase: ph,
                p0_mw: l.p0_mw / share,
                q0_mvar: l.q0_mvar / share,
                pz: l.zip_p[0],
                pi: l.zip_p[1],
                pp: l.zip_p[2],
                qz: l.zip_q[0],
                qi: l.zip_q[1],
                qp: l.zip_q[2],
                v0_pu: l.v0,
            });
        }
    }

    let mut dgs = Vec::new();
    for d in doc.dgs {
        let mode = match d.mode.to_ascii_lowercase().as_str() {
            "upf" => DgMode::Upf,
            "vvc" => DgMode::Vvc,
            other => {
                return Err(ModelError::Semantic(format!(
                    "dg at `{}`: unknown mode `{other}`",
                    d.node
                )))
            }
        };
        dgs.push(DgUnit {
            node: d.node,
            phase: Phase::parse(&d.phase)?,
            p_rated_mw: d.p_rated_mw,
            s_rated_mva: d.s_rated_mva.unwrap_or(d.p_rated_mw / 0.9),
            mode,
            vvc_curve: d
                .vvc_curve
                .map(|c| c.into_iter().map(|p| (p[0], p[1])).collect())
                .unwrap_or_else(DgUnit::default_vvc_curve),
        });
    }

    let feeder = DistributionFeeder {
        name: doc.name,
        root_node: doc.root,
        zones: doc
            .nominal_kv
            .into_iter()
            .map(|z| VoltageZone {
                name: z.zone,
                kv_ll: z.kv_ll,
            })
            .collect(),
        line_configs,
        sections: doc
            .sections
            .into_iter()
            .map(|s| LineSection {
                from_node: s.from,
                to_node: s.to,
                config: s.config,
                length_km: s.length_km,
            })
            .collect(),
        transformers: doc
            .transformers
            .into_iter()
            .map(|t| TransformerBranch {
                from_node: t.from,
                to_node: t.to,
                from_zone: t.from_zone,
                to_zone: t.to_zone,
                series_r_pu: t.series_r,
                series_x_pu: t.series_x,
                rating_mva: t.rating_mva,
                tap: t.tap,
                connection: t.connection,
            })
            .collect(),
        loads,
        dgs,
    };
    feeder.validate()?;
    Ok(feeder)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ModelError> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, SCENARIO_SCHEMA)?;
    let mode = RepresentationMode::parse(&doc.mode)
        .ok_or_else(|| ModelError::Semantic(format!("unknown mode `{}`", doc.mode)))?;
    let scale_scope = match doc.scale_scope.to_ascii_lowercase().as_str() {
        "study_feeder" | "study-feeder" => ScaleScope::StudyFeeder,
        "all_loads" | "all-loads" => ScaleScope::AllLoads,
        other => {
            return Err(ModelError::Semantic(format!(
                "unknown scale_scope `{other}`"
            )))
        }
    };
    let dg_mode_override = match doc.dg_mode_override.as_deref() {
        None => None,
        Some("upf") | Some("UPF") => Some(DgMode::Upf),
        Some("vvc") | Some("VVC") => Some(DgMode::Vvc),
        Some(other) => {
            return Err(ModelError::Semantic(format!(
                "unknown dg_mode_override `{other}`"
            )))
        }
    };
    let scenario = Scenario {
        name: doc.name,
        mode,
        transmission_case: PathBuf::from(doc.transmission_case),
        attachments: doc
            .attachments
            .into_iter()
            .map(|(k, v)| (k, PathBuf::from(v)))
            .collect(),
        feeder_variants: doc
            .feeder_variants
            .into_iter()
            .map(|(name, m)| {
                (
                    name,
                    m.into_iter().map(|(k, v)| (k, PathBuf::from(v))).collect(),
                )
            })
            .collect(),
        lambda_schedule: LambdaSchedule {
            start: doc.lambda_schedule.start,
            max: doc.lambda_schedule.max,
            initial_step: doc.lambda_schedule.initial_step,
            min_step: doc.lambda_schedule.min_step,
        },
        scale_scope,
        dg_mode_override,
        monitored_bus: doc.monitored_bus,
        output_dir: PathBuf::from(doc.output_dir),
    };
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Serialize
// ---------------------------------------------------------------------------

pub fn serialize_transmission(net: &TransmissionNetwork) -> String {
    let doc = TxDoc {
        schema: TX_SCHEMA.into(),
        name: net.name.clone(),
        s_base_mva: net.s_base_mva,
        buses: net
            .buses
            .iter()
            .map(|b| TxBusDoc {
                id: b.id.clone(),
                bus_type: match b.bus_type {
                    BusType::Slack => "slack".into(),
                    BusType::Pv => "pv".into(),
                    BusType::Pq => "pq".into(),
                },
                v_setpoint: b.v_setpoint_pu,
                load_mw: b.load_mw,
                load_mvar: b.load_mvar,
            })
            .collect(),
        branches: net
            .branches
            .iter()
            .map(|b| TxBranchDoc {
                from: b.from.clone(),
                to: b.to.clone(),
                r: b.r_pu,
                x: b.x_pu,
                b: b.b_pu,
                rating_mva: b.rating_mva,
            })
            .collect(),
        generators: net
            .generators
            .iter()
            .map(|g| TxGenDoc {
                bus: g.bus.clone(),
                p_mw: g.p_mw,
                q_min_mvar: g.q_min_mvar,
                q_max_mvar: g.q_max_mvar,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serialization cannot fail")
}

pub fn serialize_feeder(feeder: &DistributionFeeder) -> String {
    let doc = FeederDoc {
        schema: FEEDER_SCHEMA.into(),
        name: feeder.name.clone(),
        root: feeder.root_node.clone(),
        nominal_kv: feeder
            .zones
            .iter()
            .map(|z| ZoneDoc {
                zone: z.name.clone(),
                kv_ll: z.kv_ll,
            })
            .collect(),
        line_configs: feeder
            .line_configs
            .iter()
            .map(|(name, c)| {
                let mut z = [[[0.0; 2]; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        z[i][j] = [c.z_ohm_per_km[i][j].re, c.z_ohm_per_km[i][j].im];
                    }
                }
                LineConfigDoc {
                    name: name.clone(),
                    phasing: c.phasing.to_string(),
                    z_ohm_per_km: z,
                }
            })
            .collect(),
        sections: feeder
            .sections
            .iter()
            .map(|s| SectionDoc {
                from: s.from_node.clone(),
                to: s.to_node.clone(),
                config: s.config.clone(),
                length_km: s.length_km,
            })
            .collect(),
        transformers: feeder
            .transformers
            .iter()
            .map(|t| TransformerDoc {
                from: t.from_node.clone(),
                to: t.to_node.clone(),
                from_zone: t.from_zone.clone(),
                to_zone: t.to_zone.clone(),
                series_r: t.series_r_pu,
                series_x: t.series_x_pu,
                rating_mva: t.rating_mva,
                tap: t.tap,
                connection: t.connection.clone(),
            })
            .collect(),
        loads: feeder
            .loads
            .iter()
            .map(|l| LoadDoc {
                node: l.node.clone(),
                phase: l.phase.to_string(),
                p0_mw: l.p0_mw,
                q0_mvar: l.q0_mvar,
                zip_p: [l.pz, l.pi, l.pp],
                zip_q: [l.qz, l.qi, l.qp],
                v0: l.v0_pu,
            })
            .collect(),
        dgs: feeder
            .dgs
            .iter()
            .map(|d| DgDoc {
                node: d.node.clone(),
                phase: d.phase.to_string(),
                p_rated_mw: d.p_rated_mw,
                s_rated_mva: Some(d.s_rated_mva),
                mode: d.mode.to_string(),
                vvc_curve: Some(d.vvc_curve.iter().map(|&(v, q)| [v, q]).collect()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serialization cannot fail")
}

// ---------------------------------------------------------------------------
// File loading
// ---------------------------------------------------------------------------

/// Environment variable that adds a fallback directory for casefile lookup.
pub const DATA_DIR_ENV: &str = "TDMARGIN_DATA_DIR";

fn read(path: &Path) -> Result<String, ModelError> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolve `rel` against the scenario's directory, falling back to
/// `TDMARGIN_DATA_DIR` when set.
pub fn resolve_path(base_dir: &Path, rel: &Path) -> Result<PathBuf, ModelError> {
    if rel.is_absolute() {
        return Ok(rel.to_path_buf());
    }
    let local = base_dir.join(rel);
    if local.exists() {
        return Ok(local);
    }
    if let Ok(data_dir) = std::env::var(DATA_DIR_ENV) {
        let alt = Path::new(&data_dir).join(rel);
        if alt.exists() {
            return Ok(alt);
        }
    }
    Err(ModelError::Io {
        path: local,
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "casefile not found"),
    })
}

pub fn load_transmission_case(path: &Path) -> Result<TransmissionNetwork, ModelError> {
    parse_transmission_case(&read(path)?)
}

pub fn load_feeder_case(path: &Path) -> Result<DistributionFeeder, ModelError> {
    parse_feeder_case(&read(path)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ModelError> {
    parse_scenario(&read(path)?)
}

/// A scenario with every referenced casefile loaded.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub tx: TransmissionNetwork,
    /// Default attachment set: bus id -> feeder.
    pub feeders: BTreeMap<String, DistributionFeeder>,
    /// Resolved named variants.
    pub variants: BTreeMap<String, BTreeMap<String, DistributionFeeder>>,
}

pub fn load_scenario_bundle(path: &Path) -> Result<LoadedScenario, ModelError> {
    let scenario = load_scenario(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let tx = load_transmission_case(&resolve_path(base, &scenario.transmission_case)?)?;
    let load_set = |set: &BTreeMap<String, PathBuf>| -> Result<_, ModelError> {
        let mut out = BTreeMap::new();
        for (bus, rel) in set {
            out.insert(bus.clone(), load_feeder_case(&resolve_path(base, rel)?)?);
        }
        Ok(out)
    };
    let feeders = load_set(&scenario.attachments)?;
    let mut variants = BTreeMap::new();
    for (name, set) in &scenario.feeder_variants {
        variants.insert(name.clone(), load_set(set)?);
    }
    Ok(LoadedScenario {
        scenario,
        tx,
        feeders,
        variants,
    })
}
