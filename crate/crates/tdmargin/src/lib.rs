//! Power-system voltage stability toolkit built around P-V curve tracing
//! with four ways of representing the distribution side of the grid:
//!
//! * **NoD** — distribution modeled as a fixed lumped load (losses folded in
//!   linearly),
//! * **EqFeeder** — a lumped series impedance calibrated from one distribution
//!   solve, in series with the net load,
//! * **DOnly** — the three-phase feeder alone, substation held at nominal
//!   voltage,
//! * **CoSim** — master-slave splitting between a balanced positive-sequence
//!   transmission solver and three-phase unbalanced feeder solvers, exchanging
//!   boundary voltage and net power until fixed point.
//!
//! The crate ships a Newton-Raphson transmission power flow with a
//! predictor-corrector continuation tracer, a forward-backward sweep feeder
//! solver with ZIP loads and volt-var capable DG, margin search and net-load
//! unbalance reporting, and JSON casefile formats for all of it.
//!
//! See the `examples/` directory for one runnable program per capability and
//! the `tdmargin` binary for the batch CLI (`validate`, `solve`, `margin`,
//! `dgsweep`, `equivalent`).

pub mod analysis;
pub mod cli;
pub mod cosim;
pub mod dxsolver;
pub mod equivalents;
pub mod netmodel;
pub mod txsolver;

pub use analysis::{compute_nlu, dg_sweep, find_margin, MarginReport, NluReport};
pub use cosim::{run_mode, solve_cosim, CosimResult, ModeSolution, Study};
pub use dxsolver::{apply_dg_distribution, dg_injection, solve_feeder, DxSolution};
pub use equivalents::{compute_equivalent, equivalent_error_profile, EquivalentFeeder};
pub use netmodel::{
    DgMode, DgUnit, DistributionFeeder, Phase, RepresentationMode, Scenario, TransmissionNetwork,
    ZipLoad,
};
pub use txsolver::{attach_boundary_load, solve_powerflow, trace_pv_curve, TxSolution};
