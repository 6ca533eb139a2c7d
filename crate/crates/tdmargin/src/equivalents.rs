//! Equivalent-feeder reduction.
//!
//! Collapses a solved distribution feeder into a single series impedance that
//! reproduces the feeder's total loss at one operating point: the net
//! substation power defines a load current `I = S_pu / v_load`, and the
//! impedance follows from `I^2 (r + jx) = loss_pu`. The result is exact only
//! at the operating point it was computed for; [`equivalent_error_profile`]
//! quantifies how fast it degrades as the load scale moves away.

use crate::dxsolver::{solve_feeder, DxSolution, SubstationVoltage, SweepOptions};
use crate::netmodel::DistributionFeeder;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquivalentError {
    #[error("equivalent undefined at zero load")]
    ZeroLoad,
    #[error("equivalent requires a converged feeder solution")]
    Unconverged,
    #[error("load-side voltage must be positive")]
    BadVoltage,
    #[error(transparent)]
    Dx(#[from] crate::dxsolver::DxError),
}

/// Lumped series impedance standing in for a whole feeder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentFeeder {
    pub r_pu: f64,
    pub x_pu: f64,
    pub s_base_mva: f64,
    /// Operating point the parameters were calibrated at.
    pub v_load_pu: f64,
    pub lambda: f64,
    /// Feeder losses the equivalent reproduces, MW / MVAr.
    pub loss_mw: f64,
    pub loss_mvar: f64,
    /// Net load behind the equivalent branch, MW / MVAr.
    pub net_load_mw: f64,
    pub net_load_mvar: f64,
    /// Load current magnitude at calibration, pu.
    pub i_load_pu: f64,
}

/// Derive the equivalent from a solved feeder. `v_load_pu` is the boundary
/// (substation) voltage the solve used; standalone studies conventionally
/// pass 1.0.
pub fn compute_equivalent(
    sol: &DxSolution,
    v_load_pu: f64,
    s_base_mva: f64,
    lambda: f64,
) -> Result<EquivalentFeeder, EquivalentError> {
    if !sol.converged {
        return Err(EquivalentError::Unconverged);
    }
    if v_load_pu <= 0.0 {
        return Err(EquivalentError::BadVoltage);
    }
    let s_pu = sol.s_sub_mva / s_base_mva;
    if s_pu == 0.0 {
        return Err(EquivalentError::ZeroLoad);
    }
    let i_load_pu = s_pu / v_load_pu;
    let i_sq = i_load_pu * i_load_pu;
    Ok(EquivalentFeeder {
        r_pu: (sol.total_loss.p_mw / s_base_mva) / i_sq,
        x_pu: (sol.total_loss.q_mvar / s_base_mva) / i_sq,
        s_base_mva,
        v_load_pu,
        lambda,
        loss_mw: sol.total_loss.p_mw,
        loss_mvar: sol.total_loss.q_mvar,
        net_load_mw: sol.total_load.p_mw - sol.total_dg.p_mw,
        net_load_mvar: sol.total_load.q_mvar - sol.total_dg.q_mvar,
        i_load_pu,
    })
}

/// Splice the equivalent into a transmission network as a casefile fragment:
/// a new PQ bus carrying the net load, reached through a branch with the
/// calibrated impedance. The attachment bus's own lumped load is cleared
/// (the fragment replaces it). Returns the new bus id.
pub fn attach_equivalent(
    net: &mut crate::netmodel::TransmissionNetwork,
    bus_id: &str,
    eq: &EquivalentFeeder,
) -> String {
    use crate::netmodel::{Branch, Bus, BusType};
    let df_bus = format!("{bus_id}_df");
    net.buses.push(Bus {
        id: df_bus.clone(),
        bus_type: BusType::Pq,
        v_setpoint_pu: 1.0,
        load_mw: eq.net_load_mw,
        load_mvar: eq.net_load_mvar,
    });
    net.branches.push(Branch {
        from: bus_id.to_string(),
        to: df_bus.clone(),
        r_pu: eq.r_pu,
        x_pu: eq.x_pu,
        b_pu: 0.0,
        rating_mva: 0.0,
    });
    if let Some(b) = net.buses.iter_mut().find(|b| b.id == bus_id) {
        b.load_mw = 0.0;
        b.load_mvar = 0.0;
    }
    df_bus
}

/// One row of the error profile: the real loss the feeder actually has at a
/// load scale versus what the calibrated equivalent predicts.
#[derive(Debug, Clone, Copy)]
pub struct LossComparison {
    pub lambda: f64,
    /// From a fresh feeder solve; None when that solve diverges.
    pub true_loss_mw: Option<f64>,
    /// `I(lambda)^2 * r` with the current scaled linearly from calibration.
    pub eq_model_loss_mw: f64,
}

/// Sweep the load scale and compare true feeder loss against the lumped
/// model's quadratic prediction. The equivalent is calibrated at
/// `calibration_lambda` and the mismatch grows with distance from it.
pub fn equivalent_error_profile(
    feeder: &DistributionFeeder,
    v_load_pu: f64,
    s_base_mva: f64,
    calibration_lambda: f64,
    lambdas: &[f64],
    opts: &SweepOptions,
) -> Result<(EquivalentFeeder, Vec<LossComparison>), EquivalentError> {
    let substation = SubstationVoltage::Balanced {
        v_pu: v_load_pu,
        theta_rad: 0.0,
    };
    let base = solve_feeder(feeder, substation, calibration_lambda, opts, None)?;
    let eq = compute_equivalent(&base, v_load_pu, s_base_mva, calibration_lambda)?;

    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let true_loss_mw = solve_feeder(feeder, substation, lambda, opts, None)
                .ok()
                .filter(|s| s.converged)
                .map(|s| s.total_loss.p_mw);
            // The lumped load scales linearly with lambda, so the model
            // current does too.
            let i = eq.i_load_pu * lambda / calibration_lambda;
            LossComparison {
                lambda,
                true_loss_mw,
                eq_model_loss_mw: i * i * eq.r_pu * s_base_mva,
            }
        })
        .collect();
    Ok((eq, rows))
}
