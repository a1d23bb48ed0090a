//! Unshifted per-mode trajectories, started from an explicit voltage at
//! `t = 0`. These are the building blocks the shifted case formulas are
//! derived from; the engine never calls them, tests use them as an oracle.

use super::nor::{AuxRisingOutputConsts, NorModel};
use super::{GateParams, ModelError};
use crate::time::ExtTime;

/// Arrows give the input edge direction, the sign which input switched
/// first (`-`: A, `+`: B for single arrows; `+`: `Δ ≥ 0` for double arrows).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawMode {
    /// `(0,0) -> (1,0)`
    UpMinus,
    /// `(0,0) -> (0,1)`
    UpPlus,
    /// second rising input, `Δ ≥ 0`
    UpUpPlus,
    /// second rising input, `Δ < 0`
    UpUpMinus,
    /// `(1,1) -> (0,1)`
    DownMinus,
    /// `(1,1) -> (1,0)`
    DownPlus,
    /// `(0,1) -> (0,0)`
    DownDownPlus,
    /// `(1,0) -> (0,0)`
    DownDownMinus,
}

pub fn nor_raw_trajectory(
    mode: RawMode,
    p: &GateParams,
    t: f64,
    delta: f64,
    v_start: f64,
) -> Result<f64, ModelError> {
    if !(t >= 0.0) {
        return Err(ModelError::Domain { what: "t", value: t, range: "[0, +inf)" });
    }
    let m = NorModel::new(*p)?;
    let parallel = m.tau_c;
    Ok(match mode {
        RawMode::UpMinus | RawMode::DownPlus => v_start * (-t / m.tau_a).exp(),
        RawMode::UpPlus | RawMode::DownMinus => v_start * (-t / m.tau_b).exp(),
        RawMode::UpUpPlus | RawMode::UpUpMinus => v_start * (-t / parallel).exp(),
        RawMode::DownDownPlus | RawMode::DownDownMinus => {
            if !(delta >= 0.0) {
                return Err(ModelError::Domain { what: "delta", value: delta, range: "[0, +inf]" });
            }
            let alpha = if mode == RawMode::DownDownPlus { p.alpha2 } else { p.alpha1 };
            let aux = AuxRisingOutputConsts::new(p, alpha, ExtTime::from_f64(delta))?;
            let decay = (-t / m.tau_r).exp() * aux.factors(t, 0.0, m.tau_r);
            p.vdd + (v_start - p.vdd) * decay
        }
    })
}
