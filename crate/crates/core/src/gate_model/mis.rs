//! Delays of a gate that has settled before the first of two input edges
//! (no drafting), as functions of the input separation `Δ = t_B - t_A`.

use std::f64::consts::LN_2;

use super::nor::NorModel;
use super::{Extremal, GateParams, ModelError};
use crate::time::ExtTime;

/// Falling-output delay for two rising inputs separated by `Δ`.
pub fn mis_delay_falling(p: &GateParams, delta: ExtTime) -> Result<f64, ModelError> {
    let m = NorModel::new(*p)?;
    let caps = m.caps;
    let (sum, prod) = (p.r_na + p.r_nb, p.r_na * p.r_nb);
    let delay = match delta {
        ExtTime::PosInf => LN_2 * m.tau_a,
        ExtTime::NegInf => LN_2 * m.tau_b,
        ExtTime::Finite(d) if d >= 0.0 => {
            let limit = LN_2 * m.tau_a;
            if d < limit {
                (LN_2 * caps.c2 * prod - caps.c2 / caps.c1 * d * p.r_nb) / sum + d
            } else {
                limit
            }
        }
        ExtTime::Finite(d) => {
            let d = d.abs();
            let limit = LN_2 * m.tau_b;
            if d < limit {
                (LN_2 * caps.c2 * prod - caps.c2 / caps.c1_prime * d * p.r_na) / sum + d
            } else {
                limit
            }
        }
    };
    Ok(delay + p.d_min)
}

/// Rising-output delay for two falling inputs separated by `Δ`.
pub fn mis_delay_rising(p: &GateParams, delta: ExtTime) -> Result<f64, ModelError> {
    let m = NorModel::new(*p)?;
    let d0 = m.delta_extremal(0.0, Extremal::Zero)?;
    let sum = p.alpha1 + p.alpha2;
    let (slope, single, dabs) = match delta {
        ExtTime::PosInf => return Ok(m.delta_extremal(0.0, Extremal::PlusInf)? + p.d_min),
        ExtTime::NegInf => return Ok(m.delta_extremal(0.0, Extremal::MinusInf)? + p.d_min),
        ExtTime::Finite(d) if d >= 0.0 => (p.alpha1, Extremal::PlusInf, d),
        ExtTime::Finite(d) => (p.alpha2, Extremal::MinusInf, -d),
    };
    let ds = m.delta_extremal(0.0, single)?;
    let delay = if dabs < sum * (d0 - ds) / slope { d0 - slope / sum * dabs } else { ds };
    Ok(delay + p.d_min)
}
