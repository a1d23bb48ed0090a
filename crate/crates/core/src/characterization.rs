//! Gate parametrization from six measured MIS delays.
//!
//! The falling-output triple fixes the nMOS and interconnect resistances in
//! closed form. The rising-output triple fixes `R` through a scalar root
//! solve, then the two pMOS slopes.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate_model::{mis_delay_falling, mis_delay_rising, GateParams, ModelError};
use crate::numerics::{lambert_w_minus1_log, solve_bracketed, BracketedRootProblem, NumericsError};
use crate::time::ExtTime;

pub const DEFAULT_TOLERANCE: f64 = 1e-3;

const R_SCAN_LO: f64 = 1.0;
const R_SCAN_HI: f64 = 1e6;
const R_SCAN_STEPS: usize = 60;

/// MIS delays at `Δ = 0, +∞, -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisTriple {
    #[serde(rename = "d0_s")]
    pub d0: f64,
    #[serde(rename = "dinf_s")]
    pub d_plus_inf: f64,
    #[serde(rename = "dminf_s")]
    pub d_minus_inf: f64,
}

impl MisTriple {
    fn iter(&self) -> [(&'static str, f64); 3] {
        [("0", self.d0), ("+inf", self.d_plus_inf), ("-inf", self.d_minus_inf)]
    }
}

/// Measured delays, named by output edge direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredDelays {
    pub fall: MisTriple,
    pub rise: MisTriple,
    #[serde(rename = "dmin_s")]
    pub d_min: f64,
    /// Load capacitance; any positive value works, resistances scale with it.
    #[serde(rename = "c_f")]
    pub c_load: f64,
    #[serde(rename = "vdd_v", default = "default_vdd")]
    pub vdd: f64,
}

fn default_vdd() -> f64 {
    0.8
}

impl MeasuredDelays {
    /// Delays of the reference NOR chain gate.
    pub fn nor_chain_reference() -> MeasuredDelays {
        MeasuredDelays {
            fall: MisTriple { d0: 2.190e-12, d_plus_inf: 3.7226e-12, d_minus_inf: 3.3798e-12 },
            rise: MisTriple { d0: 4.107e-12, d_plus_inf: 3.616e-12, d_minus_inf: 3.8054e-12 },
            d_min: 299e-15,
            c_load: 0.9431e-15,
            vdd: 0.8,
        }
    }

    /// The delays `p` predicts, so that `characterize(synthesize(p)) ≈ p`.
    pub fn synthesize(p: &GateParams) -> Result<MeasuredDelays, ModelError> {
        let triple = |f: fn(&GateParams, ExtTime) -> Result<f64, ModelError>| -> Result<MisTriple, ModelError> {
            Ok(MisTriple {
                d0: f(p, ExtTime::Finite(0.0))?,
                d_plus_inf: f(p, ExtTime::PosInf)?,
                d_minus_inf: f(p, ExtTime::NegInf)?,
            })
        };
        Ok(MeasuredDelays {
            fall: triple(mis_delay_falling)?,
            rise: triple(mis_delay_rising)?,
            d_min: p.d_min,
            c_load: p.c_load,
            vdd: p.vdd,
        })
    }

    pub fn validate(&self) -> Result<(), CharacterizationError> {
        let bad = |msg: String| Err(CharacterizationError::NonPhysical(msg));
        if !(self.d_min >= 0.0 && self.d_min.is_finite()) {
            return bad(format!("dmin_s must be >= 0, got {:e}", self.d_min));
        }
        if !(self.c_load > 0.0 && self.c_load.is_finite()) {
            return bad(format!("c_f must be positive, got {:e}", self.c_load));
        }
        if !(self.vdd > 0.0 && self.vdd.is_finite()) {
            return bad(format!("vdd_v must be positive, got {:e}", self.vdd));
        }
        for (edge, triple) in [("fall", &self.fall), ("rise", &self.rise)] {
            for (which, d) in triple.iter() {
                if !(d > self.d_min && d.is_finite()) {
                    return bad(format!("{edge} delay at delta={which} ({d:e} s) must exceed dmin_s"));
                }
            }
        }
        if !(self.fall.d_plus_inf > self.fall.d0 && self.fall.d_minus_inf > self.fall.d0) {
            return bad("falling-output delay at delta=0 must be below both single-input delays".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FallingFit {
    pub r5: f64,
    pub r_na: f64,
    pub r_nb: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub edge: &'static str,
    pub delta: &'static str,
    pub measured: f64,
    pub predicted: f64,
    pub relative: f64,
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} delta={}: measured {:e} s, predicted {:e} s ({:+.3e})",
            self.edge, self.delta, self.measured, self.predicted, self.relative
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharacterizationError {
    #[error("non-physical measurement set: {0}")]
    NonPhysical(String),
    #[error("no root for R in [{lo:e}, {hi:e}] ohm (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    NoRoot { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("characterized gate misses the measured delays:\n{}", format_residuals(.0))]
    Verification(Vec<Residual>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn format_residuals(rs: &[Residual]) -> String {
    rs.iter().map(|r| format!("  {r}")).collect::<Vec<_>>().join("\n")
}

pub fn characterize_falling(m: &MeasuredDelays) -> Result<FallingFit, CharacterizationError> {
    m.validate()?;
    let scale = LN_2 * m.c_load;
    let plus = m.fall.d_plus_inf - m.fall.d0;
    let minus = m.fall.d_minus_inf - m.fall.d0;
    let epsilon = (plus * minus).sqrt();
    let r5 = (m.fall.d0 - m.d_min - epsilon) / scale;
    if r5 < 0.0 {
        return Err(CharacterizationError::NonPhysical(format!(
            "interconnect resistance would be negative ({r5:e} ohm): falling delay at delta=0 is too small"
        )));
    }
    Ok(FallingFit { r5, r_na: (plus + epsilon) / scale, r_nb: (minus + epsilon) / scale, epsilon })
}

/// pMOS switch-on slope that makes the single-path rising delay equal `t`
/// (delay excluding `δmin`), given `R`, `R5` and `C`. Zero at
/// `t = C(R5+2R)·ln2`; undefined below.
pub fn a_func(t: f64, r: f64, r5: f64, c: f64) -> Result<f64, NumericsError> {
    let k = c * (r5 + 2.0 * r) * LN_2;
    if t == k {
        return Ok(0.0);
    }
    if !(t > k) {
        return Err(NumericsError::LambertDomain((k / t - 1.0) * (k / t - 1.0).exp()));
    }
    let u = k / t - 1.0;
    // W-1 argument is u·e^u with u in (-1, 0)
    let w = lambert_w_minus1_log((-u).ln() + u)?;
    Ok(-2.0 * r * (t - k) / (w - u))
}

/// Largest `R` at which `a_func` is defined for all three rising delays.
fn r_upper_bound(m: &MeasuredDelays, r5: f64) -> f64 {
    let t_min = m.rise.d0.min(m.rise.d_plus_inf).min(m.rise.d_minus_inf) - m.d_min;
    0.5 * (t_min / (LN_2 * m.c_load) - r5)
}

fn r_equation(m: &MeasuredDelays, r5: f64, r: f64) -> Result<f64, NumericsError> {
    let a = |d: f64| a_func(d - m.d_min, r, r5, m.c_load);
    Ok(a(m.rise.d0)? - a(m.rise.d_plus_inf)? - a(m.rise.d_minus_inf)?)
}

pub fn solve_r(m: &MeasuredDelays, r5: f64) -> Result<f64, CharacterizationError> {
    m.validate()?;
    let hi = R_SCAN_HI.min(r_upper_bound(m, r5) * (1.0 - 1e-12));
    if !(hi > R_SCAN_LO) {
        return Err(CharacterizationError::NonPhysical(format!(
            "rising delays too small for any R >= {R_SCAN_LO} ohm with R5 = {r5:e} ohm"
        )));
    }
    let ratio = (hi / R_SCAN_LO).powf(1.0 / R_SCAN_STEPS as f64);
    let mut lo_r = R_SCAN_LO;
    let mut lo_f = r_equation(m, r5, lo_r)?;
    let mut grid_r = lo_r;
    for i in 1..=R_SCAN_STEPS {
        grid_r = if i == R_SCAN_STEPS { hi } else { R_SCAN_LO * ratio.powi(i as i32) };
        let f = r_equation(m, r5, grid_r)?;
        if f == 0.0 {
            return Ok(grid_r);
        }
        if lo_f.signum() != f.signum() {
            let report = solve_bracketed(BracketedRootProblem {
                function: |r: f64| r_equation(m, r5, r).unwrap_or(f64::NAN),
                lo: lo_r,
                hi: grid_r,
                abs_tolerance: 1e-12 * grid_r,
            })?;
            log::debug!("R root {:e} ohm after {} iterations", report.root, report.iterations);
            return Ok(report.root);
        }
        lo_r = grid_r;
        lo_f = f;
    }
    Err(CharacterizationError::NoRoot {
        lo: R_SCAN_LO,
        hi: grid_r,
        f_lo: r_equation(m, r5, R_SCAN_LO)?,
        f_hi: lo_f,
    })
}

pub fn characterize(m: &MeasuredDelays) -> Result<GateParams, CharacterizationError> {
    characterize_with_tolerance(m, DEFAULT_TOLERANCE)
}

pub fn characterize_with_tolerance(m: &MeasuredDelays, tolerance: f64) -> Result<GateParams, CharacterizationError> {
    let fit = characterize_falling(m)?;
    let r = solve_r(m, fit.r5)?;
    let alpha1 = a_func(m.rise.d_minus_inf - m.d_min, r, fit.r5, m.c_load)?;
    let alpha2 = a_func(m.rise.d_plus_inf - m.d_min, r, fit.r5, m.c_load)?;
    let p = GateParams {
        vdd: m.vdd,
        c_load: m.c_load,
        r5: fit.r5,
        r_na: fit.r_na,
        r_nb: fit.r_nb,
        r,
        alpha1,
        alpha2,
        d_min: m.d_min,
    };
    p.validate()?;
    let residuals = verify(&p, m)?;
    if residuals.iter().any(|r| r.relative.abs() > tolerance) {
        return Err(CharacterizationError::Verification(residuals));
    }
    Ok(p)
}

/// Predicted versus measured delay at the six matching points.
pub fn verify(p: &GateParams, m: &MeasuredDelays) -> Result<Vec<Residual>, ModelError> {
    let deltas = [("0", ExtTime::Finite(0.0)), ("+inf", ExtTime::PosInf), ("-inf", ExtTime::NegInf)];
    let mut out = Vec::with_capacity(6);
    for (edge, triple) in [("fall", &m.fall), ("rise", &m.rise)] {
        for ((label, delta), (_, measured)) in deltas.iter().zip(triple.iter()) {
            let predicted = if edge == "fall" { mis_delay_falling(p, *delta)? } else { mis_delay_rising(p, *delta)? };
            out.push(Residual { edge, delta: label, measured, predicted, relative: (predicted - measured) / measured });
        }
    }
    Ok(out)
}
