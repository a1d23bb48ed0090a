use super::{derived_caps, CaseId, DerivedCaps, Extremal, GateParams, ModelError};
use crate::numerics::lambert_w_minus1_log;
use crate::time::ExtTime;

/// Coefficients of the second-mode rising-output trajectory, for one
/// leading pMOS slope `α` (α2 in case g, α1 in case h) and `|Δ|`.
///
/// `d ± sqrt(χ)` are kept separately because `d - sqrt(χ)` cancels badly for
/// small `Δ` and has a finite limit as `Δ → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxRisingOutputConsts {
    pub a_coef: f64,
    pub d_coef: f64,
    pub chi: f64,
    pub a_exp: f64,
    pub d_plus_s: f64,
    pub d_minus_s: f64,
}

impl AuxRisingOutputConsts {
    pub fn new(p: &GateParams, alpha_lead: f64, delta_abs: ExtTime) -> Result<Self, ModelError> {
        let two_r = 2.0 * p.r;
        let a = (p.alpha1 + p.alpha2) / two_r;
        match delta_abs {
            ExtTime::PosInf => Ok(AuxRisingOutputConsts {
                a_coef: a,
                d_coef: f64::INFINITY,
                chi: f64::INFINITY,
                a_exp: alpha_lead / two_r,
                d_plus_s: f64::INFINITY,
                d_minus_s: alpha_lead / p.r,
            }),
            ExtTime::Finite(delta) if delta >= 0.0 => {
                let d = a + delta;
                let c_prime = alpha_lead * delta / two_r;
                let chi = d * d - 4.0 * c_prime;
                if !(chi > 0.0) {
                    return Err(ModelError::ComplexRoots { chi, delta });
                }
                let s = chi.sqrt();
                let d_minus_s = 4.0 * c_prime / (d + s);
                let a_exp = if delta == 0.0 {
                    0.0
                } else {
                    (alpha_lead * delta - a * p.r * d_minus_s) / (two_r * s)
                };
                Ok(AuxRisingOutputConsts { a_coef: a, d_coef: d, chi, a_exp, d_plus_s: d + s, d_minus_s })
            }
            other => Err(ModelError::Domain {
                what: "|delta|",
                value: other.to_f64(),
                range: "[0, +inf]",
            }),
        }
    }

    /// The two algebraic factors `(1+2t/(d+√χ+2s))^((a-A)/τ) (1+2t/(d-√χ+2s))^(A/τ)`.
    pub fn factors(&self, t: f64, shift: f64, tau_r: f64) -> f64 {
        let mut ln = 0.0;
        if self.d_plus_s.is_finite() {
            ln += (self.a_coef - self.a_exp) / tau_r * log1p_ratio(t, self.d_plus_s + 2.0 * shift);
        }
        if self.a_exp != 0.0 {
            ln += self.a_exp / tau_r * log1p_ratio(t, self.d_minus_s + 2.0 * shift);
        }
        ln.exp()
    }
}

fn log1p_ratio(t: f64, den: f64) -> f64 {
    // before the trajectory start the base may dip below zero by rounding
    (2.0 * t / den).max(-1.0).ln_1p()
}

/// Parameter set with its derived constants, for repeated evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NorModel {
    pub p: GateParams,
    pub caps: DerivedCaps,
    /// `C1·RnA`, cases a/f.
    pub tau_a: f64,
    /// `C1'·RnB`, cases b/e.
    pub tau_b: f64,
    /// `C2·RnA·RnB/(RnA+RnB)`, cases c/d.
    pub tau_c: f64,
    /// `2R·C3`, cases g/h.
    pub tau_r: f64,
}

impl NorModel {
    pub fn new(p: GateParams) -> Result<NorModel, ModelError> {
        p.validate()?;
        Ok(NorModel::new_unchecked(p))
    }

    pub(crate) fn new_unchecked(p: GateParams) -> NorModel {
        let caps = derived_caps(&p);
        NorModel {
            p,
            caps,
            tau_a: caps.c1 * p.r_na,
            tau_b: caps.c1_prime * p.r_nb,
            tau_c: caps.c2 * p.r_na * p.r_nb / (p.r_na + p.r_nb),
            tau_r: 2.0 * p.r * caps.c3,
        }
    }

    pub fn falling_tau(&self, case: CaseId) -> Option<f64> {
        match case {
            CaseId::A | CaseId::F => Some(self.tau_a),
            CaseId::B | CaseId::E => Some(self.tau_b),
            CaseId::C | CaseId::D => Some(self.tau_c),
            CaseId::G | CaseId::H => None,
        }
    }

    fn check_vint(&self, v_int: f64) -> Result<(), ModelError> {
        if v_int >= 0.0 && v_int <= self.p.vdd {
            Ok(())
        } else {
            Err(ModelError::Domain { what: "v_int", value: v_int, range: "[0, VDD]" })
        }
    }

    pub fn delta_extremal(&self, v_int: f64, which: Extremal) -> Result<f64, ModelError> {
        let p = &self.p;
        if !(v_int >= 0.0 && v_int <= 0.5 * p.vdd) {
            return Err(ModelError::Domain { what: "v_int", value: v_int, range: "[0, VDD/2]" });
        }
        let alpha = match which {
            Extremal::Zero => p.alpha1 + p.alpha2,
            Extremal::PlusInf => p.alpha2,
            Extremal::MinusInf => p.alpha1,
        };
        let ratio = 2.0 * (p.vdd - v_int) / p.vdd;
        let kappa = 4.0 * p.r * p.r * self.caps.c3 / alpha;
        // W-1 argument is -1/(e·ratio^kappa); pass its log to avoid underflow
        let y = -1.0 - kappa * ratio.ln();
        let w = lambert_w_minus1_log(y)?;
        Ok((-(alpha / (2.0 * p.r)) * (1.0 + w)).max(0.0))
    }

    /// Delay of `case` from `v_int`, including `δmin`. `delta` is the signed
    /// input separation (used by g and h only).
    pub fn delay(&self, case: CaseId, v_int: f64, delta: ExtTime) -> Result<ExtTime, ModelError> {
        self.check_vint(v_int)?;
        let p = &self.p;
        if let Some(tau) = self.falling_tau(case) {
            if v_int == 0.0 {
                return Ok(ExtTime::NegInf);
            }
            return Ok(ExtTime::Finite(tau * (2.0 * v_int / p.vdd).ln() + p.d_min));
        }
        if v_int == p.vdd {
            return Ok(ExtTime::NegInf);
        }
        if v_int > 0.5 * p.vdd {
            return Ok(ExtTime::Finite(-self.tau_r * (p.vdd / (2.0 * (p.vdd - v_int))).ln() + p.d_min));
        }
        let (slope_alpha, single, delta_abs) = self.rising_side(case, delta)?;
        let d0 = self.delta_extremal(v_int, Extremal::Zero)?;
        let d_single = self.delta_extremal(v_int, single)?;
        let delay = match delta_abs {
            ExtTime::Finite(dabs) => {
                let sum = p.alpha1 + p.alpha2;
                let breakpoint = sum * (d0 - d_single) / slope_alpha;
                if dabs < breakpoint {
                    d0 - slope_alpha / sum * dabs
                } else {
                    d_single
                }
            }
            _ => d_single,
        };
        Ok(ExtTime::Finite(delay + p.d_min))
    }

    /// `(slope α, single-switch extremal, |Δ|)` for the rising cases.
    fn rising_side(&self, case: CaseId, delta: ExtTime) -> Result<(f64, Extremal, ExtTime), ModelError> {
        match case {
            CaseId::G => match delta {
                ExtTime::Finite(d) if d < 0.0 => {
                    Err(ModelError::Domain { what: "delta (case g)", value: d, range: "[0, +inf]" })
                }
                ExtTime::NegInf => Err(ModelError::Domain {
                    what: "delta (case g)",
                    value: f64::NEG_INFINITY,
                    range: "[0, +inf]",
                }),
                d => Ok((self.p.alpha1, Extremal::PlusInf, d)),
            },
            CaseId::H => Ok((self.p.alpha2, Extremal::MinusInf, delta.abs())),
            _ => unreachable!("falling-output case passed to rising_side"),
        }
    }

    fn rising_aux(&self, case: CaseId, delta: ExtTime) -> Result<AuxRisingOutputConsts, ModelError> {
        let (_, _, delta_abs) = self.rising_side(case, delta)?;
        let alpha_lead = if case == CaseId::G { self.p.alpha2 } else { self.p.alpha1 };
        AuxRisingOutputConsts::new(&self.p, alpha_lead, delta_abs)
    }

    /// Output voltage `t` seconds after the (possibly virtual) threshold
    /// crossing of the trajectory of `case` that started from `v_int`.
    /// Negative `t` is allowed back to the trajectory start.
    pub fn shifted_trajectory(&self, case: CaseId, t: f64, delta: ExtTime, v_int: f64) -> Result<f64, ModelError> {
        self.check_vint(v_int)?;
        let p = &self.p;
        if let Some(tau) = self.falling_tau(case) {
            return Ok(0.5 * p.vdd * (-t / tau).exp());
        }
        let aux = self.rising_aux(case, delta)?;
        if v_int <= 0.5 * p.vdd {
            let t_cross = match self.delay(case, v_int, delta)? {
                ExtTime::Finite(d) => d - p.d_min,
                other => unreachable!("rising delay below VDD/2 is finite, got {other}"),
            };
            let decay = (-t / self.tau_r).exp() * aux.factors(t, t_cross, self.tau_r);
            return Ok(p.vdd * (1.0 - 0.5 * decay));
        }
        if v_int == p.vdd {
            return Ok(p.vdd);
        }
        let lead = self.tau_r * (p.vdd / (2.0 * (p.vdd - v_int))).ln();
        let u = t - lead;
        let mut decay = (-u / self.tau_r).exp();
        if u > 0.0 {
            decay *= aux.factors(u, 0.0, self.tau_r);
        }
        Ok(p.vdd + (v_int - p.vdd) * decay)
    }
}

pub fn delta_extremal(p: &GateParams, v_int: f64, which: Extremal) -> Result<f64, ModelError> {
    NorModel::new(*p)?.delta_extremal(v_int, which)
}

pub fn nor_delay(case: CaseId, p: &GateParams, v_int: f64, delta: ExtTime) -> Result<ExtTime, ModelError> {
    NorModel::new(*p)?.delay(case, v_int, delta)
}

pub fn nor_shifted_trajectory(
    case: CaseId,
    p: &GateParams,
    t: f64,
    delta: ExtTime,
    v_int: f64,
) -> Result<f64, ModelError> {
    NorModel::new(*p)?.shifted_trajectory(case, t, delta, v_int)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;

    use super::*;
    use crate::gate_model::raw::{nor_raw_trajectory, RawMode};

    const PS: f64 = 1e-12;

    fn model() -> NorModel {
        NorModel::new(GateParams::nor_chain_reference()).unwrap()
    }

    // Independent oracle: bisection for w·e^w = x on the lower branch.
    fn w_bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-800.0f64, -1.0f64);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn extremal_oracle(p: &GateParams, v: f64, alpha: f64) -> f64 {
        let c3 = p.derived_caps().c3;
        let kappa = 4.0 * p.r * p.r * c3 / alpha;
        let ratio: f64 = 2.0 * (p.vdd - v) / p.vdd;
        let x = -1.0 / (std::f64::consts::E * ratio.powf(kappa));
        -(alpha / (2.0 * p.r)) * (1.0 + w_bisect(x))
    }

    #[test]
    fn extremal_delays_match_bisection_oracle() {
        let m = model();
        let p = m.p;
        for v in [0.0, 0.1, 0.2, 0.3, 0.39] {
            for (which, alpha) in [
                (Extremal::Zero, p.alpha1 + p.alpha2),
                (Extremal::PlusInf, p.alpha2),
                (Extremal::MinusInf, p.alpha1),
            ] {
                let got = m.delta_extremal(v, which).unwrap();
                let want = extremal_oracle(&p, v, alpha);
                assert!((got - want).abs() < 1e-18 + 1e-9 * want, "{v} {which:?}: {got} vs {want}");
            }
        }
        assert!((m.delta_extremal(0.0, Extremal::Zero).unwrap() + p.d_min - 4.107 * PS).abs() < 0.01 * PS);
        assert!((m.delta_extremal(0.0, Extremal::PlusInf).unwrap() + p.d_min - 3.616 * PS).abs() < 0.01 * PS);
        assert_eq!(m.delta_extremal(0.4, Extremal::Zero).unwrap(), 0.0);
        assert!(m.delta_extremal(0.41, Extremal::Zero).is_err());
    }

    #[test]
    fn pure_rc_limit_for_vanishing_alpha() {
        let p = GateParams {
            alpha1: 966.4e-12 * 1e-6,
            alpha2: 633.7e-12 * 1e-6,
            ..GateParams::nor_chain_reference()
        };
        let m = NorModel::new(p).unwrap();
        let got = m.delta_extremal(0.0, Extremal::Zero).unwrap();
        let want = LN_2 * m.tau_r;
        assert!((got - want).abs() < 1e-5 * want, "{got} vs {want}");
    }

    #[test]
    fn reference_case_delays() {
        let m = model();
        let vdd = m.p.vdd;
        let a = m.delay(CaseId::A, vdd, ExtTime::PosInf).unwrap().finite().unwrap();
        assert!((a - 3.7226 * PS).abs() < 0.005 * PS, "{a}");
        assert_eq!(m.delay(CaseId::A, 0.5 * vdd, ExtTime::PosInf).unwrap(), ExtTime::Finite(m.p.d_min));
        let c = m.delay(CaseId::C, vdd, ExtTime::PosInf).unwrap().finite().unwrap();
        assert!((c - 2.190 * PS).abs() < 0.005 * PS, "{c}");
        let g = m.delay(CaseId::G, 0.0, ExtTime::Finite(0.0)).unwrap().finite().unwrap();
        assert!((g - 4.107 * PS).abs() < 0.01 * PS, "{g}");
        for delta in [ExtTime::Finite(0.0), ExtTime::Finite(3.0 * PS), ExtTime::PosInf] {
            let g = m.delay(CaseId::G, 0.8168 * vdd, delta).unwrap().finite().unwrap();
            assert!((g + 3.72 * PS).abs() < 0.02 * PS, "{g}");
        }
        assert_eq!(m.delay(CaseId::B, 0.0, ExtTime::PosInf).unwrap(), ExtTime::NegInf);
        assert_eq!(m.delay(CaseId::H, vdd, ExtTime::NegInf).unwrap(), ExtTime::NegInf);
        assert!(m.delay(CaseId::A, 1.2 * vdd, ExtTime::PosInf).is_err());
        assert!(m.delay(CaseId::G, 0.1, ExtTime::Finite(-1e-12)).is_err());
    }

    #[test]
    fn rising_delay_continuous_at_breakpoint() {
        let m = model();
        let p = m.p;
        for v in [0.0, 0.15, 0.3] {
            let d0 = m.delta_extremal(v, Extremal::Zero).unwrap();
            for (case, single, slope, sign) in [
                (CaseId::G, Extremal::PlusInf, p.alpha1, 1.0),
                (CaseId::H, Extremal::MinusInf, p.alpha2, -1.0),
            ] {
                let ds = m.delta_extremal(v, single).unwrap();
                let bp = (p.alpha1 + p.alpha2) * (d0 - ds) / slope;
                let below = m.delay(case, v, ExtTime::Finite(sign * bp * (1.0 - 1e-12))).unwrap();
                let at = m.delay(case, v, ExtTime::Finite(sign * bp)).unwrap();
                assert!((below.to_f64() - at.to_f64()).abs() < 1e-24);
                let inf = m.delay(case, v, ExtTime::Finite(sign * 1e-6)).unwrap();
                assert_eq!(at, inf);
            }
        }
    }

    #[test]
    fn threshold_anchoring() {
        let m = model();
        let half = 0.5 * m.p.vdd;
        for case in CaseId::ALL {
            let delta = if case == CaseId::H { ExtTime::Finite(-2.0 * PS) } else { ExtTime::Finite(2.0 * PS) };
            for v in [0.0, 0.1, 0.4, 0.6, 0.8] {
                if case.nor_output_rises() && v > half {
                    continue;
                }
                let x = m.shifted_trajectory(case, 0.0, delta, v).unwrap();
                assert!((x - half).abs() <= 1e-15, "{case:?} {v}: {x}");
            }
        }
        let quarter = m.shifted_trajectory(CaseId::A, LN_2 * m.tau_a, ExtTime::PosInf, 0.8).unwrap();
        assert!((quarter - 0.2).abs() < 1e-15);
    }

    #[test]
    fn falling_inverse_consistency() {
        let m = model();
        let vdd = m.p.vdd;
        for case in [CaseId::A, CaseId::B, CaseId::C, CaseId::D, CaseId::E, CaseId::F] {
            for i in 1..=100 {
                let v = 0.5 * vdd + 0.5 * vdd * i as f64 / 100.0;
                let d = m.delay(case, v, ExtTime::PosInf).unwrap().finite().unwrap();
                let back = m.shifted_trajectory(case, -(d - m.p.d_min), ExtTime::PosInf, v).unwrap();
                assert!((back - v).abs() <= 1e-9 * vdd, "{case:?} {v}: {back}");
            }
        }
    }

    #[test]
    fn rising_delay_hits_threshold_on_raw_trajectory() {
        let m = model();
        let vdd = m.p.vdd;
        let crossing = |v: f64, delta: f64| {
            let d = m.delay(CaseId::G, v, ExtTime::Finite(delta)).unwrap().finite().unwrap();
            nor_raw_trajectory(RawMode::DownDownPlus, &m.p, d - m.p.d_min, delta, v).unwrap()
        };
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            let v = 0.5 * vdd * i as f64 / 40.0;
            // exact at Δ = 0 and far beyond the breakpoint
            assert!((crossing(v, 0.0) - 0.5 * vdd).abs() < 1e-9 * vdd);
            assert!((crossing(v, 1e-6) - 0.5 * vdd).abs() < 1e-6 * vdd);
            for k in 1..=100 {
                let delta = k as f64 * 0.05 * PS;
                worst = worst.max((crossing(v, delta) - 0.5 * vdd).abs() / vdd);
            }
        }
        // the piecewise-linear delay is worst just past its breakpoint
        assert!(worst > 0.03 && worst < 0.035, "worst relative mismatch {worst}");
    }

    #[test]
    fn infinite_delta_is_the_limit_of_large_delta() {
        let m = model();
        for case in [CaseId::G, CaseId::H] {
            let sign = if case == CaseId::G { 1.0 } else { -1.0 };
            let inf = if case == CaseId::G { ExtTime::PosInf } else { ExtTime::NegInf };
            for v in [0.0, 0.3, 0.6] {
                for t in [-PS, 0.5 * PS, 3.0 * PS, 10.0 * PS] {
                    let far = m.shifted_trajectory(case, t, ExtTime::Finite(sign * 1e-3), v).unwrap();
                    let lim = m.shifted_trajectory(case, t, inf, v).unwrap();
                    assert!((far - lim).abs() < 1e-8, "{case:?} {v} {t}: {far} vs {lim}");
                }
            }
        }
    }

    #[test]
    fn case_h_is_mirrored_case_g() {
        let p = GateParams::nor_chain_reference();
        let m = NorModel::new(p).unwrap();
        let mm = NorModel::new(p.mirrored()).unwrap();
        for v in [0.0, 0.2, 0.4, 0.7] {
            for delta in [0.0, 1.0 * PS, 4.0 * PS] {
                let h = m.delay(CaseId::H, v, ExtTime::Finite(-delta)).unwrap();
                let g = mm.delay(CaseId::G, v, ExtTime::Finite(delta)).unwrap();
                assert_eq!(h, g);
                for t in [0.0, 1.0 * PS, 5.0 * PS] {
                    let th = m.shifted_trajectory(CaseId::H, t, ExtTime::Finite(-delta), v).unwrap();
                    let tg = mm.shifted_trajectory(CaseId::G, t, ExtTime::Finite(delta), v).unwrap();
                    assert!((th - tg).abs() < 1e-15);
                }
            }
        }
        let a = m.delay(CaseId::A, 0.7, ExtTime::PosInf).unwrap();
        assert_eq!(a, mm.delay(CaseId::B, 0.7, ExtTime::PosInf).unwrap());
    }

    #[test]
    fn chi_stays_positive_on_grid() {
        let base = GateParams::nor_chain_reference();
        for s1 in [0.1, 0.5, 1.0, 2.0, 10.0] {
            for s2 in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let p = GateParams { alpha1: base.alpha1 * s1, alpha2: base.alpha2 * s2, ..base };
                for k in 0..200 {
                    let delta = 1e-16 * 1.2f64.powi(k);
                    let aux = AuxRisingOutputConsts::new(&p, p.alpha2, ExtTime::Finite(delta)).unwrap();
                    assert!(aux.chi > 0.0);
                    assert!(aux.d_minus_s > 0.0);
                }
            }
        }
    }

    #[test]
    fn virtual_rising_branch_joins_real_trajectory() {
        let m = model();
        let v = 0.7;
        for t in [6.0 * PS, 8.0 * PS, 15.0 * PS] {
            let shifted = m.shifted_trajectory(CaseId::G, t, ExtTime::Finite(1.0 * PS), v).unwrap();
            let lead = m.tau_r * (m.p.vdd / (2.0 * (m.p.vdd - v))).ln();
            let raw = nor_raw_trajectory(RawMode::DownDownPlus, &m.p, t - lead, 1.0 * PS, v).unwrap();
            assert!((shifted - raw).abs() < 1e-15);
        }
    }
}
