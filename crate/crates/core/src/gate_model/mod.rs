//! Closed-form quantities of the thresholded hybrid model of an
//! interconnect-augmented 2-input NOR gate, and the NAND gate obtained from
//! it by duality.
//!
//! All quantities are SI: seconds, farads, ohms, volts. The digital threshold
//! is fixed at `VDD/2`.

mod mis;
mod nand;
mod nor;
mod raw;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

pub use mis::{mis_delay_falling, mis_delay_rising};
pub use nand::{dual_case, nand_delay, nand_shifted_trajectory};
pub use nor::{delta_extremal, nor_delay, nor_shifted_trajectory, AuxRisingOutputConsts, NorModel};
pub use raw::{nor_raw_trajectory, RawMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid gate parameters: {0}")]
    InvalidParams(String),
    #[error("{what} = {value:e} is outside the valid range {range}")]
    Domain { what: &'static str, value: f64, range: &'static str },
    #[error("complex roots in the rising-output trajectory (chi = {chi:e} for delta = {delta:e})")]
    ComplexRoots { chi: f64, delta: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Physical parameter set of one characterized gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    #[serde(rename = "vdd_v")]
    pub vdd: f64,
    /// Load capacitance `C`.
    #[serde(rename = "c_f")]
    pub c_load: f64,
    /// Lumped interconnect resistance `R5`.
    #[serde(rename = "r5_ohm")]
    pub r5: f64,
    /// On-resistance of the nMOS transistor driven by input A.
    #[serde(rename = "rna_ohm")]
    pub r_na: f64,
    /// On-resistance of the nMOS transistor driven by input B.
    #[serde(rename = "rnb_ohm")]
    pub r_nb: f64,
    /// Half the summed pMOS on-resistance, `2R = RpA + RpB`.
    #[serde(rename = "r_ohm")]
    pub r: f64,
    /// Switch-on slope of the pMOS driven by A.
    #[serde(rename = "alpha1_ohm_s")]
    pub alpha1: f64,
    /// Switch-on slope of the pMOS driven by B.
    #[serde(rename = "alpha2_ohm_s")]
    pub alpha2: f64,
    /// Pure delay added to every threshold crossing.
    #[serde(rename = "dmin_s")]
    pub d_min: f64,
}

impl GateParams {
    /// Parameters of the 15 nm NOR gates of the cross-coupled NOR chain
    /// benchmark (`VDD = 0.8 V`).
    pub fn nor_chain_reference() -> GateParams {
        GateParams {
            vdd: 0.8,
            c_load: 0.9431e-15,
            r5: 828.494754381781,
            r_na: 4408.82407303950,
            r_nb: 3884.42001507398,
            r: 1705.76915128527,
            alpha1: 966.421722237134e-12,
            alpha2: 633.741820902669e-12,
            d_min: 299e-15,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("vdd_v", self.vdd),
            ("c_f", self.c_load),
            ("rna_ohm", self.r_na),
            ("rnb_ohm", self.r_nb),
            ("r_ohm", self.r),
            ("alpha1_ohm_s", self.alpha1),
            ("alpha2_ohm_s", self.alpha2),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::InvalidParams(format!("{name} must be positive and finite, got {value:e}")));
            }
        }
        if !(self.r5 >= 0.0 && self.r5.is_finite()) {
            return Err(ModelError::InvalidParams(format!("r5_ohm must be >= 0, got {:e}", self.r5)));
        }
        if !(self.d_min >= 0.0 && self.d_min.is_finite()) {
            return Err(ModelError::InvalidParams(format!("dmin_s must be >= 0, got {:e}", self.d_min)));
        }
        Ok(())
    }

    /// The A/B mirror image: swaps `RnA <-> RnB` and `α1 <-> α2`.
    pub fn mirrored(&self) -> GateParams {
        GateParams {
            r_na: self.r_nb,
            r_nb: self.r_na,
            alpha1: self.alpha2,
            alpha2: self.alpha1,
            ..*self
        }
    }

    pub fn threshold(&self) -> f64 {
        0.5 * self.vdd
    }

    pub fn derived_caps(&self) -> DerivedCaps {
        derived_caps(self)
    }
}

/// Effective capacitances of the interconnect-augmented model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCaps {
    pub c1: f64,
    pub c1_prime: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn derived_caps(p: &GateParams) -> DerivedCaps {
    let c = p.c_load;
    DerivedCaps {
        c1: c * (p.r5 + p.r_na) / p.r_na,
        c1_prime: c * (p.r5 + p.r_nb) / p.r_nb,
        c2: c * (p.r5 * (p.r_na + p.r_nb) + p.r_na * p.r_nb) / (p.r_na * p.r_nb),
        c3: c * (p.r5 + 2.0 * p.r) / (2.0 * p.r),
    }
}

/// Input-transition case of a 2-input gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    /// `(0,0) -> (1,0)`
    A,
    /// `(0,0) -> (0,1)`
    B,
    /// `(1,0) -> (1,1)`
    C,
    /// `(0,1) -> (1,1)`
    D,
    /// `(1,1) -> (0,1)`
    E,
    /// `(1,1) -> (1,0)`
    F,
    /// `(0,1) -> (0,0)`
    G,
    /// `(1,0) -> (0,0)`
    H,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::A,
        CaseId::B,
        CaseId::C,
        CaseId::D,
        CaseId::E,
        CaseId::F,
        CaseId::G,
        CaseId::H,
    ];

    /// Case of the input-state change `from -> to` (levels of A, B); exactly
    /// one input must change.
    pub fn from_transition(from: (bool, bool), to: (bool, bool)) -> Option<CaseId> {
        use CaseId::*;
        Some(match (from, to) {
            ((false, false), (true, false)) => A,
            ((false, false), (false, true)) => B,
            ((true, false), (true, true)) => C,
            ((false, true), (true, true)) => D,
            ((true, true), (false, true)) => E,
            ((true, true), (true, false)) => F,
            ((false, true), (false, false)) => G,
            ((true, false), (false, false)) => H,
            _ => return None,
        })
    }

    /// Input levels `(A, B)` before and after the transition.
    pub fn states(self) -> ((bool, bool), (bool, bool)) {
        use CaseId::*;
        match self {
            A => ((false, false), (true, false)),
            B => ((false, false), (false, true)),
            C => ((true, false), (true, true)),
            D => ((false, true), (true, true)),
            E => ((true, true), (false, true)),
            F => ((true, true), (true, false)),
            G => ((false, true), (false, false)),
            H => ((true, false), (false, false)),
        }
    }

    /// NOR output trajectory direction: true for the two rising-output cases.
    pub fn nor_output_rises(self) -> bool {
        matches!(self, CaseId::G | CaseId::H)
    }

    pub fn label(self) -> char {
        (b'a' + self as u8) as char
    }
}

/// Selector for the three extremal rising-output delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    /// Simultaneous falling inputs, `Δ = 0`.
    Zero,
    /// `Δ = +∞`: only the B-side pMOS switches.
    PlusInf,
    /// `Δ = -∞`: only the A-side pMOS switches.
    MinusInf,
}
