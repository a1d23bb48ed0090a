//! NAND gates through duality: negating both inputs and the output of a NOR
//! gate gives a NAND gate, so every NAND case maps onto a NOR case with the
//! voltage mirrored about `VDD/2`.

use super::nor::NorModel;
use super::{CaseId, GateParams, ModelError};
use crate::time::ExtTime;

pub fn dual_case(case: CaseId) -> CaseId {
    use CaseId::*;
    match case {
        A => E,
        B => F,
        C => G,
        D => H,
        E => A,
        F => B,
        G => C,
        H => D,
    }
}

pub fn nand_delay(case: CaseId, p: &GateParams, v_int: f64, delta: ExtTime) -> Result<ExtTime, ModelError> {
    NorModel::new(*p)?.delay(dual_case(case), p.vdd - v_int, delta)
}

pub fn nand_shifted_trajectory(
    case: CaseId,
    p: &GateParams,
    t: f64,
    delta: ExtTime,
    v_int: f64,
) -> Result<f64, ModelError> {
    let v = NorModel::new(*p)?.shifted_trajectory(dual_case(case), t, delta, p.vdd - v_int)?;
    Ok(p.vdd - v)
}
