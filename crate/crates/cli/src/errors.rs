//! Exit codes: 1 usage, 2 data or validation, 3 numeric failure.

use std::fmt;

use hybridtime::characterization::CharacterizationError;
use hybridtime::gate_model::ModelError;
use hybridtime::numerics::NumericsError;

/// Flag values rejected after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

#[derive(Debug)]
pub struct Data(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Data {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}
impl std::error::Error for Data {}

fn model_is_numeric(e: &ModelError) -> bool {
    !matches!(e, ModelError::InvalidParams(_))
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if cause.is::<NumericsError>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            if model_is_numeric(e) {
                return 3;
            }
        }
        if let Some(e) = cause.downcast_ref::<CharacterizationError>() {
            return match e {
                CharacterizationError::NonPhysical(_) => 2,
                CharacterizationError::Model(m) if !model_is_numeric(m) => 2,
                _ => 3,
            };
        }
    }
    2
}
