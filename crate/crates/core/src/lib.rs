//! Digital dynamic timing simulation with a thresholded hybrid delay model of
//! 2-input NOR and NAND gates that captures multi-input switching and
//! drafting.

// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod benchmarks;
pub mod channel;
pub mod characterization;
pub mod gate_model;
pub mod metrics;
pub mod netlist;
pub mod numerics;
pub mod simulator;
pub mod stimuli;
pub mod time;
pub mod trace;

pub use gate_model::{CaseId, GateParams};
pub use time::ExtTime;
