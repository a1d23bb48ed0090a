#![allow(dead_code)]

use hybridtime::channel::{Edge, Input, InputTransition};
use hybridtime::GateParams;
use rand::Rng;

pub const PS: f64 = 1e-12;

/// Reference NOR chain parameters with every resistance and slope scaled by a factor in
/// `[1 - spread, 1 + spread]`.
pub fn random_params<R: Rng>(rng: &mut R, spread: f64) -> GateParams {
    let base = GateParams::nor_chain_reference();
    let mut f = || 1.0 + rng.random_range(-spread..=spread);
    GateParams {
        r5: base.r5 * f(),
        r_na: base.r_na * f(),
        r_nb: base.r_nb * f(),
        r: base.r * f(),
        alpha1: base.alpha1 * f(),
        alpha2: base.alpha2 * f(),
        ..base
    }
}

/// Random well-formed input sequence. With `allow_ties`, consecutive events
/// may share a timestamp.
pub fn random_sequence<R: Rng>(
    rng: &mut R,
    max_len: usize,
    max_gap: f64,
    allow_ties: bool,
) -> ((bool, bool), Vec<InputTransition>) {
    let initial = (rng.random_bool(0.5), rng.random_bool(0.5));
    let len = rng.random_range(0..=max_len);
    let mut levels = initial;
    let mut t = 0.0;
    let mut seq = Vec::with_capacity(len);
    for k in 0..len {
        if k > 0 {
            t += if allow_ties && rng.random_bool(0.05) { 0.0 } else { rng.random_range(1e-16..max_gap) };
        }
        let input = if rng.random_bool(0.5) { Input::A } else { Input::B };
        let level = match input {
            Input::A => {
                levels.0 = !levels.0;
                levels.0
            }
            Input::B => {
                levels.1 = !levels.1;
                levels.1
            }
        };
        seq.push(InputTransition::new(input, Edge::towards(level), t));
    }
    (initial, seq)
}
