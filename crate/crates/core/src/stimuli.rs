//! Random input traces with normally distributed gaps between transitions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Trace, Transition};

pub const DEFAULT_FLOOR: f64 = 100e-15;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid stimulus spec: {0}")]
pub struct StimulusError(String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    #[serde(rename = "mu_s")]
    pub mu: f64,
    #[serde(rename = "sigma_s")]
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    /// Smallest allowed gap; shorter draws are raised to it.
    #[serde(rename = "floor_s", default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

impl StimulusSpec {
    pub fn new(mu: f64, sigma: f64, n: usize, seed: u64) -> StimulusSpec {
        StimulusSpec { mu, sigma, n, seed, floor: DEFAULT_FLOOR }
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(StimulusError(format!("mu must be positive, got {:e}", self.mu)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(StimulusError(format!("sigma must be >= 0, got {:e}", self.sigma)));
        }
        if self.n == 0 {
            return Err(StimulusError("n must be at least 1".into()));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(StimulusError(format!("floor must be positive, got {:e}", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stimuli {
    pub traces: Vec<Trace>,
    /// Gaps raised to the floor, over all inputs.
    pub truncated: usize,
    pub total_gaps: usize,
}

impl Stimuli {
    pub fn truncation_rate(&self) -> f64 {
        self.truncated as f64 / self.total_gaps.max(1) as f64
    }

    pub fn last_time(&self) -> f64 {
        self.traces.iter().filter_map(|t| t.transitions.last()).map(|t| t.time).fold(0.0, f64::max)
    }
}

/// One trace per input, each starting low at time 0 and drawn from its own
/// random stream, so adding inputs does not change the existing ones.
pub fn generate_stimuli(spec: &StimulusSpec, inputs: &[String]) -> Result<Stimuli, StimulusError> {
    spec.validate()?;
    let normal = Normal::new(spec.mu, spec.sigma).map_err(|e| StimulusError(e.to_string()))?;
    let mut truncated = 0;
    let mut traces = Vec::with_capacity(inputs.len());
    for (k, net) in inputs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        let mut t = 0.0;
        let mut level = false;
        let mut transitions = Vec::with_capacity(spec.n);
        for _ in 0..spec.n {
            let mut gap = normal.sample(&mut rng);
            if gap < spec.floor {
                gap = spec.floor;
                truncated += 1;
            }
            // the stored times must keep the floor after rounding
            let mut next = t + gap;
            while next - t < spec.floor {
                next = next.next_up();
            }
            t = next;
            level = !level;
            transitions.push(Transition { time: t, level });
        }
        traces.push(Trace { net: net.clone(), initial_level: false, transitions });
    }
    let out = Stimuli { traces, truncated, total_gaps: spec.n * inputs.len() };
    if out.truncation_rate() > 0.01 {
        log::warn!("{:.2}% of stimulus gaps were raised to the {:e} s floor", 100.0 * out.truncation_rate(), spec.floor);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PS: f64 = 1e-12;

    fn gaps(t: &Trace) -> Vec<f64> {
        let mut last = 0.0;
        t.times()
            .map(|x| {
                let g = x - last;
                last = x;
                g
            })
            .collect()
    }

    #[test]
    fn zero_sigma_is_periodic() {
        let s = generate_stimuli(&StimulusSpec::new(15.0 * PS, 0.0, 10, 1), &["a".into()]).unwrap();
        for g in gaps(&s.traces[0]) {
            assert!((g - 15.0 * PS).abs() < 1e-24);
        }
        assert_eq!(s.truncated, 0);
        assert!(!s.traces[0].initial_level);
        assert!(s.traces[0].transitions[0].level);
    }

    #[test]
    fn gaussian_gaps() {
        let spec = StimulusSpec::new(15.0 * PS, 5.0 * PS, 2000, 42);
        let s = generate_stimuli(&spec, &["a".into(), "b".into()]).unwrap();
        for t in &s.traces {
            assert_eq!(t.transitions.len(), 2000);
            t.validate().unwrap();
            let g = gaps(t);
            assert!(g.iter().all(|&x| x >= spec.floor));
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            assert!((mean - 15.0 * PS).abs() < 3.0 * 5.0 * PS / (2000f64).sqrt(), "{mean}");
        }
        assert_ne!(s.traces[0].transitions, s.traces[1].transitions);
        assert_eq!(generate_stimuli(&spec, &["a".into(), "b".into()]).unwrap(), s);
    }

    #[test]
    fn truncation_is_counted() {
        let spec = StimulusSpec { floor: 15.0 * PS, ..StimulusSpec::new(15.0 * PS, 5.0 * PS, 1000, 3) };
        let s = generate_stimuli(&spec, &["a".into()]).unwrap();
        assert!(s.truncation_rate() > 0.4 && s.truncation_rate() < 0.6);
        assert!(StimulusSpec::new(0.0, 1.0, 1, 0).validate().is_err());
        assert!(StimulusSpec::new(1.0, 1.0, 0, 0).validate().is_err());
    }
}
