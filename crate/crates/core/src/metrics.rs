//! Deviation between a candidate trace and a reference trace.
//!
//! Edges of the two traces are paired greedily in chronological order. A
//! pulse (two successive transitions) of one trace that completes before
//! the other trace's next transition is an *original* glitch: suppressed if
//! it is in the reference, induced if it is in the candidate. A pulse of one
//! trace that properly contains the corresponding pulse of the other is an
//! *inverted* glitch, suppressed when the reference pulse is the outer one.
//!
//! A paired edge contributes `|t_cand - t_ref|` to the leading area when the
//! candidate switches first and to the trailing area otherwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Trace, TraceError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("traces are for different nets ({reference} vs {candidate})")]
    NetMismatch { reference: String, candidate: String },
    #[error("net {net}: initial levels differ")]
    InitialLevelMismatch { net: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlitchCounts {
    pub original_suppressed: usize,
    pub original_induced: usize,
    pub inverted_suppressed: usize,
    pub inverted_induced: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GlitchRates {
    /// Suppressed glitches per reference transition.
    pub suppressed: f64,
    /// Induced glitches per candidate transition.
    pub induced: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub net: String,
    /// Area (in seconds at unit swing) where the candidate leads.
    pub leading_area: f64,
    /// Area where the candidate trails.
    pub trailing_area: f64,
    /// Summed width of original glitch pulses.
    pub glitch_area: f64,
    pub glitches_included: bool,
    /// Number of paired edges.
    pub transition_count: usize,
    /// Total deviation area per paired edge.
    pub area_per_transition: f64,
    /// `(leading - trailing) / transition_count`; negative when the
    /// candidate is late on average.
    pub net_area_per_transition: f64,
    pub glitches: GlitchCounts,
    pub glitch_rate: GlitchRates,
    /// Transitions left over once one trace is exhausted; nonzero when the
    /// traces end at different levels.
    pub unpaired: usize,
}

impl DeviationReport {
    pub fn total_area(&self) -> f64 {
        self.leading_area + self.trailing_area + if self.glitches_included { self.glitch_area } else { 0.0 }
    }
}

pub fn compare(reference: &Trace, candidate: &Trace, include_glitches: bool) -> Result<DeviationReport, MetricsError> {
    if reference.net != candidate.net {
        return Err(MetricsError::NetMismatch { reference: reference.net.clone(), candidate: candidate.net.clone() });
    }
    compare_signals(reference, candidate, include_glitches)
}

/// As [`compare`], without requiring equal net names.
pub fn compare_signals(
    reference: &Trace,
    candidate: &Trace,
    include_glitches: bool,
) -> Result<DeviationReport, MetricsError> {
    reference.validate()?;
    candidate.validate()?;
    if reference.initial_level != candidate.initial_level {
        return Err(MetricsError::InitialLevelMismatch { net: reference.net.clone() });
    }
    let r: Vec<f64> = reference.times().collect();
    let c: Vec<f64> = candidate.times().collect();
    let (mut i, mut j) = (0, 0);
    let mut leading = 0.0;
    let mut trailing = 0.0;
    let mut glitch_area = 0.0;
    let mut pairs = 0;
    let mut g = GlitchCounts::default();
    let mut previous_pair: Option<(f64, f64)> = None;

    loop {
        let rn = r.get(i).copied();
        let cn = c.get(j).copied();
        let r_pulse_first = r.get(i + 1).is_some_and(|&r1| cn.is_none_or(|c0| r1 < c0));
        let c_pulse_first = c.get(j + 1).is_some_and(|&c1| rn.is_none_or(|r0| c1 < r0));
        if r_pulse_first {
            g.original_suppressed += 1;
            glitch_area += r[i + 1] - r[i];
            i += 2;
            previous_pair = None;
        } else if c_pulse_first {
            g.original_induced += 1;
            glitch_area += c[j + 1] - c[j];
            j += 2;
            previous_pair = None;
        } else if let (Some(rt), Some(ct)) = (rn, cn) {
            if ct < rt {
                leading += rt - ct;
            } else {
                trailing += ct - rt;
            }
            if let Some((rp, cp)) = previous_pair {
                if rp < cp && ct < rt {
                    g.inverted_suppressed += 1;
                } else if cp < rp && rt < ct {
                    g.inverted_induced += 1;
                }
            }
            previous_pair = Some((rt, ct));
            pairs += 1;
            i += 1;
            j += 1;
        } else {
            break;
        }
    }
    let unpaired = (r.len() - i) + (c.len() - j);
    if unpaired > 0 {
        log::warn!("net {}: {unpaired} transition(s) left unpaired", reference.net);
    }

    let total = leading + trailing + if include_glitches { glitch_area } else { 0.0 };
    let per = |x: f64| if pairs > 0 { x / pairs as f64 } else { 0.0 };
    let rate = |n: usize, d: usize| if d > 0 { n as f64 / d as f64 } else { 0.0 };
    Ok(DeviationReport {
        net: reference.net.clone(),
        leading_area: leading,
        trailing_area: trailing,
        glitch_area,
        glitches_included: include_glitches,
        transition_count: pairs,
        area_per_transition: per(total),
        net_area_per_transition: per(leading - trailing),
        glitch_rate: GlitchRates {
            suppressed: rate(g.original_suppressed + g.inverted_suppressed, r.len()),
            induced: rate(g.original_induced + g.inverted_induced, c.len()),
        },
        glitches: g,
        unpaired,
    })
}
