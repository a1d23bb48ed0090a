//! Extended-real time values and unit-suffixed time parsing.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A time that may be `±∞`.
///
/// Input separation registers start at `-∞`, and delays of a settled output
/// trajectory are `-∞`; both have exact closed-form branches, so they are
/// carried explicitly instead of as large sentinels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtTime {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtTime::Finite(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtTime::Finite(_))
    }

    pub fn abs(self) -> ExtTime {
        match self {
            ExtTime::Finite(t) => ExtTime::Finite(t.abs()),
            _ => ExtTime::PosInf,
        }
    }

    /// Lossy conversion to `f64` (`±∞` map to the IEEE infinities).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtTime::NegInf => f64::NEG_INFINITY,
            ExtTime::Finite(t) => t,
            ExtTime::PosInf => f64::INFINITY,
        }
    }

    pub fn from_f64(t: f64) -> ExtTime {
        if t == f64::INFINITY {
            ExtTime::PosInf
        } else if t == f64::NEG_INFINITY {
            ExtTime::NegInf
        } else {
            ExtTime::Finite(t)
        }
    }

    /// `self + dt`, with `±∞` absorbing.
    pub fn plus(self, dt: f64) -> ExtTime {
        match self {
            ExtTime::Finite(t) => ExtTime::from_f64(t + dt),
            other => other,
        }
    }
}

impl From<f64> for ExtTime {
    fn from(t: f64) -> Self {
        ExtTime::from_f64(t)
    }
}

impl fmt::Display for ExtTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtTime::NegInf => write!(f, "-inf"),
            ExtTime::PosInf => write!(f, "+inf"),
            ExtTime::Finite(t) => write!(f, "{t:e}"),
        }
    }
}

/// Parses `"15ps"`, `"0.3 ns"`, `"100fs"`, `"2e-12"` (bare numbers are seconds).
pub fn parse_time(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("invalid time value `{text}`"))?;
    let scale = match unit.trim() {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "fs" => 1e-15,
        other => return Err(format!("unknown time unit `{other}` in `{text}`")),
    };
    if !value.is_finite() {
        return Err(format!("time `{text}` is not finite"));
    }
    Ok(value * scale)
}
