use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::Error;

use super::params::{CountParams, ParamSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Oracle,
    Fast,
    /// Interval counting over certified index windows.
    Windowed,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Oracle => "oracle",
            CountMode::Fast => "fast",
            CountMode::Windowed => "windowed",
        })
    }
}

impl FromStr for CountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(CountMode::Oracle),
            "fast" => Ok(CountMode::Fast),
            "windowed" => Ok(CountMode::Windowed),
            _ => Err(Error::Parse {
                what: "count mode",
                input: s.to_string(),
                reason: "expected oracle, fast or windowed".into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// `n |a(x) - a(y)| < K`
    A,
    /// `|n1 (a(x1) - a(y1)) - n2 (a(x2) - a(y2))| < K`
    B,
}

impl Condition {
    /// Exponent of the trivial bound: `N^2` for A, `N^4` for B.
    pub fn trivial_exponent(self) -> f64 {
        match self {
            Condition::A => 2.0,
            Condition::B => 4.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CountReport {
    pub condition: Condition,
    pub params: CountParams,
    pub count: u64,
    pub mode: CountMode,
    /// `count` over `K^2` (condition A) or `M N^2 (log M)^2` (condition B).
    pub bound_ratio: f64,
    pub elapsed_ms: f64,
}

impl CountReport {
    pub(crate) fn finish(
        condition: Condition,
        params: &CountParams,
        count: u64,
        mode: CountMode,
        start: Instant,
    ) -> Self {
        CountReport {
            condition,
            params: params.clone(),
            count,
            mode,
            bound_ratio: count as f64 / reference_bound(condition, params),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn summary(&self) -> CountSummary {
        CountSummary {
            condition: self.condition,
            params: self.params.summary(),
            count: self.count,
            mode: self.mode,
            bound_ratio: self.bound_ratio,
            elapsed_ms: self.elapsed_ms,
        }
    }
}

/// The reference bound used for `bound_ratio`.
pub fn reference_bound(condition: Condition, params: &CountParams) -> f64 {
    match condition {
        Condition::A => params.k_f64().powi(2),
        Condition::B => {
            let m = params.m as f64;
            let n = params.n as f64;
            let lm = m.ln().max(f64::MIN_POSITIVE);
            m * n * n * lm * lm
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountSummary {
    pub condition: Condition,
    #[serde(flatten)]
    pub params: ParamSummary,
    pub count: u64,
    pub mode: CountMode,
    pub bound_ratio: f64,
    pub elapsed_ms: f64,
}
