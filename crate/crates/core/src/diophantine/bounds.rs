use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{ols, LinearFit};

use super::report::{Condition, CountReport};

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub condition: Condition,
    pub delta_ref: f64,
    /// `2 - delta_ref` or `4 - delta_ref`.
    pub threshold: f64,
    /// `None` when every count is zero.
    pub fit: Option<LinearFit>,
    /// Points dropped because their count is zero.
    pub zero_counts: usize,
    pub empty: bool,
    pub pass: bool,
}

impl BoundReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Least-squares slope of `log count` against `log N`, compared with the
/// trivial exponent minus `delta_ref`.
pub fn bound_report(series: &[CountReport], delta_ref: f64) -> Result<BoundReport> {
    let condition = series
        .first()
        .ok_or_else(|| Error::invalid("empty series"))?
        .condition;
    if series.iter().any(|r| r.condition != condition) {
        return Err(Error::invalid("series mixes conditions A and B"));
    }
    let distinct: BTreeSet<usize> = series.iter().map(|r| r.params.n).collect();
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "bound report needs at least 3 distinct N, got {}",
            distinct.len()
        )));
    }
    let threshold = condition.trivial_exponent() - delta_ref;
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|r| r.count > 0)
        .map(|r| ((r.params.n as f64).ln(), (r.count as f64).ln()))
        .unzip();
    let zero_counts = series.len() - xs.len();
    if xs.is_empty() {
        return Ok(BoundReport {
            condition,
            delta_ref,
            threshold,
            fit: None,
            zero_counts,
            empty: true,
            pass: true,
        });
    }
    let fit = ols(&xs, &ys)?;
    Ok(BoundReport {
        condition,
        delta_ref,
        threshold,
        fit: Some(fit),
        zero_counts,
        empty: false,
        pass: fit.slope <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{CountMode, CountParams};
    use crate::exact::parse_rational;
    use std::time::Instant;

    fn synthetic(condition: Condition, counts: &[(usize, u64)]) -> Vec<CountReport> {
        counts
            .iter()
            .map(|&(n, c)| {
                let p = CountParams::from_epsilon(n, &parse_rational("0.2").unwrap()).unwrap();
                CountReport::finish(condition, &p, c, CountMode::Fast, Instant::now())
            })
            .collect()
    }

    #[test]
    fn quartic_counts_fail() {
        let s: Vec<_> = [10usize, 20, 40].iter().map(|&n| (n, (n as u64).pow(4))).collect();
        let r = bound_report(&synthetic(Condition::B, &s), 0.1).unwrap();
        assert!((r.slope().unwrap() - 4.0).abs() < 1e-12);
        assert!(!r.pass);
    }

    #[test]
    fn constant_counts_pass() {
        let r = bound_report(&synthetic(Condition::A, &[(10, 7), (20, 7), (40, 7)]), 1.0).unwrap();
        assert!(r.slope().unwrap().abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn zeros_are_dropped_and_all_zero_is_empty() {
        let r = bound_report(&synthetic(Condition::A, &[(10, 0), (20, 0), (40, 0)]), 1.0).unwrap();
        assert!(r.empty && r.pass && r.fit.is_none());
        let r = bound_report(&synthetic(Condition::A, &[(10, 0), (20, 4), (40, 4)]), 1.0).unwrap();
        assert_eq!(r.zero_counts, 1);
        assert!(r.pass);
    }

    #[test]
    fn needs_three_sizes() {
        assert!(bound_report(&synthetic(Condition::A, &[(10, 1), (20, 2), (20, 3)]), 1.0).is_err());
    }
}
