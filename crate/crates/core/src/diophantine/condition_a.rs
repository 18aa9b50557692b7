//! `#{1 <= n <= M, 1 <= x != y <= N : n |a(x) - a(y)| < K}`.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::LacunarySequence;

use super::decide::{GapField, Term};
use super::params::CountParams;
use super::report::{Condition, CountMode, CountReport};

/// Largest `M N (N - 1)` the triple loop accepts.
pub const ORACLE_A_BUDGET: u64 = 2_000_000_000;
const MAX_SOLUTIONS: u64 = 10_000_000;

pub fn count_condition_a(
    seq: &LacunarySequence,
    params: &CountParams,
    mode: CountMode,
) -> Result<CountReport> {
    let start = Instant::now();
    let count = if !params.k.is_positive() {
        0
    } else {
        let field = GapField::new(seq, params.n, &params.k)?;
        match mode {
            CountMode::Oracle => oracle(&field, params.m)?,
            CountMode::Fast | CountMode::Windowed => fast(&field, params.m)?,
        }
    };
    Ok(CountReport::finish(Condition::A, params, count, mode, start))
}

fn oracle(field: &GapField, m: u64) -> Result<u64> {
    let n = field.len() as u64;
    let work = m.saturating_mul(n * (n - 1));
    if work > ORACLE_A_BUDGET {
        return Err(Error::budget(format!(
            "condition A oracle needs {work} decisions (limit {ORACLE_A_BUDGET})"
        )));
    }
    let n = field.len();
    (1..=m)
        .into_par_iter()
        .map(|k| -> Result<u64> {
            let mut c = 0;
            for x in 1..=n {
                for y in 1..=n {
                    if x != y && field.less_than_k(&[Term::new(k as i64, x, y)])? {
                        c += 1;
                    }
                }
            }
            Ok(c)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn fast(field: &GapField, m: u64) -> Result<u64> {
    let n = field.len();
    (2..=n)
        .into_par_iter()
        .map(|x| -> Result<u64> {
            let mut c = 0;
            for y in 1..x {
                c += 2 * largest_multiple(field, x, y, m)?;
            }
            Ok(c)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Largest `n <= m` with `n (a(x) - a(y)) < K`, or 0.
pub(crate) fn largest_multiple(field: &GapField, x: usize, y: usize, m: u64) -> Result<u64> {
    last_true(1, m, |k| field.less_than_k(&[Term::new(k as i64, x, y)]))
}

/// Last `k` in `[lo, hi]` where a predicate that is true then false holds,
/// or `lo - 1`.
pub(crate) fn last_true(
    lo: u64,
    hi: u64,
    mut pred: impl FnMut(u64) -> Result<bool>,
) -> Result<u64> {
    if lo > hi || !pred(lo)? {
        return Ok(lo - 1);
    }
    let (mut good, mut bad) = (lo, hi + 1);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pred(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub n: u64,
    pub x: usize,
    pub y: usize,
}

/// Every solution of condition A, ordered by `(max(x, y), min(x, y), n)`.
pub fn condition_a_solutions(seq: &LacunarySequence, params: &CountParams) -> Result<Vec<Solution>> {
    if !params.k.is_positive() {
        return Ok(Vec::new());
    }
    let field = GapField::new(seq, params.n, &params.k)?;
    let mut out = Vec::new();
    for x in 2..=params.n {
        for y in 1..x {
            let top = largest_multiple(&field, x, y, params.m)?;
            if out.len() as u64 + 2 * top > MAX_SOLUTIONS {
                return Err(Error::budget(format!(
                    "more than {MAX_SOLUTIONS} condition A solutions"
                )));
            }
            for n in 1..=top {
                out.push(Solution { n, x, y });
                out.push(Solution { n, x: y, y: x });
            }
        }
    }
    Ok(out)
}

/// How condition A solutions sit relative to `ceil(eps log_C N)`.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionStructure {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub solutions: usize,
    /// `ceil(eps log_C N)` with `C` the certified ratio.
    pub log_window: u64,
    /// `max(max(x, y)) - log_window` over all solutions.
    pub offset: Option<i64>,
    pub max_n: u64,
    /// Every solution has `n < K`.
    pub n_below_k: bool,
}

pub fn condition_a_structure(
    seq: &LacunarySequence,
    params: &CountParams,
) -> Result<SolutionStructure> {
    let eps = params
        .epsilon
        .as_ref()
        .ok_or_else(|| Error::invalid("solution structure needs K = N^eps"))?;
    if !seq.is_certified(params.n as u64) {
        return Err(Error::NotCertified(format!(
            "{} over the first {} terms",
            seq.label(),
            params.n
        )));
    }
    let log_window = ceil_eps_log(seq.claimed_ratio(), params.n as u64, eps)?;
    let sols = condition_a_solutions(seq, params)?;
    let mut n_below_k = true;
    for s in &sols {
        let n = BigRational::from_integer(BigInt::from(s.n));
        n_below_k &= params.k.cmp_rational(&n).is_lt();
    }
    Ok(SolutionStructure {
        n: params.n,
        epsilon: params.epsilon_f64().unwrap_or(f64::NAN),
        k: params.k_f64(),
        solutions: sols.len(),
        log_window,
        offset: sols
            .iter()
            .map(|s| s.x.max(s.y) as i64 - log_window as i64)
            .max(),
        max_n: sols.iter().map(|s| s.n).max().unwrap_or(0),
        n_below_k,
    })
}

/// Smallest integer `k >= 0` with `C^k >= N^eps`.
pub fn ceil_eps_log(c: &BigRational, n: u64, eps: &BigRational) -> Result<u64> {
    let (p, q) = match (eps.numer().to_u32(), eps.denom().to_u32()) {
        (Some(p), Some(q)) => (p, q),
        _ => return Err(Error::invalid("epsilon is not a small rational")),
    };
    if *c <= BigRational::from_integer(1.into()) {
        return Err(Error::invalid("ratio must exceed 1"));
    }
    // (a/b)^(kq) >= N^p
    let target = BigRational::from_integer(Pow::pow(&BigInt::from(n), p));
    let cq: BigRational = Pow::pow(c, q);
    let mut acc = BigRational::from_integer(1.into());
    for k in 0..=100_000u64 {
        if acc >= target {
            return Ok(k);
        }
        acc *= &cq;
    }
    Err(Error::budget("ceil(eps log_C N) exceeds 100000"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    fn two() -> LacunarySequence {
        LacunarySequence::parse_spec("geometric:2").unwrap()
    }

    #[test]
    fn hand_enumerated_examples() {
        for (k, want) in [("2", 0), ("3", 2), ("0", 0), ("-1", 0)] {
            let p = CountParams::explicit(4, 8, parse_rational(k).unwrap()).unwrap();
            for mode in [CountMode::Oracle, CountMode::Fast] {
                assert_eq!(count_condition_a(&two(), &p, mode).unwrap().count, want, "K={k}");
            }
        }
    }

    #[test]
    fn fast_matches_oracle_small_grid() {
        for spec in ["geometric:2", "geometric:3/2", "exp"] {
            let seq = LacunarySequence::parse_spec(spec).unwrap();
            for eps in ["0.1", "0.2", "0.3", "1"] {
                for n in [2usize, 5, 12, 30] {
                    let p = CountParams::from_epsilon(n, &parse_rational(eps).unwrap()).unwrap();
                    let a = count_condition_a(&seq, &p, CountMode::Oracle).unwrap().count;
                    let b = count_condition_a(&seq, &p, CountMode::Fast).unwrap().count;
                    assert_eq!(a, b, "{spec} N={n} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn exact_ties_are_excluded() {
        // 32^0.2 = 2: the gap 2 of 2^x ties with K and does not count.
        let p = CountParams::from_epsilon(32, &parse_rational("0.2").unwrap()).unwrap();
        assert_eq!(count_condition_a(&two(), &p, CountMode::Fast).unwrap().count, 0);
        assert_eq!(count_condition_a(&two(), &p, CountMode::Oracle).unwrap().count, 0);
    }

    #[test]
    fn structure_for_powers_of_two() {
        let eps = parse_rational("0.2").unwrap();
        for n in [100usize, 1000] {
            let p = CountParams::from_epsilon(n, &eps).unwrap();
            let s = condition_a_structure(&two(), &p).unwrap();
            assert_eq!(s.solutions, 2);
            assert_eq!(s.offset, Some(0));
            assert!(s.n_below_k);
        }
    }

    #[test]
    fn ceil_log_is_exact() {
        let two = BigRational::from_integer(2.into());
        // 2^k >= 32^(1/5) = 2 at k = 1
        assert_eq!(ceil_eps_log(&two, 32, &parse_rational("1/5").unwrap()).unwrap(), 1);
        assert_eq!(ceil_eps_log(&two, 33, &parse_rational("1/5").unwrap()).unwrap(), 2);
        assert_eq!(ceil_eps_log(&two, 100, &parse_rational("0.2").unwrap()).unwrap(), 2);
    }

    #[test]
    fn last_true_bisects() {
        assert_eq!(last_true(1, 100, |k| Ok(k <= 37)).unwrap(), 37);
        assert_eq!(last_true(1, 100, |_| Ok(false)).unwrap(), 0);
        assert_eq!(last_true(1, 100, |_| Ok(true)).unwrap(), 100);
    }
}
