//! `#S(N)`: six-tuples `(n1, n2, x1, x2, y1, y2)` with `1 <= |n_i| <= M`,
//! `x_i != y_i` and `|n1 (a(x1) - a(y1)) - n2 (a(x2) - a(y2))| < K`.
//!
//! Fast counters work on `P = {n (a(x) - a(y)) : 1 <= n <= M, x > y}`. Each
//! element of `P` is hit by four signed tuples, two per sign, so
//! `#S(N) = 8 (#{(p, p') : |p - p'| < K} + #{(p, p') : p + p' < K})` over
//! ordered pairs of elements.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sequences::{LacunarySequence, SequenceKind};

use super::condition_a::last_true;
use super::decide::{common_denominator, strict_limit, GapField, Term};
use super::keys::{add, bit_length, cmp_words, sub_sat, window128, GapKeys};
use super::params::CountParams;
use super::report::{Condition, CountMode, CountReport};

/// Largest `(2M)^2 N^4` the six-loop oracle accepts.
pub const ORACLE_B_BUDGET: f64 = 1e9;
/// Elements of `P` sorted at once by the sweep.
const BLOCK: f64 = 2_097_152.0;
const U: f64 = f64::EPSILON / 2.0;

pub fn count_condition_b(
    seq: &LacunarySequence,
    params: &CountParams,
    mode: CountMode,
) -> Result<CountReport> {
    match mode {
        CountMode::Oracle => count_s_oracle(seq, params),
        CountMode::Fast => count_s_fast(seq, params),
        CountMode::Windowed => count_s_windowed(seq, params),
    }
}

pub fn count_s_oracle(seq: &LacunarySequence, params: &CountParams) -> Result<CountReport> {
    let start = Instant::now();
    let (n, m) = (params.n, params.m);
    let work = (2.0 * m as f64).powi(2) * (n as f64).powi(4);
    if work > ORACLE_B_BUDGET {
        return Err(Error::budget(format!(
            "six-loop oracle needs (2M)^2 N^4 = {work:.3e} > {ORACLE_B_BUDGET:.0e}"
        )));
    }
    let count = if !params.k.is_positive() {
        0
    } else {
        let field = GapField::new(seq, n, &params.k)?;
        let signed: Vec<i64> = (1..=m as i64).flat_map(|k| [-k, k]).collect();
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|x| (1..=n).filter(move |&y| y != x).map(move |y| (x, y)))
            .collect();
        signed
            .par_iter()
            .map(|&n1| -> Result<u64> {
                let mut c = 0;
                for &(x1, y1) in &pairs {
                    for &n2 in &signed {
                        for &(x2, y2) in &pairs {
                            let t = [Term::new(n1, x1, y1), Term::new(-n2, x2, y2)];
                            if field.less_than_k(&t)? {
                                c += 1;
                            }
                        }
                    }
                }
                Ok(c)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?
    };
    Ok(CountReport::finish(Condition::B, params, count, CountMode::Oracle, start))
}

fn require_certified(seq: &LacunarySequence, n: usize) -> Result<()> {
    if seq.is_certified(n as u64) {
        Ok(())
    } else {
        Err(Error::NotCertified(format!(
            "{} over the first {n} terms",
            seq.label()
        )))
    }
}

/// Doubles for every gap and for `M` times the largest gap.
fn require_finite(field: &GapField, m: u64) -> Result<()> {
    let top = field.gap(field.len(), 1) * m as f64;
    if top.is_finite() && top < f64::MAX / 16.0 {
        Ok(())
    } else {
        Err(Error::budget(format!(
            "M (a(N) - a(1)) = {top:e} exceeds the double range"
        )))
    }
}

/// Number of `n2` in `[1, m]` with `|n1 d(x1, y1) - n2 d(x2, y2)| < K`.
fn same_sign_run(field: &GapField, t1: Term, x2: usize, y2: usize, m: u64) -> Result<u64> {
    let member = |k: u64| field.less_than_k(&[t1, Term::new(-(k as i64), x2, y2)]);
    let c = t1.n as f64 * field.gap(t1.x, t1.y) / field.gap(x2, y2);
    let r = c.round().clamp(1.0, m as f64) as u64;
    let mut seed = None;
    for k in [r, r.saturating_sub(1), r + 1] {
        if (1..=m).contains(&k) && member(k)? {
            seed = Some(k);
            break;
        }
    }
    let Some(s) = seed else { return Ok(0) };
    let hi = last_true(s, m, member)?;
    // Reflect [1, s] so the predicate runs true then false.
    let lo = s + 1 - last_true(1, s, |j| member(s + 1 - j))?;
    Ok(hi - lo + 1)
}

/// Number of `n2` in `[1, m]` with `n1 d(x1, y1) + n2 d(x2, y2) < K`.
fn opposite_sign_run(field: &GapField, t1: Term, x2: usize, y2: usize, m: u64) -> Result<u64> {
    last_true(1, m, |k| {
        field.less_than_k(&[t1, Term::new(k as i64, x2, y2)])
    })
}

/// Smallest index distance `w` beyond which no solution pairs an element at
/// `x_small` with one at `x_small + w` or further.
fn certified_windows(seq: &LacunarySequence, field: &GapField, m: u64) -> Result<Vec<usize>> {
    let n = field.len();
    let c = crate::exact::rational_to_f64(seq.claimed_ratio());
    let (_, k_hi) = field.k_bounds();
    let shrink = 1.0 - 1e-9;
    let mut out = vec![n; n + 1];
    for (s, slot) in out.iter_mut().enumerate().skip(1) {
        let a_lo = seq.value_at(s as u64, 64)?.to_f64() * shrink;
        let need = (m as f64 + k_hi / a_lo) / shrink;
        let mut w = 1usize;
        let mut cw = c;
        while w < n && cw * (1.0 - 1.0 / c) * shrink < need {
            w += 1;
            cw *= c;
        }
        *slot = w;
    }
    Ok(out)
}

/// `#S(N)` by interval counting over certified index windows.
pub fn count_s_windowed(seq: &LacunarySequence, params: &CountParams) -> Result<CountReport> {
    let start = Instant::now();
    let (n, m) = (params.n, params.m);
    require_certified(seq, n)?;
    let count = if !params.k.is_positive() {
        0
    } else {
        let field = GapField::new(seq, n, &params.k)?;
        require_finite(&field, m)?;
        let window = certified_windows(seq, &field, m)?;
        let cells: Vec<(usize, usize)> = (2..=n)
            .flat_map(|x| (1..x).map(move |y| (x, y)))
            .collect();
        let halves = cells
            .par_iter()
            .map(|&(x1, y1)| -> Result<u64> {
                let mut c = 0;
                for n1 in 1..=m {
                    let t1 = Term::new(n1 as i64, x1, y1);
                    for x2 in 2..=n {
                        let (lo, hi) = (x1.min(x2), x1.max(x2));
                        if hi - lo >= window[lo] {
                            continue;
                        }
                        for y2 in 1..x2 {
                            c += same_sign_run(&field, t1, x2, y2, m)?;
                            c += opposite_sign_run(&field, t1, x2, y2, m)?;
                        }
                    }
                }
                // Spot-check the nearest cells outside the window.
                let below = (1..x1).rev().find(|&x2| x1 - x2 >= window[x2]);
                let above = Some(x1 + window[x1]).filter(|&x2| x2 <= n);
                for x2 in below.into_iter().chain(above).filter(|&x2| x2 >= 2) {
                    for y2 in [1, x2 - 1] {
                        let t1 = Term::new(m as i64, x1, y1);
                        if same_sign_run(&field, t1, x2, y2, m)? != 0 {
                            return Err(Error::Precision(format!(
                                "window certificate failed at x1={x1}, x2={x2}"
                            )));
                        }
                    }
                }
                Ok(c)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        8 * halves
    };
    Ok(CountReport::finish(Condition::B, params, count, CountMode::Windowed, start))
}

#[derive(Clone, Copy, Debug)]
struct Elem {
    v: f64,
    n: u32,
    x: u16,
    y: u16,
}

impl Elem {
    fn term(&self, sign: i64) -> Term {
        Term::new(sign * self.n as i64, self.x as usize, self.y as usize)
    }
}

struct Sweep<'a> {
    field: &'a GapField,
    keys: GapKeys,
    /// Gaps `(x, y, d)` with `x > y`, by increasing `d`.
    gaps: Vec<(u16, u16, f64)>,
    m: u64,
    k_hi: f64,
}

impl Sweep<'_> {
    /// Covers the double error of `|v - v'|` for elements near `v`.
    fn slack(&self, v: f64) -> f64 {
        8.0 * U * (2.0 * v + 2.0 * self.k_hi + 2.0) + 1e-300
    }

    /// Elements with `lo <= v <= hi`.
    fn collect(&self, lo: f64, hi: f64) -> Vec<Elem> {
        let mut out = Vec::new();
        for &(x, y, d) in &self.gaps {
            if d * self.m as f64 * (1.0 + 4.0 * U) < lo {
                continue;
            }
            if d > hi * (1.0 + 4.0 * U) {
                break;
            }
            let first = ((lo / d).floor() - 1.0).max(1.0) as u64;
            let last = if hi.is_finite() {
                ((hi / d).ceil() + 1.0).min(self.m as f64) as u64
            } else {
                self.m
            };
            for k in first..=last {
                let v = k as f64 * d;
                if v >= lo && v <= hi {
                    out.push(Elem { v, n: k as u32, x, y });
                }
            }
        }
        out
    }

    /// Number of elements with `v < bound`, up to rounding at the edge.
    fn rank(&self, bound: f64) -> f64 {
        self.gaps
            .iter()
            .map(|&(_, _, d)| (bound / d).floor().clamp(0.0, self.m as f64))
            .sum()
    }

    /// Block edges `0 = e_0 < e_1 < ... < e_b = inf`.
    fn edges(&self) -> Vec<f64> {
        let total = self.gaps.len() as f64 * self.m as f64;
        let blocks = (total / BLOCK).ceil().max(1.0) as usize;
        let mut edges: Vec<f64> = vec![0.0];
        let top = self.gaps.last().map(|g| g.2).unwrap_or(1.0) * self.m as f64 * 2.0;
        for b in 1..blocks {
            let want = total * b as f64 / blocks as f64;
            let (mut lo, mut hi) = (edges.last().copied().unwrap().max(f64::MIN_POSITIVE), top);
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if self.rank(mid) < want {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi / lo < 1.0 + 1e-9 {
                    break;
                }
            }
            if hi > *edges.last().unwrap() {
                edges.push(hi);
            }
        }
        edges.push(f64::INFINITY);
        edges
    }

    /// Ordered pairs with `|p - p'| < K` whose first element lies in `[lo, hi)`.
    fn same_block(&self, lo: f64, hi: f64) -> Result<u64> {
        let below = lo - self.k_hi - self.slack(lo);
        let above = if hi.is_finite() {
            hi + self.k_hi + self.slack(hi)
        } else {
            f64::INFINITY
        };
        let elems = self.collect(below * (1.0 - 1e-12), above * (1.0 + 1e-12));
        let w = self.keys.words();
        let mut raw = vec![0u64; elems.len() * w];
        for (e, q) in elems.iter().zip(raw.chunks_exact_mut(w)) {
            self.keys.key(e.n as u64, e.x as usize, e.y as usize, q);
        }
        // Sort on a 128-bit window below the top bit, full keys on ties.
        let top = raw.chunks_exact(w).map(bit_length).max().unwrap_or(0);
        let shift = top.saturating_sub(128);
        let mut order: Vec<(u128, u32)> = raw
            .chunks_exact(w)
            .enumerate()
            .map(|(i, q)| (window128(q, shift), i as u32))
            .collect();
        let key = |i: u32| &raw[i as usize * w..(i as usize + 1) * w];
        order.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| cmp_words(key(a.1), key(b.1))));
        let mut keys = vec![0u64; raw.len()];
        for (dst, &(_, i)) in keys.chunks_exact_mut(w).zip(&order) {
            dst.copy_from_slice(key(i));
        }
        drop(raw);
        let sorted: Vec<Elem> = order.iter().map(|&(_, i)| elems[i as usize]).collect();
        drop(order);
        let q = |j: usize| &keys[j * w..(j + 1) * w];

        let outer = self.keys.outer();
        let inner = self.keys.inner();
        let mut thr = vec![0u64; w];
        // First index whose key is >= (or >) the threshold.
        let advance = |ptr: &mut usize, thr: &[u64], strict: bool| {
            while *ptr < sorted.len() {
                let c = cmp_words(q(*ptr), thr);
                if c == Ordering::Greater || (!strict && c == Ordering::Equal) {
                    break;
                }
                *ptr += 1;
            }
            *ptr
        };
        let (mut pa, mut pb, mut pc, mut pd) = (0, 0, 0, 0);
        let mut count = 0u64;
        for (i, e) in sorted.iter().enumerate() {
            if e.v < lo || e.v >= hi {
                continue;
            }
            sub_sat(q(i), outer, &mut thr);
            let a = advance(&mut pa, &thr, false);
            add(q(i), outer, &mut thr);
            let d = advance(&mut pd, &thr, true);
            let (b, c) = match inner {
                Some(inner) => {
                    sub_sat(q(i), inner, &mut thr);
                    let b = advance(&mut pb, &thr, false);
                    add(q(i), inner, &mut thr);
                    (b, advance(&mut pc, &thr, true))
                }
                None => (d, d),
            };
            count += (c - b) as u64;
            for j in (a..b).chain(c..d) {
                if j == i
                    || self
                        .field
                        .less_than_k_exact(&[e.term(1), sorted[j].term(-1)])?
                {
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// Ordered pairs with `p + p' < K`.
    fn opposite(&self) -> Result<u64> {
        let cap = self.k_hi + self.slack(self.k_hi);
        let mut small = self.collect(0.0, cap);
        small.sort_unstable_by(|a, b| a.v.total_cmp(&b.v));
        let mut count = 0;
        for a in &small {
            for b in &small {
                if a.v + b.v > cap {
                    break;
                }
                if self.field.less_than_k(&[a.term(1), b.term(1)])? {
                    count += 1;
                }
            }
        }
        Ok(count)
    }
}

/// `#S(N)` by a sorted sweep over `P` keyed by exact (or certified) integers.
pub fn count_s_fast(seq: &LacunarySequence, params: &CountParams) -> Result<CountReport> {
    let start = Instant::now();
    let (n, m) = (params.n, params.m);
    require_certified(seq, n)?;
    if n > u16::MAX as usize || m > u32::MAX as u64 {
        return Err(Error::budget("sweep needs N < 65536 and M < 2^32"));
    }
    let count = if !params.k.is_positive() {
        0
    } else {
        let field = GapField::new(seq, n, &params.k)?;
        require_finite(&field, m)?;
        let exact = match seq.kind() {
            SequenceKind::Exponential => None,
            kind => {
                let (num, den) = common_denominator(kind, n);
                GapKeys::exact(&num, &strict_limit(&params.k, &den), m)
            }
        };
        let keys = match exact {
            Some(k) => k,
            None => GapKeys::approximate(seq, n, &params.k, m)?
                .ok_or_else(|| Error::budget("gap keys exceed the supported width"))?,
        };
        let mut gaps: Vec<(u16, u16, f64)> = (2..=n)
            .flat_map(|x| (1..x).map(move |y| (x, y)))
            .map(|(x, y)| (x as u16, y as u16, field.gap(x, y)))
            .collect();
        gaps.sort_by(|a, b| a.2.total_cmp(&b.2));
        let (_, k_hi) = field.k_bounds();
        let sweep = Sweep {
            field: &field,
            keys,
            gaps,
            m,
            k_hi,
        };
        let edges = sweep.edges();
        let same = edges
            .windows(2)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|w| sweep.same_block(w[0], w[1]))
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        8 * (same + sweep.opposite()?)
    };
    Ok(CountReport::finish(Condition::B, params, count, CountMode::Fast, start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    fn params(n: usize, eps: &str) -> CountParams {
        CountParams::from_epsilon(n, &parse_rational(eps).unwrap()).unwrap()
    }

    #[test]
    fn hand_counts() {
        let seq = LacunarySequence::parse_spec("geometric:2").unwrap();
        // N = 2: P = {2, 4}, only self pairs are close.
        let p = params(2, "0.2");
        assert_eq!(p.m, 2);
        for mode in [CountMode::Oracle, CountMode::Fast, CountMode::Windowed] {
            assert_eq!(count_condition_b(&seq, &p, mode).unwrap().count, 16);
        }
        // N = 3: P = n {2, 4, 6}, n <= 3; equal values give 15 ordered pairs.
        let p = params(3, "0.2");
        for mode in [CountMode::Oracle, CountMode::Fast, CountMode::Windowed] {
            let c = count_condition_b(&seq, &p, mode).unwrap().count;
            assert_eq!(c, 120, "{mode}");
        }
    }

    #[test]
    fn counters_agree_on_small_grid() {
        for spec in ["geometric:2", "geometric:3/2", "exp"] {
            let seq = LacunarySequence::parse_spec(spec).unwrap();
            for eps in ["0.1", "0.3", "1/2"] {
                for n in [4usize, 7] {
                    let p = params(n, eps);
                    let a = count_s_oracle(&seq, &p).unwrap().count;
                    let b = count_s_fast(&seq, &p).unwrap().count;
                    let c = count_s_windowed(&seq, &p).unwrap().count;
                    assert_eq!((a, a), (b, c), "{spec} N={n} eps={eps}");
                }
            }
        }
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let seq = LacunarySequence::parse_spec("geometric:2").unwrap();
        let err = count_s_oracle(&seq, &params(40, "0.2")).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn fast_needs_certified_sequences() {
        let seq = LacunarySequence::custom(
            ["1", "3", "4", "20"].iter().map(|s| parse_rational(s).unwrap()).collect(),
            Some(parse_rational("2").unwrap()),
        )
        .unwrap();
        let p = params(4, "0.2");
        assert!(matches!(count_s_fast(&seq, &p), Err(Error::NotCertified(_))));
        assert!(count_s_oracle(&seq, &p).is_ok());
    }
}
