//! Exact decisions of `|sum_i n_i (a(x_i) - a(y_i))| < K`.
//!
//! A double-precision filter with a rigorous error bound settles almost every
//! query. The rest go to integer arithmetic for rational sequences (all terms
//! over a common denominator) or to escalating precision for `e^x`, where an
//! exact zero is detected symbolically and a tie with `K` cannot occur.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

use crate::bigreal::BigReal;
use crate::error::{Error, Result};
use crate::exact::rational_to_f64;
use crate::sequences::{LacunarySequence, SequenceKind};

use super::params::Threshold;

/// Unit roundoff.
const U: f64 = f64::EPSILON / 2.0;
const MAX_BITS: u32 = 1 << 14;

/// One term `n (a(x) - a(y))`, indices 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub n: i64,
    pub x: usize,
    pub y: usize,
}

impl Term {
    pub fn new(n: i64, x: usize, y: usize) -> Self {
        Term { n, x, y }
    }
}

enum Exact {
    /// `a(x) = num[x] / den`; `|I| <= limit` iff `|I/den| < K`.
    Rational { num: Vec<BigInt>, limit: BigInt },
    /// `a(x) = e^x`.
    Exponential,
}

pub struct GapField {
    n: usize,
    k: Threshold,
    k_lo: f64,
    k_hi: f64,
    /// `a(x) - a(y)` as doubles, row-major, relative error below `2u`.
    gaps: Vec<f64>,
    exact: Exact,
    exact_calls: std::sync::atomic::AtomicU64,
}

impl GapField {
    pub fn new(seq: &LacunarySequence, n: usize, k: &Threshold) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("need N >= 2"));
        }
        if let Some(len) = seq.len() {
            if n > len {
                return Err(Error::IndexOutOfRange {
                    index: n as u64,
                    len,
                });
            }
        }
        let (k_lo, k_hi) = k.bounds_f64();
        let mut gaps = vec![0.0; n * n];
        let exact = match seq.kind() {
            SequenceKind::Exponential => {
                for x in 2..=n {
                    for y in 1..x {
                        let g = seq.gap(x as u64, y as u64, 64)?.to_f64();
                        gaps[(x - 1) * n + (y - 1)] = g;
                        gaps[(y - 1) * n + (x - 1)] = -g;
                    }
                }
                Exact::Exponential
            }
            kind => {
                let (num, den) = common_denominator(kind, n);
                for x in 1..n {
                    for y in 0..x {
                        let g = rational_to_f64(&BigRational::new(&num[x] - &num[y], den.clone()));
                        gaps[x * n + y] = g;
                        gaps[y * n + x] = -g;
                    }
                }
                Exact::Rational {
                    limit: strict_limit(k, &den),
                    num,
                }
            }
        };
        Ok(GapField {
            n,
            k: k.clone(),
            k_lo,
            k_hi,
            gaps,
            exact,
            exact_calls: Default::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn threshold(&self) -> &Threshold {
        &self.k
    }

    /// `(lo, hi)` with `lo <= K <= hi`.
    pub fn k_bounds(&self) -> (f64, f64) {
        (self.k_lo, self.k_hi)
    }

    /// `a(x) - a(y)` as a double (possibly infinite), 1-based.
    #[inline]
    pub fn gap(&self, x: usize, y: usize) -> f64 {
        self.gaps[(x - 1) * self.n + (y - 1)]
    }

    /// Number of queries the double filter could not settle.
    pub fn exact_calls(&self) -> u64 {
        self.exact_calls.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Decides `|sum n_i (a(x_i) - a(y_i))| < K`.
    pub fn less_than_k(&self, terms: &[Term]) -> Result<bool> {
        let mut value = 0.0;
        let mut scale = 0.0;
        for t in terms {
            let v = t.n as f64 * self.gap(t.x, t.y);
            value += v;
            scale += v.abs();
        }
        if scale.is_finite() {
            // Each product carries relative error <= 3u, the sum adds <= k u.
            let err = (3.0 + terms.len() as f64) * 1.01 * U * scale;
            let mag = value.abs();
            if mag + err < self.k_lo {
                return Ok(true);
            }
            if mag - err > self.k_hi {
                return Ok(false);
            }
        }
        self.exact_calls
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        self.less_than_k_exact(terms)
    }

    /// The same decision without the double filter.
    pub fn less_than_k_exact(&self, terms: &[Term]) -> Result<bool> {
        match &self.exact {
            Exact::Rational { num, limit } => {
                let mut acc = BigInt::zero();
                for t in terms {
                    let g = &num[t.x - 1] - &num[t.y - 1];
                    acc += g * t.n;
                }
                Ok(acc.abs() <= *limit)
            }
            Exact::Exponential => self.exponential_decision(terms),
        }
    }

    fn exponential_decision(&self, terms: &[Term]) -> Result<bool> {
        // Coefficients of the polynomial in e.
        let mut poly: BTreeMap<usize, i128> = BTreeMap::new();
        for t in terms {
            *poly.entry(t.x).or_default() += t.n as i128;
            *poly.entry(t.y).or_default() -= t.n as i128;
        }
        poly.retain(|_, c| *c != 0);
        if poly.is_empty() {
            return Ok(self.k.is_positive());
        }
        let mut bits = 128u32;
        while bits <= MAX_BITS {
            let w = bits + 16;
            let mut sum = BigReal::zero(w);
            let mut mag = BigReal::zero(w);
            for (&x, &c) in &poly {
                let v = BigReal::exp_int(x as u64, w).mul_int(&BigInt::from(c), w);
                mag = mag.add(&v.abs(), w);
                sum = sum.add(&v, w);
            }
            // Each rounding is relative 2^(1-w); a dozen of them at most per term.
            let err_bits = mag.magnitude().unwrap_or(0) - bits as i64 + 8;
            let abs = sum.abs();
            if let Some(m) = abs.magnitude() {
                let s = (bits as i64 - m + 4).max(8) as u32;
                let (fl, _) = self.k.scaled_floor(s);
                // Compare abs +/- 2^err_bits against [fl, fl+1] * 2^-s.
                let scale = BigRational::new(BigInt::one(), BigInt::one() << s as usize);
                let k_lo = BigRational::from_integer(fl.clone()) * &scale;
                let k_hi = BigRational::from_integer(fl + 1) * &scale;
                let err = pow2(err_bits);
                let v = abs.to_rational();
                if &v + &err < k_lo {
                    return Ok(true);
                }
                if &v - &err >= k_hi {
                    return Ok(false);
                }
            }
            bits *= 2;
        }
        Err(Error::Tie(format!(
            "could not separate a linear form in e from K = {} at {MAX_BITS} bits",
            self.k
        )))
    }
}

/// Integer numerators over one positive denominator for the first `n` terms.
pub(crate) fn common_denominator(kind: &SequenceKind, n: usize) -> (Vec<BigInt>, BigInt) {
    match kind {
        SequenceKind::Geometric { ratio } => {
            let (p, q) = (ratio.numer(), ratio.denom());
            // a(x) = p^x q^(n-x) / q^n
            let num = (1..=n)
                .map(|x| Pow::pow(p, x as u64) * Pow::pow(q, (n - x) as u64))
                .collect();
            (num, Pow::pow(q, n as u64))
        }
        SequenceKind::Custom { values } => {
            let den = values[..n]
                .iter()
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            let num = values[..n]
                .iter()
                .map(|v| v.numer() * (&den / v.denom()))
                .collect();
            (num, den)
        }
        SequenceKind::Exponential => panic!("e^x has no common denominator"),
    }
}

fn pow2(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}

/// Largest integer `L` with `|I| <= L` iff `|I| / den < K`.
pub(crate) fn strict_limit(k: &Threshold, den: &BigInt) -> BigInt {
    let (fl, exact) = k.scaled_floor_by(den);
    if exact {
        fl - 1
    } else {
        fl
    }
}
