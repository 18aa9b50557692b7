//! Counting ranges `M = floor(N^(1+eps))` and thresholds `K = N^eps`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{is_positive, rational_to_f64};

/// The strict bound `K` in `|...| < K`, held exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Threshold {
    /// A rational constant.
    Exact(BigRational),
    /// `base^(p/q)` with `q > 0`.
    Power { base: u64, p: u32, q: u32 },
}

impl Threshold {
    /// `N^eps` for a positive rational `eps`.
    pub fn power(base: u64, eps: &BigRational) -> Result<Self> {
        if !is_positive(eps) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        let p = eps.numer().to_u32();
        let q = eps.denom().to_u32();
        match (p, q) {
            (Some(p), Some(q)) if p <= 10_000 && q <= 10_000 => {
                let t = Threshold::Power { base, p, q };
                Ok(t.simplified())
            }
            _ => Err(Error::invalid(format!("epsilon {eps} has too large a numerator or denominator"))),
        }
    }

    fn simplified(self) -> Self {
        if let Threshold::Power { base, p, q } = self {
            let b = BigInt::from(base);
            let v = Pow::pow(&b, p);
            let r = v.nth_root(q);
            if Pow::pow(&r, q) == v {
                return Threshold::Exact(BigRational::from_integer(r));
            }
        }
        self
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Threshold::Exact(k) => is_positive(k),
            Threshold::Power { base, .. } => *base > 0,
        }
    }

    /// `floor(K * 2^s)` and whether `K * 2^s` is an integer.
    pub fn scaled_floor(&self, s: u32) -> (BigInt, bool) {
        self.scaled_floor_by(&(BigInt::one() << s as usize))
    }

    /// `floor(K * d)` for a positive integer `d`, and whether `K d` is an
    /// integer.
    pub fn scaled_floor_by(&self, d: &BigInt) -> (BigInt, bool) {
        match self {
            Threshold::Exact(k) => {
                let num = k.numer() * d;
                let (fl, rem) = num.div_mod_floor(k.denom());
                (fl, rem.is_zero())
            }
            Threshold::Power { base, p, q } => {
                // (K d)^q = base^p d^q
                let v = Pow::pow(&BigInt::from(*base), *p) * Pow::pow(d, *q);
                let r = v.nth_root(*q);
                let exact = Pow::pow(&r, *q) == v;
                (r, exact)
            }
        }
    }

    /// Exact sign of `v - K`.
    pub fn cmp_rational(&self, v: &BigRational) -> Ordering {
        match self {
            Threshold::Exact(k) => v.cmp(k),
            Threshold::Power { base, p, q } => {
                if !is_positive(v) {
                    return Ordering::Less;
                }
                // v^q vs base^p
                let lhs = Pow::pow(v.numer(), *q);
                let rhs = Pow::pow(&BigInt::from(*base), *p) * Pow::pow(v.denom(), *q);
                lhs.cmp(&rhs)
            }
        }
    }

    /// Double bounds `lo <= K <= hi`.
    pub fn bounds_f64(&self) -> (f64, f64) {
        let (fl, exact) = self.scaled_floor(64);
        let lo = rational_to_f64(&BigRational::new(fl.clone(), BigInt::one() << 64usize));
        let hi = if exact {
            lo
        } else {
            rational_to_f64(&BigRational::new(fl + 1, BigInt::one() << 64usize))
        };
        let widen = 4.0 * f64::EPSILON;
        (lo * (1.0 - widen), hi * (1.0 + widen))
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.bounds_f64();
        0.5 * (lo + hi)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(k) => write!(f, "{k}"),
            Threshold::Power { base, p, q } => write!(f, "{base}^({p}/{q})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountParams {
    pub n: usize,
    pub epsilon: Option<BigRational>,
    pub m: u64,
    pub k: Threshold,
    pub delta_ref: Option<f64>,
}

impl CountParams {
    /// `M = floor(N^(1+eps))`, `K = N^eps`, both exact.
    pub fn from_epsilon(n: usize, epsilon: &BigRational) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("counting needs N >= 2"));
        }
        let k = Threshold::power(n as u64, epsilon)?;
        let one_plus = BigRational::one() + epsilon;
        let (p, q) = (
            one_plus.numer().to_u32().unwrap(),
            one_plus.denom().to_u32().unwrap(),
        );
        let m = Pow::pow(&BigInt::from(n as u64), p).nth_root(q);
        let m = m
            .to_u64()
            .ok_or_else(|| Error::budget(format!("M = floor(N^(1+eps)) = {m} does not fit")))?;
        Ok(CountParams {
            n,
            epsilon: Some(epsilon.clone()),
            m,
            k,
            delta_ref: None,
        })
    }

    /// Explicit `M` and rational `K`.
    pub fn explicit(n: usize, m: u64, k: BigRational) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("counting needs N >= 2"));
        }
        Ok(CountParams {
            n,
            epsilon: None,
            m,
            k: Threshold::Exact(k),
            delta_ref: None,
        })
    }

    pub fn with_delta_ref(mut self, delta: f64) -> Self {
        self.delta_ref = Some(delta);
        self
    }

    pub fn epsilon_f64(&self) -> Option<f64> {
        self.epsilon.as_ref().map(rational_to_f64)
    }

    pub fn k_f64(&self) -> f64 {
        self.k.to_f64()
    }

    pub fn summary(&self) -> ParamSummary {
        ParamSummary {
            n: self.n,
            epsilon: self.epsilon_f64(),
            m: self.m,
            k: self.k_f64(),
            delta_ref: self.delta_ref,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: Option<f64>,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "K")]
    pub k: f64,
    pub delta_ref: Option<f64>,
}
