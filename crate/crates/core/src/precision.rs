//! Fractional parts `{alpha * a(x)}` computed with a bit budget sized to the
//! growth of `a(x)`.
//!
//! Phases are kept as 128-bit binary fractions. Multiplying such a fraction
//! by an integer mode `n` with wrapping arithmetic is an exact reduction mod 1,
//! so `{n * alpha * a(x)}` costs one integer multiply per term.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::bigreal::{low_u128, BigReal};
use crate::error::{Error, Result};
use crate::exact::{floor_log2, is_positive, parse_rational, rational_from_f64, rational_to_f64};
use crate::sequences::{LacunarySequence, SequenceKind};

pub const DEFAULT_GUARD: u32 = 96;

/// Extra bits reserved so that dilation factors below `2^ALPHA_HEADROOM`
/// do not eat into the guard.
pub const ALPHA_HEADROOM: u32 = 16;

/// A dilation factor, held exactly.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alpha(BigRational);

impl Alpha {
    pub fn new(r: BigRational) -> Result<Self> {
        if !is_positive(&r) {
            return Err(Error::invalid(format!("alpha must be positive, got {r}")));
        }
        Ok(Alpha(r))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }

    /// Exact value of a double (used for sampled dilations).
    pub fn from_f64(x: f64) -> Result<Self> {
        Self::new(rational_from_f64(x)?)
    }

    pub fn rational(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            let v = self.to_f64();
            // Dyadic values from sampling print as decimals.
            if self.0.denom().trailing_zeros() == Some(self.0.denom().bits() - 1) {
                write!(f, "{v}")
            } else {
                write!(f, "{}", self.0)
            }
        }
    }
}

/// A point of the circle `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(theta: f64) -> Option<Self> {
        (0.0..1.0).contains(&theta).then_some(CirclePoint(theta))
    }

    /// Reduces any finite real into `[0, 1)`.
    pub fn wrap(x: f64) -> Self {
        let t = x - x.floor();
        CirclePoint(if t >= 1.0 { 0.0 } else { t })
    }

    /// Top 53 bits of a 128-bit binary fraction; exact in `[0, 1)`.
    pub fn from_fraction(f: u128) -> Self {
        CirclePoint((f >> 75) as f64 * 2f64.powi(-53))
    }

    pub fn theta(self) -> f64 {
        self.0
    }
}

/// `ceil(log2 a(x_max)) + guard`.
pub fn required_bits(seq: &LacunarySequence, x_max: u64, guard: u32) -> Result<u32> {
    if x_max == 0 {
        return Err(Error::invalid("x_max must be at least 1"));
    }
    if guard < 32 {
        return Err(Error::invalid(format!("guard {guard} below 32 bits")));
    }
    let int_bits = seq.ceil_log2(x_max)?.max(0);
    u32::try_from(int_bits as u64 + guard as u64)
        .map_err(|_| Error::budget(format!("x_max {x_max} needs too many bits")))
}

/// `a(1..=n)`, each held with enough bits for its fractional part after
/// dilation by any `alpha < 2^ALPHA_HEADROOM`.
#[derive(Clone, Debug)]
pub struct SequenceTable {
    seq: LacunarySequence,
    values: Vec<BigReal>,
    guard: u32,
}

impl SequenceTable {
    pub fn new(seq: &LacunarySequence, n: usize, guard: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("table needs N >= 1"));
        }
        required_bits(seq, n as u64, guard)?;
        let bits_for = |cl: i64| (cl.max(0) as u32) + guard + ALPHA_HEADROOM;
        let values = match seq.kind() {
            SequenceKind::Custom { values } => {
                if n > values.len() {
                    return Err(Error::IndexOutOfRange {
                        index: n as u64,
                        len: values.len(),
                    });
                }
                (1..=n as u64)
                    .map(|x| Ok(BigReal::from_rational(&values[x as usize - 1], bits_for(seq.ceil_log2(x)?))))
                    .collect::<Result<Vec<_>>>()?
            }
            SequenceKind::Geometric { ratio } => {
                geometric_table(ratio, n, guard + ALPHA_HEADROOM)
            }
            SequenceKind::Exponential => exponential_table(n, guard + ALPHA_HEADROOM),
        };
        Ok(SequenceTable {
            seq: seq.clone(),
            values,
            guard,
        })
    }

    pub fn sequence(&self) -> &LacunarySequence {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    /// `a(x)` for `1 <= x <= len`.
    pub fn value(&self, x: u64) -> Result<&BigReal> {
        if x == 0 || x as usize > self.values.len() {
            return Err(Error::IndexOutOfRange {
                index: x,
                len: self.values.len(),
            });
        }
        Ok(&self.values[x as usize - 1])
    }

    pub fn values(&self) -> &[BigReal] {
        &self.values
    }
}

fn ceil_log2_real(v: &BigReal) -> i64 {
    v.magnitude().unwrap_or(0)
}

/// `a(x+1) = a(x) * p / q` at a working precision wide enough that the
/// accumulated rounding stays below the per-term budget.
fn geometric_table(ratio: &BigRational, n: usize, extra: u32) -> Vec<BigReal> {
    let (p, q) = (ratio.numer(), ratio.denom());
    let top = floor_log2(&(num_traits::Pow::pow(ratio, n as u64))).unwrap_or(0) + 2;
    let work = top.max(0) as u32 + extra + 64 - (n as u64).leading_zeros() + 8;
    let mut out = Vec::with_capacity(n);
    let mut cur = BigReal::from_rational(ratio, work);
    for _ in 0..n {
        let bits = (ceil_log2_real(&cur) + 1).max(0) as u32 + extra;
        out.push(cur.with_prec(bits));
        cur = cur.mul_ratio(p, q, work);
    }
    out
}

fn exponential_table(n: usize, extra: u32) -> Vec<BigReal> {
    let top = (n as f64 * std::f64::consts::LOG2_E).ceil() as u32 + 2;
    let work = top + extra + 64 - (n as u64).leading_zeros() + 8;
    let e = BigReal::e(work);
    let mut out = Vec::with_capacity(n);
    let mut cur = e.clone();
    for _ in 0..n {
        let bits = (ceil_log2_real(&cur) + 1).max(0) as u32 + extra;
        out.push(cur.with_prec(bits));
        cur = cur.mul(&e, work);
    }
    out
}

/// `floor({alpha * v} * 2^128)` for `alpha = p/q`.
fn dilate_fraction(v: &BigReal, alpha: &BigRational) -> u128 {
    let (p, q) = (alpha.numer(), alpha.denom());
    let num = v.mantissa() * p;
    let e = v.exponent();
    if e >= 0 {
        let q_big = q.clone();
        let two = BigInt::from(2u32);
        let r = (num.mod_floor(&q_big) * two.modpow(&BigInt::from(e), &q_big)).mod_floor(&q_big);
        let scaled: BigInt = (r << 128usize).div_floor(&q_big);
        low_u128(&scaled)
    } else {
        let shift = e + 128;
        let scaled = if shift >= 0 {
            (num << shift as usize).div_floor(q)
        } else {
            num.div_floor(&(q << (-shift) as usize))
        };
        let m = scaled.mod_floor(&(BigInt::one() << 128usize));
        debug_assert!(m.sign() != Sign::Minus);
        low_u128(&m)
    }
}

/// `{alpha * a(x)}` as 128-bit fractions for `x = 1..=N`.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    fracs: Vec<u128>,
    guard: u32,
}

impl PhaseTable {
    pub fn new(table: &SequenceTable, alpha: &Alpha) -> Result<Self> {
        let a = alpha.rational();
        if let Some(l) = floor_log2(a) {
            if l >= ALPHA_HEADROOM as i64 {
                return Err(Error::budget(format!(
                    "alpha {alpha} exceeds the 2^{ALPHA_HEADROOM} headroom"
                )));
            }
        }
        let fracs = table
            .values()
            .iter()
            .map(|v| dilate_fraction(v, a))
            .collect();
        Ok(PhaseTable {
            fracs,
            guard: table.guard(),
        })
    }

    pub fn from_fractions(fracs: Vec<u128>, guard: u32) -> Self {
        PhaseTable { fracs, guard }
    }

    pub fn len(&self) -> usize {
        self.fracs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fracs.is_empty()
    }

    pub fn fractions(&self) -> &[u128] {
        &self.fracs
    }

    /// The first `n` phases.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.fracs.len() {
            return Err(Error::IndexOutOfRange {
                index: n as u64,
                len: self.fracs.len(),
            });
        }
        Ok(PhaseTable {
            fracs: self.fracs[..n].to_vec(),
            guard: self.guard,
        })
    }

    pub fn point(&self, x: u64) -> Result<CirclePoint> {
        if x == 0 || x as usize > self.fracs.len() {
            return Err(Error::IndexOutOfRange {
                index: x,
                len: self.fracs.len(),
            });
        }
        Ok(CirclePoint::from_fraction(self.fracs[x as usize - 1]))
    }

    pub fn points(&self) -> Vec<CirclePoint> {
        self.fracs.iter().map(|&f| CirclePoint::from_fraction(f)).collect()
    }

    /// Largest `|n|` whose phases `{n alpha a(x)}` keep 50 correct bits.
    pub fn max_mode(&self) -> u64 {
        let bits = self.guard.min(128).saturating_sub(53);
        if bits >= 64 {
            u64::MAX
        } else {
            (1u64 << bits) - 1
        }
    }

    pub fn check_mode(&self, n: i64) -> Result<()> {
        if n.unsigned_abs() > self.max_mode() {
            return Err(Error::Precision(format!(
                "mode {n} exceeds the precision budget (|n| <= {})",
                self.max_mode()
            )));
        }
        Ok(())
    }

    /// `{n * alpha * a(x)}` as a 128-bit fraction, reduced exactly.
    #[inline]
    pub fn mode_fraction(&self, index: usize, n: i64) -> u128 {
        self.fracs[index].wrapping_mul(n as i128 as u128)
    }
}

/// `{alpha * a(x)}` for a single index, with the default guard.
pub fn frac_dilate(alpha: &Alpha, seq: &LacunarySequence, x: u64) -> Result<CirclePoint> {
    frac_dilate_with_guard(alpha, seq, x, DEFAULT_GUARD)
}

pub fn frac_dilate_with_guard(
    alpha: &Alpha,
    seq: &LacunarySequence,
    x: u64,
    guard: u32,
) -> Result<CirclePoint> {
    let a = alpha.rational();
    let head = floor_log2(a).unwrap_or(0).max(0) as u32 + 1;
    let bits = required_bits(seq, x, guard)? + head;
    let v = seq.value_raw(x, bits)?;
    Ok(CirclePoint::from_fraction(dilate_fraction(&v, a)))
}

/// Exact `{p * v / q}` of an integer `v`, for reference checks.
pub fn exact_fraction(v: &BigInt, alpha: &BigRational) -> f64 {
    let q = alpha.denom();
    let r = (v * alpha.numer()).mod_floor(q);
    if r.is_zero() {
        0.0
    } else {
        rational_to_f64(&BigRational::new(r, q.clone()))
    }
}

pub(crate) fn fraction_to_f64(f: u128) -> f64 {
    (f >> 64) as f64 * 2f64.powi(-64) + (f as u64).to_f64().unwrap() * 2f64.powi(-128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::LacunarySequence;

    fn geo(s: &str) -> LacunarySequence {
        LacunarySequence::parse_spec(s).unwrap()
    }

    #[test]
    fn required_bits_examples() {
        assert_eq!(required_bits(&geo("geometric:2"), 100, 64).unwrap(), 164);
        assert_eq!(required_bits(&geo("geometric:3/2"), 100, 64).unwrap(), 123);
        assert_eq!(required_bits(&geo("exp"), 10, 64).unwrap(), 79);
        assert!(required_bits(&geo("exp"), 10, 16).is_err());
    }

    #[test]
    fn frac_dilate_examples() {
        let s = geo("geometric:2");
        let third = Alpha::parse("1/3").unwrap();
        let t = frac_dilate(&third, &s, 5).unwrap().theta();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
        let half = Alpha::parse("1/2").unwrap();
        assert_eq!(frac_dilate(&half, &s, 3).unwrap().theta(), 0.0);
        let t = frac_dilate(&third, &s, 10_000).unwrap().theta();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn table_matches_single_evaluation() {
        for spec in ["geometric:3/2", "exp", "geometric:1.41421356237"] {
            let s = geo(spec);
            let table = SequenceTable::new(&s, 300, DEFAULT_GUARD).unwrap();
            let alpha = Alpha::parse("1.2345").unwrap();
            let phases = PhaseTable::new(&table, &alpha).unwrap();
            for x in [1u64, 2, 17, 150, 299, 300] {
                let a = phases.point(x).unwrap().theta();
                let b = frac_dilate(&alpha, &s, x).unwrap().theta();
                let d = (a - b).abs();
                assert!(d.min(1.0 - d) < 2f64.powi(-50), "{spec} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mode_fraction_reduces_exactly() {
        let s = geo("geometric:2");
        let table = SequenceTable::new(&s, 40, DEFAULT_GUARD).unwrap();
        let alpha = Alpha::parse("1/7").unwrap();
        let phases = PhaseTable::new(&table, &alpha).unwrap();
        for x in 1..=40u64 {
            for n in [-5i64, -1, 1, 3, 11] {
                let f = fraction_to_f64(phases.mode_fraction(x as usize - 1, n));
                let v = BigInt::from(n) * (BigInt::one() << x as usize);
                let want = exact_fraction(&v, alpha.rational());
                assert!((f - want).abs() < 1e-15, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn alpha_headroom_enforced() {
        let table = SequenceTable::new(&geo("geometric:2"), 10, DEFAULT_GUARD).unwrap();
        assert!(PhaseTable::new(&table, &Alpha::parse("70000").unwrap()).is_err());
        assert!(Alpha::parse("0").is_err());
        assert!(Alpha::parse("-1/2").is_err());
    }

    #[test]
    fn circle_points() {
        assert!(CirclePoint::new(1.0).is_none());
        assert_eq!(CirclePoint::wrap(-0.25).theta(), 0.75);
        assert_eq!(CirclePoint::from_fraction(u128::MAX).theta(), 1.0 - 2f64.powi(-53));
    }
}
