//! Binary floating-point reals with an explicit bit budget.
//!
//! A [`BigReal`] is `mantissa * 2^exponent` with `|mantissa| < 2^prec`.
//! Every operation takes the precision of its result and rounds to nearest,
//! so the relative error of a single operation is at most `2^(1-prec)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct BigReal {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

/// `x * 2^e` without intermediate overflow for any `e`.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

fn round_shift(m: &BigInt, k: u64) -> BigInt {
    if k == 0 {
        return m.clone();
    }
    let half = BigInt::one() << (k - 1) as usize;
    if m.sign() == Sign::Minus {
        -((-m + half) >> k as usize)
    } else {
        (m + half) >> k as usize
    }
}

fn shl(m: &BigInt, k: i64) -> BigInt {
    debug_assert!(k >= 0);
    m << k as usize
}

impl BigReal {
    fn normalized(mant: BigInt, exp: i64, prec: u32) -> Self {
        assert!(prec >= 2, "precision must be at least two bits");
        let bits = mant.bits();
        if bits <= prec as u64 {
            return BigReal { mant, exp, prec };
        }
        let shift = bits - prec as u64;
        let mut m = round_shift(&mant, shift);
        let mut e = exp + shift as i64;
        if m.bits() > prec as u64 {
            m = round_shift(&m, 1);
            e += 1;
        }
        BigReal { mant: m, exp: e, prec }
    }

    pub fn zero(prec: u32) -> Self {
        BigReal {
            mant: BigInt::zero(),
            exp: 0,
            prec,
        }
    }

    pub fn from_bigint(value: BigInt, prec: u32) -> Self {
        Self::normalized(value, 0, prec)
    }

    pub fn from_u64(value: u64, prec: u32) -> Self {
        Self::from_bigint(BigInt::from(value), prec)
    }

    /// Exact value of a finite double (rounded only if `prec < 53`).
    pub fn from_f64(x: f64, prec: u32) -> Option<Self> {
        let r = BigRational::from_float(x)?;
        Some(Self::from_rational(&r, prec))
    }

    /// `num / den` correctly rounded to `prec` bits.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "division by zero");
        if num.is_zero() {
            return Self::zero(prec);
        }
        // Quotient carries prec + 2 bits before the final rounding.
        let shift = prec as i64 + 2 + den.bits() as i64 - num.bits() as i64;
        let (n, exp) = if shift >= 0 {
            (shl(num, shift), -shift)
        } else {
            (num.clone(), 0)
        };
        let (q, r) = n.div_rem(den);
        // Sticky bit so that round-to-nearest never sees an exact half.
        let q = (q << 1usize)
            + if r.is_zero() {
                BigInt::zero()
            } else if (r.sign() == Sign::Minus) ^ (den.sign() == Sign::Minus) {
                -BigInt::one()
            } else {
                BigInt::one()
            };
        Self::normalized(q, exp - 1, prec)
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Self {
        Self::from_ratio(r.numer(), r.denom(), prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Self::normalized(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    /// `floor(log2 |x|) + 1`, or `None` for zero.
    pub fn magnitude(&self) -> Option<i64> {
        if self.mant.is_zero() {
            None
        } else {
            Some(self.mant.bits() as i64 + self.exp)
        }
    }

    pub fn neg(&self) -> Self {
        BigReal {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> Self {
        BigReal {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn mul(&self, other: &BigReal, prec: u32) -> Self {
        Self::normalized(&self.mant * &other.mant, self.exp + other.exp, prec)
    }

    pub fn mul_int(&self, k: &BigInt, prec: u32) -> Self {
        Self::normalized(&self.mant * k, self.exp, prec)
    }

    /// `self * p / q`, a single rounding.
    pub fn mul_ratio(&self, p: &BigInt, q: &BigInt, prec: u32) -> Self {
        let r = Self::from_ratio(&(&self.mant * p), q, prec);
        BigReal {
            exp: r.exp + self.exp,
            ..r
        }
    }

    pub fn add(&self, other: &BigReal, prec: u32) -> Self {
        let (a, b) = (self, other);
        if a.is_zero() {
            return b.with_prec(prec);
        }
        if b.is_zero() {
            return a.with_prec(prec);
        }
        let (ma, mb) = (a.magnitude().unwrap(), b.magnitude().unwrap());
        let (big, mag_big, mag_small) = if ma >= mb { (a, ma, mb) } else { (b, mb, ma) };
        // A summand lying wholly below the result precision cannot cancel
        // and only influences rounding.
        let window_lo = big.exp.min(mag_big - prec as i64 - 8);
        let target = if mag_small < window_lo {
            window_lo
        } else {
            a.exp.min(b.exp)
        };
        let align = |x: &BigReal| -> BigInt {
            if x.exp >= target {
                shl(&x.mant, x.exp - target)
            } else {
                round_shift(&x.mant, (target - x.exp) as u64)
            }
        };
        Self::normalized(align(a) + align(b), target, prec)
    }

    pub fn sub(&self, other: &BigReal, prec: u32) -> Self {
        self.add(&other.neg(), prec)
    }

    pub fn div(&self, other: &BigReal, prec: u32) -> Self {
        let q = Self::from_ratio(&self.mant, &other.mant, prec);
        BigReal {
            exp: q.exp + self.exp - other.exp,
            ..q
        }
    }

    /// Exact comparison of the represented values.
    pub fn cmp_value(&self, other: &BigReal) -> Ordering {
        let sa = self.mant.sign();
        let sb = other.mant.sign();
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        let (ma, mb) = (self.magnitude().unwrap(), other.magnitude().unwrap());
        if ma != mb {
            let ord = ma.cmp(&mb);
            return if sa == Sign::Plus { ord } else { ord.reverse() };
        }
        let target = self.exp.min(other.exp);
        let a = shl(&self.mant, self.exp - target);
        let b = shl(&other.mant, other.exp - target);
        a.cmp(&b)
    }

    /// Exact dyadic rational.
    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(shl(&self.mant, self.exp))
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits();
        let (top, shift) = if bits > 64 {
            let s = bits - 64;
            ((&self.mant >> s as usize), s as i64)
        } else {
            (self.mant.clone(), 0)
        };
        let m = top.to_f64().unwrap_or(f64::NAN);
        ldexp(m, self.exp + shift)
    }

    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            shl(&self.mant, self.exp)
        } else {
            self.mant.div_floor(&(BigInt::one() << (-self.exp) as usize))
        }
    }

    /// Fractional part as a 128-bit binary fraction: `floor(frac(x) * 2^128)`.
    pub fn frac_u128(&self) -> u128 {
        if self.exp >= 0 {
            return 0;
        }
        let f = (-self.exp) as u64;
        let r = self.mant.mod_floor(&(BigInt::one() << f as usize));
        let scaled = if f <= 128 {
            r << (128 - f) as usize
        } else {
            r >> (f - 128) as usize
        };
        low_u128(&scaled)
    }

    /// Euler's number to `prec` bits.
    pub fn e(prec: u32) -> Self {
        let work = prec as usize + 32;
        let one = BigInt::one() << work;
        let mut term = one.clone();
        let mut sum = one;
        let mut k = 1u64;
        while !term.is_zero() {
            term /= k;
            sum += &term;
            k += 1;
        }
        Self::normalized(sum, -(work as i64), prec)
    }

    /// `base^k` by square-and-multiply at a working precision that absorbs
    /// the accumulated rounding.
    pub fn powu(&self, k: u64, prec: u32) -> Self {
        let guard = 2 * (64 - k.leading_zeros()) + 8;
        let work = prec + guard;
        let mut result = BigReal::from_u64(1, work);
        let mut base = self.with_prec(work);
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base, work);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base, work);
            }
        }
        result.with_prec(prec)
    }

    /// `e^x` for a non-negative integer exponent.
    pub fn exp_int(x: u64, prec: u32) -> Self {
        let extra = 2 * (64 - x.leading_zeros()) + 16;
        let e = Self::e(prec + extra);
        e.powu(x, prec)
    }

    /// Truncated decimal expansion with `digits` fractional digits.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let scaled = self.to_rational() * BigRational::from_integer(BigInt::from(10u32).pow(digits as u32));
        let int = scaled.trunc().to_integer();
        let neg = int.sign() == Sign::Minus || (int.is_zero() && self.is_negative());
        let s = int.abs().to_string();
        let s = format!("{:0>width$}", s, width = digits + 1);
        let (ip, fp) = s.split_at(s.len() - digits);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{ip}")
        } else {
            format!("{sign}{ip}.{fp}")
        }
    }
}

pub(crate) fn low_u128(x: &BigInt) -> u128 {
    let mut digits = x.iter_u64_digits();
    let lo = digits.next().unwrap_or(0) as u128;
    let hi = digits.next().unwrap_or(0) as u128;
    lo | (hi << 64)
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v.is_finite() {
            write!(f, "{v}")
        } else {
            write!(f, "{}*2^{}", self.mant, self.exp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &BigReal, exact: &BigRational) -> f64 {
        let d = (a.to_rational() - exact).abs() / exact.abs();
        crate::exact::rational_to_f64(&d)
    }

    #[test]
    fn shifts_floor_negative_values() {
        let m = BigInt::from(-5);
        assert_eq!(m.div_floor(&BigInt::from(4)), BigInt::from(-2));
        let x = BigReal::from_ratio(&BigInt::from(-5), &BigInt::from(4), 64);
        assert_eq!(x.floor(), BigInt::from(-2));
    }

    #[test]
    fn ratio_is_correctly_rounded() {
        for prec in [8u32, 53, 100, 300] {
            let x = BigReal::from_ratio(&BigInt::from(1), &BigInt::from(3), prec);
            let exact = BigRational::new(1.into(), 3.into());
            assert!(rel_err(&x, &exact) <= 2f64.powi(-(prec as i32)));
        }
        let third = BigReal::from_ratio(&1.into(), &3.into(), 53);
        assert_eq!(third.to_f64(), 1.0 / 3.0);
    }

    #[test]
    fn arithmetic_respects_precision() {
        let prec = 200;
        let a = BigReal::from_ratio(&7.into(), &3.into(), prec);
        let b = BigReal::from_ratio(&11.into(), &13.into(), prec);
        let qa = BigRational::new(7.into(), 3.into());
        let qb = BigRational::new(11.into(), 13.into());
        let tol = 2f64.powi(-(prec as i32) + 3);
        assert!(rel_err(&a.mul(&b, prec), &(&qa * &qb)) < tol);
        assert!(rel_err(&a.add(&b, prec), &(&qa + &qb)) < tol);
        assert!(rel_err(&a.sub(&b, prec), &(&qa - &qb)) < tol);
        assert!(rel_err(&a.div(&b, prec), &(&qa / &qb)) < tol);
    }

    #[test]
    fn add_with_wildly_different_scales() {
        let big = BigReal::from_bigint(BigInt::one() << 5000usize, 64);
        let small = BigReal::from_u64(3, 64);
        let s = big.add(&small, 64);
        assert_eq!(s.cmp_value(&big), Ordering::Equal);
        let s = big.add(&small, 6000);
        assert_eq!(s.sub(&big, 64).to_f64(), 3.0);
    }

    #[test]
    fn euler_number() {
        let e = BigReal::e(64);
        assert_eq!(e.to_f64(), std::f64::consts::E);
        let e3 = BigReal::exp_int(3, 64).to_f64();
        assert!((e3 / 3f64.exp() - 1.0).abs() < 1e-15);
        // 50 digits of e.
        let e200 = BigReal::e(200);
        assert_eq!(
            e200.to_decimal_string(50),
            "2.71828182845904523536028747135266249775724709369995"
        );
    }

    #[test]
    fn exp_int_consistent_across_precisions() {
        let lo = BigReal::exp_int(40, 128);
        let hi = BigReal::exp_int(40, 256);
        let d = lo.sub(&hi, 256).abs();
        let rel = d.to_f64() / hi.to_f64();
        assert!(rel <= 2f64.powi(-126), "rel {rel}");
    }

    #[test]
    fn frac_bits() {
        let x = BigReal::from_ratio(&7.into(), &4.into(), 64);
        assert_eq!(x.frac_u128(), 3u128 << 126);
        let y = BigReal::from_ratio(&(-1).into(), &4.into(), 64);
        assert_eq!(y.frac_u128(), 3u128 << 126);
        assert_eq!(BigReal::from_u64(12, 64).frac_u128(), 0);
    }

    #[test]
    fn comparisons_are_exact() {
        let a = BigReal::from_ratio(&1.into(), &3.into(), 100);
        let b = BigReal::from_ratio(&1.into(), &3.into(), 101);
        assert_ne!(a.cmp_value(&b), Ordering::Equal);
        assert_eq!(a.cmp_value(&a.with_prec(300)), Ordering::Equal);
        assert_eq!(a.neg().cmp_value(&a), Ordering::Less);
    }

    #[test]
    fn decimal_strings() {
        let x = BigReal::from_ratio(&(-9).into(), &4.into(), 64);
        assert_eq!(x.to_decimal_string(3), "-2.250");
        assert_eq!(BigReal::from_u64(8, 64).to_decimal_string(0), "8");
    }
}
