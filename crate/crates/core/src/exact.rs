//! Exact rational ingestion.
//!
//! Every user-facing real number (dilation factors, ratios, table entries,
//! exponents) enters through [`parse_rational`], so nothing the user types is
//! ever rounded to a double before it reaches the high-precision layer.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `p/q`, a decimal literal (`-1.25`, `.5`, `3.`) or a decimal with
/// an exponent (`2.5e-3`) into an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational> {
    let s = input.trim();
    let fail = |reason: &str| Error::Parse {
        what: "exact rational",
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(fail("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num).map_err(|_| fail("bad numerator"))?;
        let den = parse_rational(den).map_err(|_| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(num / den);
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..]
                .parse()
                .map_err(|_| fail("bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    if exponent.unsigned_abs() > 100_000 {
        return Err(fail("exponent out of range"));
    }

    let (negative, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(fail("no digits"));
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(fail("unexpected character"));
    }

    let digits = format!("{int_part}{frac_part}");
    let mut numer = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits
            .parse::<BigInt>()
            .map_err(|e| fail(&e.to_string()))?
    };
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * Pow::pow(&ten, scale as u64))
    } else {
        BigRational::new(numer, Pow::pow(&ten, (-scale) as u64))
    };
    Ok(value)
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::invalid(format!("{x} is not finite")))
}

/// Best-effort double approximation of a rational (used for reporting only).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Extreme magnitudes: scale by the bit-length difference.
    let num_bits = r.numer().bits() as i64;
    let den_bits = r.denom().bits() as i64;
    let shift = num_bits - den_bits;
    let scaled = if shift > 0 {
        BigRational::new(r.numer().clone(), r.denom() << shift as usize)
    } else {
        BigRational::new(r.numer() << (-shift) as usize, r.denom().clone())
    };
    let m = scaled.to_f64().unwrap_or(f64::NAN);
    crate::bigreal::ldexp(m, shift)
}

/// Floor of `log2 |r|`, exact.
pub fn floor_log2(r: &BigRational) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let num = r.numer().abs();
    let den = r.denom().abs();
    let mut k = num.bits() as i64 - den.bits() as i64;
    // 2^k <= |r| < 2^(k+1) after at most one correction.
    let pow2 = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as usize)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
        }
    };
    let abs = BigRational::new(num, den);
    if abs < pow2(k) {
        k -= 1;
    }
    Some(k)
}

pub(crate) fn is_positive(r: &BigRational) -> bool {
    r.numer().sign() == Sign::Plus
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/2").unwrap(), q(3, 2));
        assert_eq!(parse_rational("1.5").unwrap(), q(3, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("2.").unwrap(), q(2, 1));
        assert_eq!(parse_rational("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(parse_rational("1E3").unwrap(), q(1000, 1));
        assert_eq!(parse_rational(" 1/3 ").unwrap(), q(1, 3));
        assert_eq!(
            parse_rational("1.41421356237").unwrap(),
            q(141421356237, 100000000000)
        );
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "--1", "1e", "."] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn floor_log2_matches_definition() {
        assert_eq!(floor_log2(&q(1, 1)), Some(0));
        assert_eq!(floor_log2(&q(3, 2)), Some(0));
        assert_eq!(floor_log2(&q(8, 1)), Some(3));
        assert_eq!(floor_log2(&q(7, 1)), Some(2));
        assert_eq!(floor_log2(&q(1, 3)), Some(-2));
        assert_eq!(floor_log2(&q(1, 4)), Some(-2));
    }

    #[test]
    fn huge_rationals_convert_to_doubles() {
        let big = BigRational::from_integer(BigInt::one() << 2000usize);
        let tiny = BigRational::new(BigInt::one(), BigInt::from(3) << 600usize);
        assert!(rational_to_f64(&big).is_infinite());
        let t = rational_to_f64(&tiny);
        assert!((t / (2f64.powi(-600) / 3.0) - 1.0).abs() < 1e-12);
    }
}
