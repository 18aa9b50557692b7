//! Fixed-width integer keys `Q = n G(x, y)` for elements of the gap set.
//!
//! `G(x, y)` is `a(x) - a(y)` scaled to an integer, exactly for rational
//! sequences and to within a small absolute error otherwise. Two elements are
//! within `K` of each other when `|Q - Q'| <= inner` and apart when
//! `|Q - Q'| > outer`; anything in between needs an exact decision.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::bigreal::BigReal;
use crate::error::Result;
use crate::sequences::LacunarySequence;

use super::params::Threshold;

/// Widest key in 64-bit words.
pub const MAX_WORDS: usize = 40;

pub struct GapKeys {
    n: usize,
    words: usize,
    gaps: Vec<u64>,
    inner: Option<Vec<u64>>,
    outer: Vec<u64>,
}

impl GapKeys {
    /// Exact keys from integer numerators over one denominator; `limit` is
    /// the largest admissible `|Q - Q'|`.
    pub fn exact(num: &[BigInt], limit: &BigInt, m: u64) -> Option<Self> {
        if limit.is_negative() {
            return None;
        }
        let mut keys = GapKeys::from_scaled(num, m)?;
        let lim = keys.clamp(limit);
        keys.inner = Some(lim.clone());
        keys.outer = lim;
        Some(keys)
    }

    /// Keys from `floor(a(x) 2^s)` with `s` chosen from `M` and `K`.
    pub fn approximate(seq: &LacunarySequence, n: usize, k: &Threshold, m: u64) -> Result<Option<Self>> {
        let (k_lo, _) = k.bounds_f64();
        let m_bits = 64 - m.leading_zeros() as i64;
        let s = (m_bits + 48 - k_lo.log2().floor().min(0.0) as i64).max(0) as u32;
        let mut scaled = Vec::with_capacity(n);
        for x in 1..=n as u64 {
            let mag = seq.ceil_log2(x)?.max(0) as u32;
            let v = seq.value_at(x, mag + s + 16)?;
            scaled.push(floor_scaled(&v, s));
        }
        let Some(mut keys) = GapKeys::from_scaled(&scaled, m) else {
            return Ok(None);
        };
        // |Q - Q'| is off by less than 2.01 (n + n') <= 4.02 M.
        let slack = BigInt::from(m) * 5 + 2;
        let (fl, _) = k.scaled_floor(s);
        let inner: BigInt = &fl - &slack - 1;
        let inner = (!inner.is_negative()).then(|| keys.clamp(&inner));
        keys.inner = inner;
        keys.outer = keys.clamp(&(fl + slack));
        Ok(Some(keys))
    }

    fn from_scaled(scaled: &[BigInt], m: u64) -> Option<Self> {
        let n = scaled.len();
        let max_bits = scaled.iter().map(|v| v.bits()).max().unwrap_or(0) as usize;
        let m_bits = 64 - m.leading_zeros() as usize;
        // One spare word so that Q + limit never overflows.
        let words = (max_bits + m_bits).div_ceil(64).max(1) + 1;
        if words > MAX_WORDS {
            return None;
        }
        let mut gaps = vec![0u64; n * n * words];
        for x in 1..n {
            for y in 0..x {
                let g = &scaled[x] - &scaled[y];
                if g.is_negative() {
                    return None;
                }
                let digits = g.magnitude().to_u64_digits();
                let at = (x * n + y) * words;
                gaps[at..at + digits.len()].copy_from_slice(&digits);
            }
        }
        Some(GapKeys {
            n,
            words,
            gaps,
            inner: None,
            outer: Vec::new(),
        })
    }

    /// `min(v, 2^(64 (words - 1)) - 1)` as words.
    fn clamp(&self, v: &BigInt) -> Vec<u64> {
        let w = self.words;
        if v.bits() as usize > 64 * (w - 1) {
            let mut out = vec![u64::MAX; w];
            out[w - 1] = 0;
            out
        } else {
            let mut out = v.magnitude().to_u64_digits();
            out.resize(w, 0);
            out
        }
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn inner(&self) -> Option<&[u64]> {
        self.inner.as_deref()
    }

    pub fn outer(&self) -> &[u64] {
        &self.outer
    }

    /// True when every pair is settled by the keys alone.
    #[cfg(test)]
    pub fn is_exact(&self) -> bool {
        self.inner.as_deref() == Some(&self.outer[..])
    }

    /// Writes `n G(x, y)`, `x > y`, into `out` (`words` words).
    pub fn key(&self, k: u64, x: usize, y: usize, out: &mut [u64]) {
        let at = ((x - 1) * self.n + (y - 1)) * self.words;
        let g = &self.gaps[at..at + self.words];
        let mut carry = 0u128;
        for (o, &w) in out.iter_mut().zip(g) {
            let t = w as u128 * k as u128 + carry;
            *o = t as u64;
            carry = t >> 64;
        }
    }
}

fn floor_scaled(v: &BigReal, s: u32) -> BigInt {
    let e = v.exponent() + s as i64;
    if e >= 0 {
        v.mantissa() << e as usize
    } else {
        v.mantissa() >> (-e) as usize
    }
}

pub fn cmp_words(a: &[u64], b: &[u64]) -> Ordering {
    for i in (0..a.len()).rev() {
        match a[i].cmp(&b[i]) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// `out = a - b`, saturating at zero.
pub fn sub_sat(a: &[u64], b: &[u64], out: &mut [u64]) {
    if cmp_words(a, b) != Ordering::Greater {
        out.fill(0);
        return;
    }
    let mut borrow = false;
    for i in 0..a.len() {
        let (s, o1) = a[i].overflowing_sub(b[i]);
        let (s, o2) = s.overflowing_sub(borrow as u64);
        out[i] = s;
        borrow = o1 || o2;
    }
}

/// `out = a + b`; callers keep the top word free.
pub fn add(a: &[u64], b: &[u64], out: &mut [u64]) {
    let mut carry = false;
    for i in 0..a.len() {
        let (s, o1) = a[i].overflowing_add(b[i]);
        let (s, o2) = s.overflowing_add(carry as u64);
        out[i] = s;
        carry = o1 || o2;
    }
}

/// 128 bits of `key` starting at bit `shift`.
pub fn window128(key: &[u64], shift: usize) -> u128 {
    let word = shift / 64;
    let bit = shift % 64;
    let get = |i: usize| key.get(i).copied().unwrap_or(0) as u128;
    let lo = get(word) | (get(word + 1) << 64);
    if bit == 0 {
        lo
    } else {
        (lo >> bit) | (get(word + 2) << (128 - bit))
    }
}

pub fn bit_length(key: &[u64]) -> usize {
    for i in (0..key.len()).rev() {
        if key[i] != 0 {
            return 64 * i + 64 - key[i].leading_zeros() as usize;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn to_big(w: &[u64]) -> BigInt {
        w.iter().rev().fold(BigInt::from(0), |acc, &d| (acc << 64usize) + d)
    }

    #[test]
    fn keys_match_bigint_arithmetic() {
        let num: Vec<BigInt> = (0..12u32).map(|x| BigInt::from(3).pow(x) << (70 - x as usize)).collect();
        let limit = BigInt::one() << 70usize;
        let keys = GapKeys::exact(&num, &limit, 1000).unwrap();
        assert!(keys.is_exact());
        let w = keys.words();
        let (mut a, mut b, mut d) = (vec![0; w], vec![0; w], vec![0; w]);
        for (n1, x1, y1, n2, x2, y2) in [(2u64, 3usize, 2usize, 3u64, 2usize, 1usize), (7, 9, 4, 5, 11, 3), (999, 12, 1, 1, 12, 11)] {
            keys.key(n1, x1, y1, &mut a);
            keys.key(n2, x2, y2, &mut b);
            let g1 = (&num[x1 - 1] - &num[y1 - 1]) * n1;
            let g2 = (&num[x2 - 1] - &num[y2 - 1]) * n2;
            assert_eq!(to_big(&a), g1);
            assert_eq!(cmp_words(&a, &b), g1.cmp(&g2));
            sub_sat(&a, &b, &mut d);
            assert_eq!(to_big(&d), (&g1 - &g2).max(BigInt::from(0)));
            add(&a, &b, &mut d);
            assert_eq!(to_big(&d), &g1 + &g2);
        }
    }

    #[test]
    fn windows_and_lengths() {
        let key = [0x1234u64, 0xffff_0000_0000_0000, 0x5];
        assert_eq!(bit_length(&key), 128 + 3);
        assert_eq!(window128(&key, 0), 0xffff_0000_0000_0000_0000_0000_0000_1234);
        assert_eq!(window128(&key, 64 + 48), 0x5_ffff);
        assert_eq!(bit_length(&[0, 0]), 0);
    }
}
