//! Lacunary sequences `a(1), a(2), ...` and their gaps.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use crate::bigreal::BigReal;
use crate::error::{Error, Result};
use crate::exact::{floor_log2, is_positive, parse_rational, rational_to_f64};

/// Rational lower bound for `e`, used as the certified ratio of `e^x`.
pub const E_LOWER: (u64, u64) = (2_718_281_828_459_045, 1_000_000_000_000_000);

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceKind {
    /// `a(x) = r^x`.
    Geometric { ratio: BigRational },
    /// `a(x) = e^x`.
    Exponential,
    /// `a(x)` read from a table, line `x` holding `a(x)`.
    Custom { values: Vec<BigRational> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LacunarySequence {
    kind: SequenceKind,
    claimed_ratio: BigRational,
    label: String,
}

#[derive(Clone, Debug)]
pub struct GapValue {
    pub x: u64,
    pub y: u64,
    pub value: BigReal,
}

#[derive(Clone, Debug)]
pub struct LacunarityReport {
    pub n: u64,
    /// Smallest `a(x+1)/a(x)` over `1 <= x < n`.
    pub min_ratio: f64,
    /// Index `x` attaining the minimum.
    pub argmin: u64,
    pub claimed_ratio: BigRational,
    pub pass: bool,
}

fn ratio_of(a: &BigRational, b: &BigRational) -> BigRational {
    a / b
}

impl LacunarySequence {
    pub fn geometric(ratio: BigRational) -> Result<Self> {
        if ratio <= BigRational::one() {
            return Err(Error::InvalidSequence(format!(
                "geometric ratio must exceed 1, got {ratio}"
            )));
        }
        let label = format!("geometric:{ratio}");
        Ok(LacunarySequence {
            claimed_ratio: ratio.clone(),
            kind: SequenceKind::Geometric { ratio },
            label,
        })
    }

    pub fn exponential() -> Self {
        LacunarySequence {
            kind: SequenceKind::Exponential,
            claimed_ratio: BigRational::new(E_LOWER.0.into(), E_LOWER.1.into()),
            label: "exp".to_string(),
        }
    }

    /// A tabulated sequence. Entries must be positive and strictly
    /// increasing. Without `claimed_ratio` the smallest consecutive ratio of
    /// the table is used.
    pub fn custom(values: Vec<BigRational>, claimed_ratio: Option<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequence("empty table".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !is_positive(v) {
                return Err(Error::InvalidSequence(format!(
                    "entry {} is not positive: {v}",
                    i + 1
                )));
            }
            if i > 0 && values[i - 1] >= *v {
                return Err(Error::InvalidSequence(format!(
                    "entries {} and {} are not strictly increasing",
                    i,
                    i + 1
                )));
            }
        }
        let observed = values
            .windows(2)
            .map(|w| ratio_of(&w[1], &w[0]))
            .min()
            .unwrap_or_else(|| BigRational::from_integer(2.into()));
        let claimed = claimed_ratio.unwrap_or(observed);
        if claimed <= BigRational::one() {
            return Err(Error::InvalidSequence(format!(
                "claimed ratio must exceed 1, got {claimed}"
            )));
        }
        Ok(LacunarySequence {
            kind: SequenceKind::Custom { values },
            claimed_ratio: claimed,
            label: "custom".to_string(),
        })
    }

    /// Parses a table: one decimal or `p/q` literal per line, `#` comments
    /// and blank lines ignored.
    pub fn parse_table(text: &str) -> Result<Vec<BigRational>> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v = parse_rational(t).map_err(|_| Error::Parse {
                what: "table entry",
                input: t.to_string(),
                reason: format!("line {}", lineno + 1),
            })?;
            values.push(v);
        }
        Ok(values)
    }

    pub fn from_table_file(path: &Path, claimed_ratio: Option<BigRational>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut seq = Self::custom(Self::parse_table(&text)?, claimed_ratio)?;
        seq.label = format!("custom:{}", path.display());
        Ok(seq)
    }

    /// `geometric:<ratio>`, `exp` or `custom:<path>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let fail = |reason: &str| Error::Parse {
            what: "sequence spec",
            input: spec.to_string(),
            reason: reason.to_string(),
        };
        if spec == "exp" {
            return Ok(Self::exponential());
        }
        match spec.split_once(':') {
            Some(("geometric", r)) => Self::geometric(parse_rational(r)?),
            Some(("custom", path)) if !path.is_empty() => {
                Self::from_table_file(Path::new(path), None)
            }
            _ => Err(fail("expected geometric:<ratio>, exp or custom:<path>")),
        }
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn claimed_ratio(&self) -> &BigRational {
        &self.claimed_ratio
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of available terms (`None` for unbounded generators).
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            SequenceKind::Custom { values } => Some(values.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_rational(&self) -> bool {
        !matches!(self.kind, SequenceKind::Exponential)
    }

    fn check_index(&self, x: u64) -> Result<()> {
        if x == 0 {
            return Err(Error::invalid("sequence indices start at 1"));
        }
        if let Some(len) = self.len() {
            if x > len as u64 {
                return Err(Error::IndexOutOfRange { index: x, len });
            }
        }
        Ok(())
    }

    /// Exact value for rational-valued sequences.
    pub fn exact_value(&self, x: u64) -> Result<Option<BigRational>> {
        self.check_index(x)?;
        Ok(match &self.kind {
            SequenceKind::Geometric { ratio } => Some(Pow::pow(ratio, x)),
            SequenceKind::Custom { values } => Some(values[x as usize - 1].clone()),
            SequenceKind::Exponential => None,
        })
    }

    /// `a(x)` with relative error at most `2^(2-bits)`.
    pub fn value_at(&self, x: u64, bits: u32) -> Result<BigReal> {
        if bits < 64 {
            return Err(Error::invalid(format!("precision {bits} below 64 bits")));
        }
        self.value_raw(x, bits)
    }

    pub(crate) fn value_raw(&self, x: u64, bits: u32) -> Result<BigReal> {
        match self.exact_value(x)? {
            Some(r) => Ok(BigReal::from_rational(&r, bits)),
            None => Ok(BigReal::exp_int(x, bits)),
        }
    }

    /// `a(x) - a(y)`.
    pub fn gap(&self, x: u64, y: u64, bits: u32) -> Result<GapValue> {
        if x == y {
            return Err(Error::invalid("gap requires x != y"));
        }
        self.check_index(x)?;
        self.check_index(y)?;
        let value = match (self.exact_value(x)?, self.exact_value(y)?) {
            (Some(a), Some(b)) => BigReal::from_rational(&(a - b), bits),
            _ => {
                // a(x) - a(y) = sign * e^lo (e^|x-y| - 1); no cancellation.
                let (lo, d, sign) = if x > y { (y, x - y, 1) } else { (x, y - x, -1) };
                let w = bits + 8;
                let inner = BigReal::exp_int(d, w).sub(&BigReal::from_u64(1, w), w);
                let v = BigReal::exp_int(lo, w).mul(&inner, bits);
                if sign < 0 {
                    v.neg()
                } else {
                    v
                }
            }
        };
        Ok(GapValue { x, y, value })
    }

    /// `ceil(log2 a(x))`, exact.
    pub fn ceil_log2(&self, x: u64) -> Result<i64> {
        match self.exact_value(x)? {
            Some(r) => {
                let fl = floor_log2(&r).expect("entries are positive");
                let pow = if fl >= 0 {
                    BigRational::from_integer(BigInt::one() << fl as usize)
                } else {
                    BigRational::new(BigInt::one(), BigInt::one() << (-fl) as usize)
                };
                Ok(if r == pow { fl } else { fl + 1 })
            }
            // e^x is never a power of two for x >= 1.
            None => Ok(BigReal::exp_int(x, 128).magnitude().unwrap()),
        }
    }

    /// Checks `a(x+1)/a(x) >= C` for `1 <= x < n`.
    pub fn verify_lacunary(&self, n: u64) -> Result<LacunarityReport> {
        if n < 2 {
            return Err(Error::invalid("verify_lacunary needs N >= 2"));
        }
        self.check_index(n)?;
        let claimed = self.claimed_ratio.clone();
        let (min_ratio, argmin, pass) = match &self.kind {
            SequenceKind::Geometric { ratio } => {
                (rational_to_f64(ratio), 1, *ratio > BigRational::one() && *ratio >= claimed)
            }
            SequenceKind::Exponential => {
                let e = BigReal::e(256);
                let c = BigReal::from_rational(&claimed, 256);
                (
                    std::f64::consts::E,
                    1,
                    e.cmp_value(&c) != Ordering::Less,
                )
            }
            SequenceKind::Custom { values } => {
                let (idx, r) = values[..n as usize]
                    .windows(2)
                    .map(|w| ratio_of(&w[1], &w[0]))
                    .enumerate()
                    .min_by(|a, b| a.1.cmp(&b.1))
                    .expect("n >= 2");
                let pass = r > BigRational::one() && r >= claimed;
                (rational_to_f64(&r), idx as u64 + 1, pass)
            }
        };
        Ok(LacunarityReport {
            n,
            min_ratio,
            argmin,
            claimed_ratio: claimed,
            pass,
        })
    }

    /// True when the claimed ratio holds over the first `n` terms.
    pub fn is_certified(&self, n: u64) -> bool {
        n < 2 || self.verify_lacunary(n).map(|r| r.pass).unwrap_or(false)
    }
}

impl fmt::Display for LacunarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl GapValue {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn is_positive(&self) -> bool {
        self.value.is_positive()
    }
}
