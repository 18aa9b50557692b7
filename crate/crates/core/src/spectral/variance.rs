//! The variance as a double Fourier sum with weights
//! `w(n1, n2, N) = sum rho^(n1 (a(x3) - a(x1)) - n2 (a(x4) - a(x2)))`,
//! evaluated directly for tiny `N`.
//!
//! The sum runs over `(n1, n2) != (0, 0)` with `|n_i| <= M`. Expanding
//! `R2_M^2` for the Fourier statistic truncated at `M` shows the sum equals
//! `<R2_M^2> - Z^2` with `Z = f^(0) (N-1)/N`, which is what the Monte Carlo
//! cross-check estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::paircorr::{TestFunction, WindowFunction};
use crate::precision::{SequenceTable, DEFAULT_GUARD};
use crate::sequences::LacunarySequence;
use crate::spectral::density::WeightDensity;
use crate::spectral::montecarlo::{sample_statistic, PointSource, Statistic};
use crate::stats::{mean, std_error};

pub const MAX_TINY_N: usize = 16;
pub const MAX_TINY_M: u64 = 64;

/// Accuracy assumed for each tabulated `rho^` value.
const RHO_HAT_ERROR: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TinyVariance {
    pub n: usize,
    pub m: u64,
    pub value: f64,
    /// Terms with `n2 = 0, n1 != 0`.
    pub axis_n1: f64,
    /// Terms with `n1 = 0, n2 != 0`.
    pub axis_n2: f64,
    /// Terms with both modes non-zero.
    pub off_axis: f64,
    /// `Z^2`, the excluded origin term.
    pub origin: f64,
    /// Bound on the error from the tabulated `rho^`.
    pub numeric_bound: f64,
}

fn differences(seq: &LacunarySequence, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n * (n - 1));
    for x in 1..=n as u64 {
        for y in 1..=n as u64 {
            if x != y {
                out.push(seq.gap(x, y, 128)?.to_f64());
            }
        }
    }
    Ok(out)
}

pub fn variance_fourier_tiny(
    seq: &LacunarySequence,
    window: &WindowFunction,
    n: usize,
    m: u64,
    rho: &WeightDensity,
) -> Result<TinyVariance> {
    if n < 2 {
        return Err(Error::invalid("need N >= 2"));
    }
    if n > MAX_TINY_N || m > MAX_TINY_M {
        return Err(Error::budget(format!(
            "tiny variance sum limited to N <= {MAX_TINY_N}, M <= {MAX_TINY_M} (got N = {n}, M = {m})"
        )));
    }
    window.transform(0.0)?;
    let nf = n as f64;
    let diffs = differences(seq, n)?;
    let coef: Vec<f64> = (0..=m)
        .map(|k| window.fourier(k as f64 / nf).unwrap_or(0.0))
        .collect();
    let reach = rho.fourier_support();
    // w depends on |n1|, |n2| only, since the difference set is symmetric.
    let weight = |n1: u64, n2: u64| -> f64 {
        let (a, b) = (n1 as f64, n2 as f64);
        let mut acc = 0.0;
        for &d1 in &diffs {
            let u = a * d1;
            for &d2 in &diffs {
                let t = u - b * d2;
                if t.abs() < reach {
                    acc += rho.fourier(t).re;
                }
            }
        }
        acc
    };
    let (mut axis_n1, mut axis_n2, mut off_axis, mut abs_coef) = (0.0, 0.0, 0.0, 0.0);
    for n1 in 0..=m {
        for n2 in 0..=m {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let c = coef[n1 as usize] * coef[n2 as usize];
            if c == 0.0 {
                continue;
            }
            let mult = (if n1 == 0 { 1.0 } else { 2.0 }) * (if n2 == 0 { 1.0 } else { 2.0 });
            abs_coef += mult * c.abs();
            let term = mult * c * weight(n1, n2);
            match (n1, n2) {
                (_, 0) => axis_n1 += term,
                (0, _) => axis_n2 += term,
                _ => off_axis += term,
            }
        }
    }
    let n4 = nf.powi(4);
    let pairs = nf * (nf - 1.0);
    let z = coef[0] * (nf - 1.0) / nf;
    Ok(TinyVariance {
        n,
        m,
        value: (axis_n1 + axis_n2 + off_axis) / n4,
        axis_n1: axis_n1 / n4,
        axis_n2: axis_n2 / n4,
        off_axis: off_axis / n4,
        origin: z * z,
        numeric_bound: abs_coef * pairs * pairs * RHO_HAT_ERROR / n4,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceCrossCheck {
    pub tiny: TinyVariance,
    /// Monte Carlo mean of `R2_M^2 - Z^2`.
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub samples: usize,
    pub seed: u64,
    /// `numeric_bound + 3 stderr`.
    pub tolerance: f64,
    pub agree: bool,
}

/// Compares the double Fourier sum with a Monte Carlo estimate of the same
/// quantity from the truncated Fourier statistic.
pub fn variance_crosscheck(
    seq: &LacunarySequence,
    window: &WindowFunction,
    n: usize,
    m: u64,
    rho: &WeightDensity,
    samples: usize,
    seed: u64,
) -> Result<VarianceCrossCheck> {
    let tiny = variance_fourier_tiny(seq, window, n, m, rho)?;
    let table = SequenceTable::new(seq, n, DEFAULT_GUARD)?;
    let stat = Statistic::Fourier {
        window: *window,
        cutoff: m,
    };
    let values: Vec<f64> = sample_statistic(&PointSource::dilation(table), &stat, rho, samples, seed)?
        .into_iter()
        .map(|s| s.value * s.value - tiny.origin)
        .collect();
    let mc_mean = mean(&values);
    let mc_stderr = std_error(&values);
    let tolerance = tiny.numeric_bound + 3.0 * mc_stderr;
    Ok(VarianceCrossCheck {
        agree: (tiny.value - mc_mean).abs() <= tolerance,
        tiny,
        mc_mean,
        mc_stderr,
        samples,
        seed,
        tolerance,
    })
}
