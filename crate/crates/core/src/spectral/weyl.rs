//! Weyl sums `S_n = sum_{x != y} e(alpha n (a(x) - a(y)))` and the Fourier
//! reconstruction of the smoothed pair correlation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paircorr::{Algorithm, PairCorrEstimate, TestFunction, WindowFunction};
use crate::precision::{fraction_to_f64, PhaseTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylSum {
    pub n: i64,
    pub count: usize,
    #[serde(serialize_with = "serialize_complex")]
    pub value: Complex64,
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

#[inline]
fn unit(frac: u128) -> Complex64 {
    let (s, c) = (std::f64::consts::TAU * fraction_to_f64(frac)).sin_cos();
    Complex64::new(c, s)
}

/// `T_n = sum_x e(n alpha a(x))`.
pub fn exponential_sum(phases: &PhaseTable, n: i64) -> Result<Complex64> {
    phases.check_mode(n)?;
    Ok((0..phases.len()).map(|i| unit(phases.mode_fraction(i, n))).sum())
}

/// `S_n = |T_n|^2 - N`.
pub fn weyl_sum(phases: &PhaseTable, n: i64) -> Result<WeylSum> {
    let t = exponential_sum(phases, n)?;
    Ok(WeylSum {
        n,
        count: phases.len(),
        value: Complex64::new(t.norm_sqr() - phases.len() as f64, 0.0),
    })
}

/// `S_n` from its defining double sum over `x != y` (quadratic cost).
pub fn weyl_sum_pairs(phases: &PhaseTable, n: i64) -> Result<WeylSum> {
    phases.check_mode(n)?;
    let len = phases.len();
    let mut value = Complex64::new(0.0, 0.0);
    for x in 0..len {
        let fx = phases.mode_fraction(x, n);
        for y in 0..len {
            if x != y {
                value += unit(fx.wrapping_sub(phases.mode_fraction(y, n)));
            }
        }
    }
    Ok(WeylSum {
        n,
        count: len,
        value,
    })
}

/// `(1/N^2) sum_{|n| <= cutoff} f^(n/N) S_n` without the cutoff requirement
/// of [`r2_fourier`].
pub fn r2_fourier_truncated(
    phases: &PhaseTable,
    window: &WindowFunction,
    cutoff: u64,
) -> Result<PairCorrEstimate> {
    let n = phases.len();
    if n < 2 {
        return Err(Error::invalid("pair correlation needs N >= 2"));
    }
    window.transform(0.0)?;
    let cutoff = i64::try_from(cutoff).map_err(|_| Error::invalid("cutoff too large"))?;
    phases.check_mode(cutoff)?;
    let nf = n as f64;
    let zero = window.transform(0.0)? * (nf * nf - nf);
    let terms: Vec<f64> = (1..=cutoff)
        .into_par_iter()
        .map(|k| {
            let c = window.fourier(k as f64 / nf).unwrap_or(0.0);
            if c == 0.0 {
                return 0.0;
            }
            let t: Complex64 = (0..n).map(|i| unit(phases.mode_fraction(i, k))).sum();
            // S_{-k} = S_k for the real sums here.
            2.0 * c * (t.norm_sqr() - nf)
        })
        .collect();
    let total = zero + terms.iter().sum::<f64>();
    Ok(PairCorrEstimate {
        value: total / (nf * nf),
        n,
        window: window.to_string(),
        algorithm: Algorithm::Fourier,
        pairs: None,
    })
}

/// Fourier reconstruction with `cutoff >= 8N`.
pub fn r2_fourier(phases: &PhaseTable, window: &WindowFunction, cutoff: u64) -> Result<PairCorrEstimate> {
    if cutoff < 8 * phases.len() as u64 {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} below 8N = {}",
            8 * phases.len()
        )));
    }
    r2_fourier_truncated(phases, window, cutoff)
}

/// Rigorous bound on `|(1/N^2) sum_{|n| > cutoff} f^(n/N) S_n|` using only
/// `|S_n| <= N(N-1)`.
pub fn fourier_tail_bound(window: &WindowFunction, n: usize, cutoff: u64) -> Result<f64> {
    let nf = n as f64;
    let l = cutoff as f64;
    if l <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let pref = 2.0 * (nf - 1.0) / nf;
    match *window {
        WindowFunction::Triangle { half_width: s } => {
            // |f^(xi)| <= 1/(pi^2 s xi^2), sum_{k > L} N^2/k^2 < N^2/L
            let pi2 = std::f64::consts::PI.powi(2);
            Ok(pref * nf * nf / (pi2 * s * l))
        }
        WindowFunction::Gaussian { sigma } => {
            // sum_{k > L} g(k) <= int_L^inf g, erfc(z) <= exp(-z^2)/(z sqrt(pi))
            let c = 2.0 * std::f64::consts::PI.powi(2) * sigma * sigma / (nf * nf);
            let amp = sigma * std::f64::consts::TAU.sqrt();
            Ok(pref * amp * (-c * l * l).exp() / (2.0 * c * l))
        }
        WindowFunction::Indicator { .. } => Err(Error::NoTransform(window.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paircorr::r2_smooth;
    use crate::precision::{Alpha, SequenceTable, DEFAULT_GUARD};
    use crate::sequences::LacunarySequence;

    fn phases(spec: &str, alpha: &str, n: usize) -> PhaseTable {
        let seq = LacunarySequence::parse_spec(spec).unwrap();
        let table = SequenceTable::new(&seq, n, DEFAULT_GUARD).unwrap();
        PhaseTable::new(&table, &Alpha::parse(alpha).unwrap()).unwrap()
    }

    #[test]
    fn zero_mode() {
        let p = phases("geometric:3/2", "1.2345", 9);
        let s = weyl_sum(&p, 0).unwrap();
        assert!((s.value.re - 72.0).abs() < 1e-9);
    }

    #[test]
    fn integer_dilation_gives_trivial_phases() {
        let p = phases("geometric:2", "1/2", 5);
        let s = weyl_sum(&p, 1).unwrap();
        assert!((s.value.re - 20.0).abs() < 1e-9);
    }

    #[test]
    fn identity_with_pair_sum() {
        let p = phases("geometric:3/2", "1.2345", 20);
        for n in [-7i64, -1, 1, 2, 13, 200] {
            let a = weyl_sum(&p, n).unwrap().value;
            let b = weyl_sum_pairs(&p, n).unwrap().value;
            assert!((a - b).norm() < 1e-9, "n={n}");
            assert!(b.im.abs() < 1e-9);
            let c = weyl_sum_pairs(&p, -n).unwrap().value;
            assert!((c - b.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_mode_alone() {
        let p = phases("geometric:3/2", "1.2345", 16);
        let w = WindowFunction::triangle(1.0).unwrap();
        let r = r2_fourier_truncated(&p, &w, 0).unwrap();
        assert!((r.value - (1.0 - 1.0 / 16.0)).abs() < 1e-15);
        assert!(r2_fourier(&p, &w, 100).is_err());
        let ind = WindowFunction::indicator(1.0).unwrap();
        assert!(matches!(
            r2_fourier(&p, &ind, 200),
            Err(Error::NoTransform(_))
        ));
    }

    #[test]
    fn gaussian_matches_smooth() {
        let p = phases("geometric:3/2", "1.7", 64);
        let w = WindowFunction::gaussian(0.5).unwrap();
        let a = r2_fourier(&p, &w, 20 * 64).unwrap().value;
        let b = r2_smooth(&p.points(), &w).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
