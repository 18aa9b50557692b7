//! Smooth compactly supported weight `rho` on `[lo, hi]` and its transform.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quad::integrate;

/// Transform grid spacing and interpolation order for the profile `phi`.
const GRID_STEP: f64 = 1.0 / 16.0;
const INTERP_POINTS: usize = 12;
/// Beyond this frequency `|phi| < 1e-15` and the profile is treated as zero.
const PROFILE_CUTOFF: f64 = 160.0;

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// `int_{-1}^{1} bump`.
fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        integrate(bump, -1.0, 1.0, 1e-15)
            .expect("bump integral converges")
            .value
    })
}

/// `phi(eta) = (1/Z) int_{-1}^{1} bump(t) cos(2 pi eta t) dt`.
fn profile_by_quadrature(eta: f64) -> f64 {
    let w = std::f64::consts::TAU * eta;
    // The integrand is even; integrate over [0, 1].
    let r = integrate(|t| bump(t) * (w * t).cos(), 0.0, 1.0, 1e-14);
    let v = match r {
        Ok(q) => q.value,
        Err(_) => {
            // Split into unit oscillations when a single tolerance is out of reach.
            let pieces = (eta.abs().ceil() as usize).max(1) * 2;
            (0..pieces)
                .map(|k| {
                    let a = k as f64 / pieces as f64;
                    let b = (k + 1) as f64 / pieces as f64;
                    integrate(|t| bump(t) * (w * t).cos(), a, b, 1e-15)
                        .map(|q| q.value)
                        .unwrap_or_else(|_| gk_fixed(&|t| bump(t) * (w * t).cos(), a, b))
                })
                .sum()
        }
    };
    2.0 * v / bump_mass()
}

fn gk_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let steps = 64;
    let h = (b - a) / steps as f64;
    (0..steps)
        .map(|i| {
            integrate(f, a + i as f64 * h, a + (i + 1) as f64 * h, f64::INFINITY)
                .map(|q| q.value)
                .unwrap_or(0.0)
        })
        .sum()
}

fn profile_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let count = (PROFILE_CUTOFF / GRID_STEP) as usize + INTERP_POINTS + 1;
        (0..count)
            .map(|k| profile_by_quadrature(k as f64 * GRID_STEP))
            .collect()
    })
}

/// `phi(eta)` by Lagrange interpolation on the cached grid.
fn profile(eta: f64) -> f64 {
    let eta = eta.abs();
    if eta >= PROFILE_CUTOFF {
        return 0.0;
    }
    let table = profile_table();
    let pos = eta / GRID_STEP;
    let half = INTERP_POINTS / 2;
    let base = pos.floor() as isize - half as isize + 1;
    // Mirror across zero using evenness of phi.
    let node = |i: isize| -> f64 { table[i.unsigned_abs()] };
    let mut acc = 0.0;
    for i in 0..INTERP_POINTS as isize {
        let xi = (base + i) as f64;
        if pos == xi {
            return node(base + i);
        }
        let mut w = 1.0;
        for j in 0..INTERP_POINTS as isize {
            if j != i {
                let xj = (base + j) as f64;
                w *= (pos - xj) / (xi - xj);
            }
        }
        acc += w * node(base + i);
    }
    acc
}

/// `rho(alpha) = bump((alpha - mid)/half) / (half Z)` on `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightDensity {
    lo: f64,
    hi: f64,
}

impl WeightDensity {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("bad support [{lo}, {hi}]")));
        }
        if lo <= 0.0 {
            return Err(Error::invalid("dilations must be positive: need lo > 0"));
        }
        Ok(WeightDensity { lo, hi })
    }

    /// `lo,hi`.
    pub fn parse(s: &str) -> Result<Self> {
        let fail = || Error::Parse {
            what: "support interval",
            input: s.to_string(),
            reason: "expected lo,hi".into(),
        };
        let (a, b) = s.split_once(',').ok_or_else(fail)?;
        let lo: f64 = a.trim().parse().map_err(|_| fail())?;
        let hi: f64 = b.trim().parse().map_err(|_| fail())?;
        Self::new(lo, hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn half(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn pdf(&self, alpha: f64) -> f64 {
        bump((alpha - self.mid()) / self.half()) / (self.half() * bump_mass())
    }

    /// `int rho` by quadrature.
    pub fn total_mass(&self) -> f64 {
        integrate(|a| self.pdf(a), self.lo, self.hi, 1e-14)
            .map(|q| q.value)
            .unwrap_or(f64::NAN)
    }

    /// `rho^(xi) = int rho(alpha) e(-alpha xi) d alpha`.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        let amp = profile(self.half() * xi);
        if amp == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (s, c) = (std::f64::consts::TAU * self.mid() * xi).sin_cos();
        Complex64::new(amp * c, -amp * s)
    }

    /// `rho^` evaluated directly by quadrature (no table).
    pub fn fourier_by_quadrature(&self, xi: f64) -> Complex64 {
        let amp = profile_by_quadrature(self.half() * xi);
        let (s, c) = (std::f64::consts::TAU * self.mid() * xi).sin_cos();
        Complex64::new(amp * c, -amp * s)
    }

    /// `|rho^(xi)|` is treated as zero once `half * |xi|` passes this value.
    pub fn fourier_support(&self) -> f64 {
        PROFILE_CUTOFF / self.half()
    }

    /// Rejection sampling against the uniform envelope.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let peak = (-1f64).exp();
        loop {
            let t: f64 = rng.random_range(-1.0..1.0);
            let u: f64 = rng.random::<f64>() * peak;
            if t > -1.0 && u < bump(t) {
                return self.mid() + self.half() * t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalised() {
        let rho = WeightDensity::new(1.0, 2.0).unwrap();
        assert!((rho.total_mass() - 1.0).abs() < 1e-10);
        assert!((rho.fourier(0.0).re - 1.0).abs() < 1e-10);
        assert!(rho.fourier(0.0).im.abs() < 1e-15);
    }

    #[test]
    fn interpolation_matches_quadrature() {
        let rho = WeightDensity::new(1.0, 2.0).unwrap();
        for xi in [0.013, 0.5, 1.37, 3.3, 10.01, 47.9, 123.456, 301.0] {
            let a = rho.fourier(xi);
            let b = rho.fourier_by_quadrature(xi);
            assert!((a - b).norm() < 1e-11, "xi={xi}: {a} vs {b}");
        }
        assert_eq!(rho.fourier(1e4).norm(), 0.0);
    }

    #[test]
    fn samples_stay_in_support() {
        let rho = WeightDensity::new(1.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..10_000).map(|_| rho.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&a| a > 1.0 && a < 2.0));
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let ys: Vec<f64> = (0..10_000).map(|_| rho.sample(&mut rng2)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn rejects_bad_support() {
        assert!(WeightDensity::new(2.0, 1.0).is_err());
        assert!(WeightDensity::new(-1.0, 1.0).is_err());
        assert!(WeightDensity::parse("1,2").is_ok());
        assert!(WeightDensity::parse("1;2").is_err());
    }
}
