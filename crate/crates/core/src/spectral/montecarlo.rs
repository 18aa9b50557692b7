//! Monte Carlo moments of pair correlation statistics over random dilations.
//!
//! Sample `i` draws from its own ChaCha stream `(seed, i)`, so results do not
//! depend on how samples are scheduled across threads.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paircorr::{count_pairs, r2_smooth, Algorithm, TestFunction, WindowFunction};
use crate::precision::{Alpha, PhaseTable, SequenceTable};
use crate::spectral::density::WeightDensity;
use crate::spectral::weyl::r2_fourier_truncated;
use crate::stats::{bootstrap_ci, mean, sample_variance, std_error};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// The random stream of sample `index`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Dilation for sample `index`, distributed with density `rho`.
pub fn sample_alpha(rho: &WeightDensity, seed: u64, index: u64) -> f64 {
    rho.sample(&mut stream(seed, index))
}

/// Where the points of one sample come from.
#[derive(Clone, Debug)]
pub enum PointSource {
    /// `{alpha a(x)}` for a random `alpha`.
    Dilation(Arc<SequenceTable>),
    /// `N` independent uniform points (the Poisson model).
    IidUniform { n: usize },
}

impl PointSource {
    pub fn dilation(table: SequenceTable) -> Self {
        PointSource::Dilation(Arc::new(table))
    }

    pub fn len(&self) -> usize {
        match self {
            PointSource::Dilation(t) => t.len(),
            PointSource::IidUniform { n } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points for one sample; the dilation is `NaN` for iid points.
    pub fn draw<R: Rng + ?Sized>(&self, rho: &WeightDensity, rng: &mut R) -> Result<(f64, PhaseTable)> {
        match self {
            PointSource::Dilation(table) => {
                let a = rho.sample(rng);
                let phases = PhaseTable::new(table, &Alpha::from_f64(a)?)?;
                Ok((a, phases))
            }
            PointSource::IidUniform { n } => {
                let fracs = (0..*n).map(|_| rng.random::<u128>()).collect();
                Ok((f64::NAN, PhaseTable::from_fractions(fracs, 128)))
            }
        }
    }

    /// Points for a given dilation (iid sources ignore it and draw from `rng`).
    pub fn at_alpha<R: Rng + ?Sized>(&self, alpha: &Alpha, rng: &mut R) -> Result<PhaseTable> {
        match self {
            PointSource::Dilation(table) => PhaseTable::new(table, alpha),
            PointSource::IidUniform { n } => Ok(PhaseTable::from_fractions(
                (0..*n).map(|_| rng.random::<u128>()).collect(),
                128,
            )),
        }
    }
}

/// A pair correlation statistic evaluated on one point set.
#[derive(Clone)]
pub enum Statistic {
    /// `R2(I_s, N)` by window counting.
    Window { width: f64, algorithm: Algorithm },
    /// `R2(f, N)` through the periodised test function.
    Smooth(Arc<dyn TestFunction>),
    /// Fourier reconstruction truncated at `|n| <= cutoff`.
    Fourier { window: WindowFunction, cutoff: u64 },
}

impl Statistic {
    pub fn smooth(window: WindowFunction) -> Self {
        Statistic::Smooth(Arc::new(window))
    }

    pub fn evaluate(&self, phases: &PhaseTable) -> Result<f64> {
        let n = phases.len();
        match self {
            Statistic::Window { width, algorithm } => {
                let h = width / (2.0 * n as f64);
                if h > 0.5 {
                    return Err(Error::invalid("window wider than the circle"));
                }
                Ok(count_pairs(&phases.points(), h, *algorithm)? as f64 / n as f64)
            }
            Statistic::Smooth(f) => Ok(r2_smooth(&phases.points(), f.as_ref())?.value),
            Statistic::Fourier { window, cutoff } => {
                Ok(r2_fourier_truncated(phases, window, *cutoff)?.value)
            }
        }
    }

    /// `int f`, the Poissonian limit.
    pub fn integral(&self) -> f64 {
        match self {
            Statistic::Window { width, .. } => *width,
            Statistic::Smooth(f) => f.integral(),
            Statistic::Fourier { window, .. } => window.integral(),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Window { width, algorithm } => write!(f, "indicator:{width} ({algorithm})"),
            Statistic::Smooth(t) => f.write_str(&t.label()),
            Statistic::Fourier { window, cutoff } => write!(f, "{window} (fourier, |n|<={cutoff})"),
        }
    }
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub index: u64,
    pub alpha: f64,
    pub value: f64,
}

/// Evaluates `statistic` on `samples` independent draws.
pub fn sample_statistic(
    source: &PointSource,
    statistic: &Statistic,
    rho: &WeightDensity,
    samples: usize,
    seed: u64,
) -> Result<Vec<Sample>> {
    (0..samples as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = stream(seed, index);
            let (alpha, phases) = source.draw(rho, &mut rng)?;
            Ok(Sample {
                index,
                alpha,
                value: statistic.evaluate(&phases)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl MomentEstimate {
    /// Mean of `values` with its standard error and a bootstrap interval.
    pub fn of_mean(values: &[f64], seed: u64) -> Self {
        let (ci_lo, ci_hi) = bootstrap_ci(values, mean, BOOTSTRAP_RESAMPLES, 0.95, seed);
        MomentEstimate {
            mean: mean(values),
            variance: sample_variance(values),
            stderr: std_error(values),
            samples: values.len(),
            seed,
            ci_lo,
            ci_hi,
        }
    }

    /// Mean square deviation of `values` about `center`. `stderr` and the
    /// bootstrap interval refer to that mean square.
    pub fn about(values: &[f64], center: f64, seed: u64) -> Self {
        let sq: Vec<f64> = values.iter().map(|v| (v - center) * (v - center)).collect();
        let (ci_lo, ci_hi) = bootstrap_ci(&sq, mean, BOOTSTRAP_RESAMPLES, 0.95, seed);
        MomentEstimate {
            mean: mean(values),
            variance: mean(&sq),
            stderr: std_error(&sq),
            samples: values.len(),
            seed,
            ci_lo,
            ci_hi,
        }
    }
}

/// `<R2>` over `alpha ~ rho`.
pub fn expectation_mc(
    source: &PointSource,
    statistic: &Statistic,
    rho: &WeightDensity,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples < 30 {
        return Err(Error::invalid("expectation_mc needs at least 30 samples"));
    }
    let values: Vec<f64> = sample_statistic(source, statistic, rho, samples, seed)?
        .into_iter()
        .map(|s| s.value)
        .collect();
    Ok(MomentEstimate::of_mean(&values, seed))
}

/// `<|R2 - int f|^2>` over `alpha ~ rho`.
pub fn variance_mc(
    source: &PointSource,
    statistic: &Statistic,
    rho: &WeightDensity,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if samples < 100 {
        return Err(Error::invalid("variance_mc needs at least 100 samples"));
    }
    let values: Vec<f64> = sample_statistic(source, statistic, rho, samples, seed)?
        .into_iter()
        .map(|s| s.value)
        .collect();
    Ok(MomentEstimate::about(&values, statistic.integral(), seed))
}
