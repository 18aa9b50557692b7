//! Desk-scale experiments: convergence of `R2` along growing `N`, variance
//! decay and power-law fits.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::paircorr::{Algorithm, TestFunction, WindowFunction};
use crate::precision::{Alpha, PhaseTable, SequenceTable, DEFAULT_GUARD};
use crate::sequences::LacunarySequence;
use crate::spectral::{stream, Statistic, WeightDensity};
use crate::stats::{mean, median, ols, quantile_sorted, std_error};

pub const FIT_RESAMPLES: usize = 2000;

/// `floor(m^(2/delta))` for `m = 1..=m_max`, sorted, without duplicates.
pub fn subsequence_grid(delta: f64, m_max: u64) -> Result<Vec<u64>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if m_max < 1 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    let p = 2.0 / delta;
    let mut out = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let v = (m as f64).powf(p);
        if !v.is_finite() || v >= 9.0e15 {
            return Err(Error::budget(format!("N_{m} = {m}^{p} is too large")));
        }
        // Values within rounding of an integer are that integer.
        let r = v.round();
        let n = if (v - r).abs() <= 1e-9 * r.max(1.0) { r } else { v.floor() };
        out.push(n as u64);
    }
    out.dedup();
    Ok(out)
}

/// Where points come from.
#[derive(Clone, Debug)]
pub enum Points {
    /// `{alpha a(x)}`.
    Dilated(LacunarySequence),
    /// Independent uniform points, ignoring `alpha`.
    IidUniform,
}

#[derive(Clone, Debug)]
pub enum AlphaSource {
    Fixed(Alpha),
    Uniform { lo: f64, hi: f64 },
    Rho(WeightDensity),
}

impl AlphaSource {
    fn draw(&self, rng: &mut impl Rng) -> Result<Alpha> {
        match self {
            AlphaSource::Fixed(a) => Ok(a.clone()),
            AlphaSource::Uniform { lo, hi } => Alpha::from_f64(rng.random_range(*lo..*hi)),
            AlphaSource::Rho(rho) => Alpha::from_f64(rho.sample(rng)),
        }
    }
}

impl fmt::Display for AlphaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSource::Fixed(a) => write!(f, "fixed {a}"),
            AlphaSource::Uniform { lo, hi } => write!(f, "uniform [{lo}, {hi}]"),
            AlphaSource::Rho(rho) => write!(f, "{rho:?}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub points: Points,
    pub window: WindowFunction,
    /// Counting algorithm for indicator windows.
    pub algorithm: Algorithm,
    pub grid: Vec<usize>,
    pub alpha: AlphaSource,
    pub samples: usize,
    pub seed: u64,
    pub guard: u32,
}

impl ExperimentPlan {
    pub fn new(
        points: Points,
        window: WindowFunction,
        grid: Vec<usize>,
        alpha: AlphaSource,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let plan = ExperimentPlan {
            points,
            window,
            algorithm: Algorithm::Sorted,
            grid,
            alpha,
            samples,
            seed,
            guard: DEFAULT_GUARD,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Grid `floor(m^(2/delta))`, `m <= m_max`, keeping `N >= 2`.
    pub fn subsequence(
        points: Points,
        window: WindowFunction,
        delta: f64,
        m_max: u64,
        alpha: AlphaSource,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let grid = subsequence_grid(delta, m_max)?
            .into_iter()
            .filter(|&n| n >= 2)
            .map(|n| n as usize)
            .collect();
        Self::new(points, window, grid, alpha, samples, seed)
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Result<Self> {
        self.algorithm = algorithm;
        self.validate()?;
        Ok(self)
    }

    pub fn with_guard(mut self, guard: u32) -> Self {
        self.guard = guard;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("empty N grid"));
        }
        if self.grid[0] < 2 || self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("N grid must be strictly increasing and start at N >= 2"));
        }
        if self.samples == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        if let AlphaSource::Uniform { lo, hi } = self.alpha {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(format!("bad alpha range [{lo}, {hi}]")));
            }
        }
        self.statistic()?;
        Ok(())
    }

    fn statistic(&self) -> Result<Statistic> {
        match (self.window, self.algorithm) {
            (WindowFunction::Indicator { width }, Algorithm::Direct | Algorithm::Sorted) => {
                Ok(Statistic::Window {
                    width,
                    algorithm: self.algorithm,
                })
            }
            (w, Algorithm::Smooth) => Ok(Statistic::smooth(w)),
            (w, Algorithm::Direct | Algorithm::Sorted) if w.has_transform() => {
                Ok(Statistic::smooth(w))
            }
            (w, a) => Err(Error::invalid(format!("{a} is not available for scans of {w}"))),
        }
    }

    /// Phases of the largest `N` for sample `index`, with the dilation used.
    fn phases(&self, table: Option<&SequenceTable>, index: u64) -> Result<(f64, PhaseTable)> {
        let mut rng = stream(self.seed, index);
        let n = *self.grid.last().unwrap();
        match (&self.points, table) {
            (Points::Dilated(_), Some(table)) => {
                let alpha = self.alpha.draw(&mut rng)?;
                Ok((alpha.to_f64(), PhaseTable::new(table, &alpha)?))
            }
            _ => Ok((
                f64::NAN,
                PhaseTable::from_fractions((0..n).map(|_| rng.random::<u128>()).collect(), 128),
            )),
        }
    }

    /// Evaluates the statistic on every prefix in the grid for every sample;
    /// `out[i][k]` is sample `i` at `grid[k]`.
    fn evaluate(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let statistic = self.statistic()?;
        let n_max = *self.grid.last().unwrap();
        let table = match &self.points {
            Points::Dilated(seq) => Some(SequenceTable::new(seq, n_max, self.guard)?),
            Points::IidUniform => None,
        };
        let per_sample: Vec<(f64, Vec<f64>)> = (0..self.samples as u64)
            .into_par_iter()
            .map(|i| {
                let (alpha, phases) = self.phases(table.as_ref(), i)?;
                let values = self
                    .grid
                    .iter()
                    .map(|&n| statistic.evaluate(&phases.prefix(n)?))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((alpha, values))
            })
            .collect::<Result<_>>()?;
        Ok(per_sample.into_iter().unzip())
    }

    pub fn target(&self) -> f64 {
        self.window.integral()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub sample: usize,
    pub alpha: f64,
    pub value: f64,
    pub abs_dev: f64,
}

/// One grid point of a series: a summary value and the per-sample
/// contributions it averages.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
    pub median: f64,
    #[serde(skip)]
    pub contributions: Vec<f64>,
}

impl SeriesPoint {
    pub fn from_contributions(n: usize, contributions: Vec<f64>) -> Self {
        SeriesPoint {
            n,
            value: mean(&contributions),
            stderr: std_error(&contributions),
            median: median(&contributions),
            contributions,
        }
    }

    /// A point with a known value and nothing to resample.
    pub fn exact(n: usize, value: f64) -> Self {
        SeriesPoint {
            n,
            value,
            stderr: 0.0,
            median: value,
            contributions: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesReport {
    pub seed: u64,
    pub target: f64,
    pub rows: Vec<ScanRow>,
    pub points: Vec<SeriesPoint>,
    /// Contributions are paired across points by sample index.
    pub paired: bool,
    pub fit: Option<DecayFit>,
}

/// `R2` for every sample and grid point; points summarise `|R2 - int f|`.
pub fn convergence_scan(plan: &ExperimentPlan) -> Result<SeriesReport> {
    let (alphas, values) = plan.evaluate()?;
    let target = plan.target();
    let mut rows = Vec::with_capacity(plan.samples * plan.grid.len());
    for (k, &n) in plan.grid.iter().enumerate() {
        for (i, v) in values.iter().enumerate() {
            rows.push(ScanRow {
                n,
                sample: i,
                alpha: alphas[i],
                value: v[k],
                abs_dev: (v[k] - target).abs(),
            });
        }
    }
    let points = series_points(plan, &values, |v| (v - target).abs());
    finish(plan.seed, target, rows, points)
}

/// `<|R2 - int f|^2>` along the grid, one point per `N`.
pub fn variance_scan(plan: &ExperimentPlan) -> Result<SeriesReport> {
    let (alphas, values) = plan.evaluate()?;
    let target = plan.target();
    let mut rows = Vec::new();
    for (k, &n) in plan.grid.iter().enumerate() {
        for (i, v) in values.iter().enumerate() {
            rows.push(ScanRow {
                n,
                sample: i,
                alpha: alphas[i],
                value: v[k],
                abs_dev: (v[k] - target).abs(),
            });
        }
    }
    let points = series_points(plan, &values, |v| (v - target) * (v - target));
    finish(plan.seed, target, rows, points)
}

fn series_points(plan: &ExperimentPlan, values: &[Vec<f64>], f: impl Fn(f64) -> f64) -> Vec<SeriesPoint> {
    plan.grid
        .iter()
        .enumerate()
        .map(|(k, &n)| SeriesPoint::from_contributions(n, values.iter().map(|v| f(v[k])).collect()))
        .collect()
}

fn finish(seed: u64, target: f64, rows: Vec<ScanRow>, points: Vec<SeriesPoint>) -> Result<SeriesReport> {
    let mut report = SeriesReport {
        seed,
        target,
        rows,
        points,
        paired: true,
        fit: None,
    };
    if report.points.len() >= 3 {
        report.fit = decay_fit(&report, FIT_RESAMPLES, seed).ok();
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub resamples: usize,
    /// Grid points left out because their value is not positive.
    pub dropped: Vec<usize>,
}

impl DecayFit {
    /// The whole confidence interval lies below zero.
    pub fn decays(&self) -> bool {
        self.ci_hi < 0.0
    }
}

/// Least squares of `log value` on `log N` with a 95% bootstrap interval for
/// the slope. Paired series resample sample indices jointly.
pub fn decay_fit(series: &SeriesReport, resamples: usize, seed: u64) -> Result<DecayFit> {
    let (kept, dropped): (Vec<&SeriesPoint>, Vec<&SeriesPoint>) =
        series.points.iter().partition(|p| p.value > 0.0 && p.value.is_finite());
    if kept.len() < 3 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 3 positive points, got {}",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.value.ln()).collect();
    let fit = ols(&xs, &ys)?;

    let lens: Vec<usize> = kept.iter().map(|p| p.contributions.len()).collect();
    let paired = series.paired && lens.iter().all(|&l| l == lens[0]);
    let mut slopes: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = stream(seed ^ 0x05EE_DF17, r);
            let shared: Vec<usize> = if paired && lens[0] > 0 {
                (0..lens[0]).map(|_| rng.random_range(0..lens[0])).collect()
            } else {
                Vec::new()
            };
            let mut ys = Vec::with_capacity(kept.len());
            for p in &kept {
                let c = &p.contributions;
                let v = if c.is_empty() {
                    p.value
                } else if paired {
                    shared.iter().map(|&i| c[i]).sum::<f64>() / c.len() as f64
                } else {
                    (0..c.len()).map(|_| c[rng.random_range(0..c.len())]).sum::<f64>() / c.len() as f64
                };
                if v <= 0.0 {
                    return None;
                }
                ys.push(v.ln());
            }
            ols(&xs, &ys).ok().map(|f| f.slope)
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let level = 0.95;
    let (ci_lo, ci_hi) = if slopes.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            quantile_sorted(&slopes, (1.0 - level) / 2.0),
            quantile_sorted(&slopes, (1.0 + level) / 2.0),
        )
    };
    Ok(DecayFit {
        slope: fit.slope,
        intercept: fit.intercept,
        ci_lo,
        ci_hi,
        level,
        resamples: slopes.len(),
        dropped: dropped.iter().map(|p| p.n).collect(),
    })
}

/// A series of known values, for fitting data produced elsewhere.
pub fn series_from_values(points: &[(usize, f64)]) -> SeriesReport {
    SeriesReport {
        seed: 0,
        target: f64::NAN,
        rows: Vec::new(),
        points: points.iter().map(|&(n, v)| SeriesPoint::exact(n, v)).collect(),
        paired: false,
        fit: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(subsequence_grid(2.0, 4).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(subsequence_grid(1.0, 4).unwrap(), vec![1, 4, 9, 16]);
        assert_eq!(subsequence_grid(0.5, 3).unwrap(), vec![1, 16, 81]);
        assert!(subsequence_grid(0.0, 3).is_err());
        assert!(subsequence_grid(1.0, 0).is_err());
    }

    #[test]
    fn grid_ratios_shrink() {
        let g = subsequence_grid(1.0, 40).unwrap();
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        assert!(ratios.iter().skip(3).all(|&r| r < 2.0));
        assert!(ratios.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fit_of_exact_power_law() {
        let s = series_from_values(&[(10, 10f64.powf(-0.5)), (100, 0.1), (1000, 1000f64.powf(-0.5))]);
        let f = decay_fit(&s, 100, 1).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.ci_lo + 0.5).abs() < 1e-12 && (f.ci_hi + 0.5).abs() < 1e-12);
        let s = series_from_values(&[(10, 3.0), (20, 3.0), (40, 3.0), (80, 0.0)]);
        let f = decay_fit(&s, 100, 1).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert_eq!(f.dropped, vec![80]);
    }

    #[test]
    fn scans_are_deterministic() {
        let seq = LacunarySequence::parse_spec("geometric:3/2").unwrap();
        let plan = ExperimentPlan::new(
            Points::Dilated(seq),
            WindowFunction::indicator(1.0).unwrap(),
            vec![16, 32, 64],
            AlphaSource::Uniform { lo: 1.0, hi: 2.0 },
            8,
            42,
        )
        .unwrap();
        let a = convergence_scan(&plan).unwrap();
        let b = convergence_scan(&plan).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.rows.len(), 24);
        assert!(a.fit.is_some());
    }

    #[test]
    fn rational_alpha_is_not_poissonian() {
        // {a(x)/3} for a(x) = 2^x alternates between 1/3 and 2/3.
        let seq = LacunarySequence::parse_spec("geometric:2").unwrap();
        let plan = ExperimentPlan::new(
            Points::Dilated(seq),
            WindowFunction::indicator(1.0).unwrap(),
            vec![64, 256, 1024],
            AlphaSource::Fixed(Alpha::parse("1/3").unwrap()),
            1,
            0,
        )
        .unwrap();
        let r = convergence_scan(&plan).unwrap();
        for p in &r.points {
            // Half the points coincide: R2 = (N/2 - 1) per point on average.
            assert!(p.value > 10.0, "N={} value={}", p.n, p.value);
        }
    }

    #[test]
    fn bad_plans_are_rejected() {
        let w = WindowFunction::indicator(1.0).unwrap();
        let a = AlphaSource::Uniform { lo: 1.0, hi: 2.0 };
        assert!(ExperimentPlan::new(Points::IidUniform, w, vec![8, 8], a.clone(), 1, 0).is_err());
        assert!(ExperimentPlan::new(Points::IidUniform, w, vec![8, 16], a.clone(), 0, 0).is_err());
        let bad = AlphaSource::Uniform { lo: 2.0, hi: 1.0 };
        assert!(ExperimentPlan::new(Points::IidUniform, w, vec![8, 16], bad, 1, 0).is_err());
        let plan = ExperimentPlan::new(Points::IidUniform, w, vec![8, 16], a, 1, 0).unwrap();
        assert!(plan.with_algorithm(Algorithm::Fourier).is_err());
    }
}
