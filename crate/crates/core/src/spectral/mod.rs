//! Fourier-side machinery: Weyl sums, the weight density and Monte Carlo
//! moments over the dilation parameter.

pub mod density;
pub mod montecarlo;
pub mod variance;
pub mod weyl;

pub use density::WeightDensity;
pub use montecarlo::{
    expectation_mc, sample_alpha, sample_statistic, stream, variance_mc, MomentEstimate,
    PointSource, Sample, Statistic,
};
pub use variance::{variance_crosscheck, variance_fourier_tiny, TinyVariance, VarianceCrossCheck};
pub use weyl::{
    exponential_sum, fourier_tail_bound, r2_fourier, r2_fourier_truncated, weyl_sum,
    weyl_sum_pairs, WeylSum,
};
