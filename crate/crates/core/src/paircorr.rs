//! Pair correlation statistics of points on the circle.
//!
//! Window counts use ordered pairs and the strict test `dist < s/(2N)`.
//! The sorted counter only narrows the candidate set; every candidate goes
//! through the same [`circle_dist`] predicate as the direct oracle, so the two
//! return identical integers.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{is_positive, parse_rational, rational_to_f64};
use crate::precision::CirclePoint;

/// Extra width for candidate filtering; absorbs rounding in `t_j + 1 - t_i`.
const SLACK: f64 = 1e-9;

/// `min(|a - b|, 1 - |a - b|)`.
#[inline]
pub fn circle_dist(a: CirclePoint, b: CirclePoint) -> f64 {
    let d = (a.theta() - b.theta()).abs();
    d.min(1.0 - d)
}

/// A real test function for the smoothed statistic.
pub trait TestFunction: Send + Sync {
    fn eval(&self, x: f64) -> f64;

    /// `int f(x) dx`.
    fn integral(&self) -> f64;

    /// `f` vanishes (or is below `1e-17` relative) for `|x| >= radius`.
    fn support_radius(&self) -> f64;

    /// `f^(xi) = int f(x) e(-x xi) dx`, when known in closed form.
    fn fourier(&self, _xi: f64) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindowFunction {
    /// `1` for `|x| < width/2`.
    Indicator { width: f64 },
    /// `max(0, 1 - |x|/half_width)`.
    Triangle { half_width: f64 },
    /// `exp(-x^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let a = std::f64::consts::PI * t;
        a.sin() / a
    }
}

impl WindowFunction {
    pub fn indicator(width: f64) -> Result<Self> {
        check_scale("indicator width", width)?;
        Ok(WindowFunction::Indicator { width })
    }

    pub fn triangle(half_width: f64) -> Result<Self> {
        check_scale("triangle half-width", half_width)?;
        Ok(WindowFunction::Triangle { half_width })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        check_scale("gaussian sigma", sigma)?;
        Ok(WindowFunction::Gaussian { sigma })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            WindowFunction::Indicator { .. } => "indicator",
            WindowFunction::Triangle { .. } => "triangle",
            WindowFunction::Gaussian { .. } => "gaussian",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            WindowFunction::Indicator { width } => width,
            WindowFunction::Triangle { half_width } => half_width,
            WindowFunction::Gaussian { sigma } => sigma,
        }
    }

    /// Fourier transform or [`Error::NoTransform`].
    pub fn transform(&self, xi: f64) -> Result<f64> {
        self.fourier(xi).ok_or_else(|| {
            Error::NoTransform(format!(
                "{self}: its transform decays too slowly for truncation"
            ))
        })
    }

    pub fn has_transform(&self) -> bool {
        !matches!(self, WindowFunction::Indicator { .. })
    }
}

fn check_scale(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive, got {v}")))
    }
}

impl TestFunction for WindowFunction {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            WindowFunction::Indicator { width } => {
                if x.abs() < width / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
            WindowFunction::Triangle { half_width } => (1.0 - x.abs() / half_width).max(0.0),
            WindowFunction::Gaussian { sigma } => (-(x * x) / (2.0 * sigma * sigma)).exp(),
        }
    }

    fn integral(&self) -> f64 {
        match *self {
            WindowFunction::Indicator { width } => width,
            WindowFunction::Triangle { half_width } => half_width,
            WindowFunction::Gaussian { sigma } => sigma * (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    fn support_radius(&self) -> f64 {
        match *self {
            WindowFunction::Indicator { width } => width / 2.0,
            WindowFunction::Triangle { half_width } => half_width,
            // exp(-r^2/2) < 1e-17
            WindowFunction::Gaussian { sigma } => sigma * (2.0 * 17.0 * std::f64::consts::LN_10).sqrt(),
        }
    }

    fn fourier(&self, xi: f64) -> Option<f64> {
        match *self {
            WindowFunction::Indicator { .. } => None,
            WindowFunction::Triangle { half_width: s } => {
                let c = sinc(s * xi);
                Some(s * c * c)
            }
            WindowFunction::Gaussian { sigma } => {
                let pi = std::f64::consts::PI;
                Some(sigma * (2.0 * pi).sqrt() * (-2.0 * pi * pi * sigma * sigma * xi * xi).exp())
            }
        }
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for WindowFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind_name(), self.scale())
    }
}

impl FromStr for WindowFunction {
    type Err = Error;

    /// `indicator:<s>`, `triangle:<s>` or `gaussian:<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        let fail = |reason: &str| Error::Parse {
            what: "window",
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| fail("expected <kind>:<scale>"))?;
        let v: f64 = value.trim().parse().map_err(|_| fail("bad scale"))?;
        match kind {
            "indicator" => Self::indicator(v),
            "triangle" => Self::triangle(v),
            "gaussian" => Self::gaussian(v),
            _ => Err(fail("kind must be indicator, triangle or gaussian")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Direct,
    Sorted,
    Smooth,
    Fourier,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Direct => "direct",
            Algorithm::Sorted => "sorted",
            Algorithm::Smooth => "smooth",
            Algorithm::Fourier => "fourier",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(Algorithm::Direct),
            "sorted" => Ok(Algorithm::Sorted),
            "smooth" => Ok(Algorithm::Smooth),
            "fourier" => Ok(Algorithm::Fourier),
            other => Err(Error::Parse {
                what: "algorithm",
                input: other.to_string(),
                reason: "expected direct, sorted, smooth or fourier".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCorrEstimate {
    pub value: f64,
    pub n: usize,
    pub window: String,
    pub algorithm: Algorithm,
    /// Ordered pair count, for window statistics.
    pub pairs: Option<u64>,
}

/// Ordered pairs `m != n` with `circle_dist < h`, by full enumeration.
pub fn count_pairs_direct(points: &[CirclePoint], h: f64) -> u64 {
    let n = points.len();
    let unordered: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = points[i];
            points[i + 1..]
                .iter()
                .filter(|&&q| circle_dist(p, q) < h)
                .count() as u64
        })
        .sum();
    2 * unordered
}

/// Same count as [`count_pairs_direct`] from a sorted sweep.
pub fn count_pairs_sorted(points: &[CirclePoint], h: f64) -> u64 {
    let n = points.len();
    if n < 2 {
        return 0;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
    let t: Vec<f64> = sorted.iter().map(|p| p.theta()).collect();
    // Forward gap from position i to position i + k, wrapping once.
    let gap = |i: usize, k: usize| -> f64 {
        let j = i + k;
        if j < n {
            t[j] - t[i]
        } else {
            t[j - n] + 1.0 - t[i]
        }
    };
    let lim = h + SLACK;
    let mut total = 0u64;
    for i in 0..n {
        // Candidates form a prefix (short forward gaps) and a suffix (short
        // backward gaps) of the cyclic order starting at i.
        let mut k = 1;
        while k < n && gap(i, k) < lim {
            if circle_dist(sorted[i], sorted[(i + k) % n]) < h {
                total += 1;
            }
            k += 1;
        }
        let mut b = n - 1;
        while b >= k && 1.0 - gap(i, b) < lim {
            if circle_dist(sorted[i], sorted[(i + b) % n]) < h {
                total += 1;
            }
            b -= 1;
        }
    }
    total
}

pub fn count_pairs(points: &[CirclePoint], h: f64, algorithm: Algorithm) -> Result<u64> {
    match algorithm {
        Algorithm::Direct => Ok(count_pairs_direct(points, h)),
        Algorithm::Sorted => Ok(count_pairs_sorted(points, h)),
        other => Err(Error::invalid(format!(
            "{other} is not a window counting algorithm"
        ))),
    }
}

/// `R2(I_s, N) = (1/N) #{m != n : dist(theta_m, theta_n) < s/(2N)}`.
pub fn r2_window(points: &[CirclePoint], s: f64, algorithm: Algorithm) -> Result<PairCorrEstimate> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("pair correlation needs N >= 2"));
    }
    check_scale("window width", s)?;
    let h = s / (2.0 * n as f64);
    if h > 0.5 {
        return Err(Error::invalid(format!(
            "window half-width s/(2N) = {h} exceeds 1/2"
        )));
    }
    let pairs = count_pairs(points, h, algorithm)?;
    Ok(PairCorrEstimate {
        value: pairs as f64 / n as f64,
        n,
        window: WindowFunction::Indicator { width: s }.to_string(),
        algorithm,
        pairs: Some(pairs),
    })
}

/// `F_N(d) + F_N(-d)` summed as `sum_j f(u_j) + f(-u_j)`, `u_j = N (d + j)`,
/// so odd test functions cancel exactly.
fn pair_term(f: &dyn TestFunction, d: f64, nf: f64, radius: f64) -> f64 {
    let reach = radius / nf;
    let j_lo = (-d - reach).ceil() as i64;
    let j_hi = (-d + reach).floor() as i64;
    let mut acc = 0.0;
    for j in j_lo..=j_hi {
        let u = nf * (d + j as f64);
        acc += f.eval(u) + f.eval(-u);
    }
    acc
}

/// `R2(f, N) = (1/N) sum_{m != n} F_N(theta_n - theta_m)` with the
/// periodisation `F_N(x) = sum_j f(N(x + j))`.
pub fn r2_smooth(points: &[CirclePoint], f: &dyn TestFunction) -> Result<PairCorrEstimate> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("pair correlation needs N >= 2"));
    }
    let nf = n as f64;
    let radius = f.support_radius();
    let reach = radius / nf;
    let rows: Vec<f64> = if reach + SLACK < 0.5 {
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.theta().total_cmp(&b.theta()));
        let t: Vec<f64> = sorted.iter().map(|p| p.theta()).collect();
        let lim = reach + SLACK;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                let mut k = 1;
                while k < n {
                    let j = i + k;
                    let g = if j < n { t[j] - t[i] } else { t[j - n] + 1.0 - t[i] };
                    if g >= lim {
                        break;
                    }
                    acc += pair_term(f, t[j % n] - t[i], nf, radius);
                    k += 1;
                }
                acc
            })
            .collect()
    } else {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let ti = points[i].theta();
                points[i + 1..]
                    .iter()
                    .map(|q| pair_term(f, q.theta() - ti, nf, radius))
                    .sum()
            })
            .collect()
    };
    let total: f64 = rows.iter().sum();
    Ok(PairCorrEstimate {
        value: total / nf,
        n,
        window: f.label(),
        algorithm: Algorithm::Smooth,
        pairs: None,
    })
}

/// The three statistics of the monotonicity sandwich on nested prefixes.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    /// `(1 - eps) R2(I_{(1-eps)s}, N'')`.
    pub lower: f64,
    /// `R2(I_s, N)`.
    pub middle: f64,
    /// `R2(I_{s/(1-eps)}, N') / (1 - eps)`.
    pub upper: f64,
    /// Both inequalities, decided on the integer pair counts.
    pub holds: bool,
}

/// Evaluates `(1-eps) R2(I_{(1-eps)s}, N'') <= R2(I_s, N) <= R2(I_{s/(1-eps)}, N')/(1-eps)`
/// on the prefixes of `points` of lengths `n_lo < n < n_hi`.
pub fn monotonicity_sandwich(
    points: &[CirclePoint],
    n_lo: usize,
    n: usize,
    n_hi: usize,
    s: &BigRational,
    eps: &BigRational,
) -> Result<Sandwich> {
    let one = BigRational::one();
    if !is_positive(eps) || *eps >= one {
        return Err(Error::invalid("eps must lie in (0, 1)"));
    }
    if !is_positive(s) {
        return Err(Error::invalid("s must be positive"));
    }
    if n_hi > points.len() || n_lo < 2 {
        return Err(Error::invalid("prefix lengths out of range"));
    }
    let q = |k: usize| BigRational::from_integer(BigInt::from(k));
    let keep = &one - eps;
    // (1-eps) N' < N < N' and N'' < N < (1+eps) N''
    if !(&keep * q(n_hi) < q(n) && n < n_hi && n_lo < n && q(n) < (&one + eps) * q(n_lo)) {
        return Err(Error::invalid(format!(
            "prefix lengths {n_lo} < {n} < {n_hi} violate the eps = {eps} nesting"
        )));
    }
    let half = BigRational::new(1.into(), 2.into());
    let h_lo = &keep * s / (q(2) * q(n_lo));
    let h_mid = s / (q(2) * q(n));
    let h_hi = s / (&keep * q(2) * q(n_hi));
    if h_hi > half {
        return Err(Error::invalid("outer window exceeds half the circle"));
    }
    // Rounding is monotone, so the f64 thresholds keep the exact order.
    let c_lo = count_pairs_sorted(&points[..n_lo], rational_to_f64(&h_lo));
    let c_mid = count_pairs_sorted(&points[..n], rational_to_f64(&h_mid));
    let c_hi = count_pairs_sorted(&points[..n_hi], rational_to_f64(&h_hi));
    let (num, den) = (eps.numer().clone(), eps.denom().clone());
    let keep_num = &den - &num;
    let big = |k: u64| BigInt::from(k);
    let idx = |k: usize| BigInt::from(k as u64);
    // (1-eps) c''/N'' <= c/N  <=>  (den-num) c'' N <= den c N''
    let lower_ok = &keep_num * big(c_lo) * idx(n) <= &den * big(c_mid) * idx(n_lo);
    // c/N <= c'/((1-eps) N')  <=>  (den-num) c N' <= den c' N
    let upper_ok = &keep_num * big(c_mid) * idx(n_hi) <= &den * big(c_hi) * idx(n);
    let keep_f = rational_to_f64(&keep);
    Ok(Sandwich {
        lower: keep_f * c_lo as f64 / n_lo as f64,
        middle: c_mid as f64 / n as f64,
        upper: c_hi as f64 / (keep_f * n_hi as f64),
        holds: lower_ok && upper_ok && !keep_num.is_zero(),
    })
}

/// Parses an exact width such as `1`, `0.75` or `3/4`.
pub fn parse_width(s: &str) -> Result<BigRational> {
    let r = parse_rational(s)?;
    if !is_positive(&r) {
        return Err(Error::invalid(format!("width must be positive, got {s}")));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[f64]) -> Vec<CirclePoint> {
        v.iter().map(|&t| CirclePoint::new(t).unwrap()).collect()
    }

    fn equispaced(n: usize) -> Vec<CirclePoint> {
        (0..n).map(|k| CirclePoint::new(k as f64 / n as f64).unwrap()).collect()
    }

    struct Odd;

    impl TestFunction for Odd {
        fn eval(&self, x: f64) -> f64 {
            x * (-x * x).exp()
        }
        fn integral(&self) -> f64 {
            0.0
        }
        fn support_radius(&self) -> f64 {
            7.0
        }
        fn label(&self) -> String {
            "odd".into()
        }
    }

    #[test]
    fn distances() {
        let d = circle_dist(pts(&[0.9])[0], pts(&[0.1])[0]);
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(circle_dist(pts(&[0.5])[0], pts(&[0.5])[0]), 0.0);
        assert_eq!(circle_dist(pts(&[0.25])[0], pts(&[0.75])[0]), 0.5);
    }

    #[test]
    fn window_examples() {
        for alg in [Algorithm::Direct, Algorithm::Sorted] {
            assert_eq!(r2_window(&pts(&[0.0, 0.1]), 1.0, alg).unwrap().value, 1.0);
            assert_eq!(r2_window(&pts(&[0.0, 0.5]), 1.0, alg).unwrap().value, 0.0);
            assert_eq!(r2_window(&pts(&[0.0, 0.25, 0.5, 0.75]), 1.0, alg).unwrap().value, 0.0);
        }
        assert!(r2_window(&pts(&[0.0, 0.1]), 2.5, Algorithm::Direct).is_err());
        assert!(r2_window(&pts(&[0.0]), 1.0, Algorithm::Direct).is_err());
    }

    #[test]
    fn boundary_is_strict() {
        // Distance exactly 1/8 = s/(2N) with N = 4, s = 1.
        let p = pts(&[0.0, 0.125, 0.5, 0.75]);
        for alg in [Algorithm::Direct, Algorithm::Sorted] {
            assert_eq!(r2_window(&p, 1.0, alg).unwrap().pairs, Some(0));
        }
    }

    #[test]
    fn wide_windows_and_duplicates() {
        let p = pts(&[0.1, 0.1, 0.1, 0.6, 0.6]);
        for s in [0.5, 1.0, 3.0, 4.9, 5.0] {
            let h = s / 10.0;
            assert_eq!(count_pairs_direct(&p, h), count_pairs_sorted(&p, h), "s={s}");
        }
    }

    #[test]
    fn smooth_examples() {
        let p = pts(&[0.1, 0.33, 0.35, 0.9, 0.95]);
        assert_eq!(r2_smooth(&p, &Odd).unwrap().value, 0.0);
        let tri1 = WindowFunction::triangle(1.0).unwrap();
        for n in [4, 9, 16] {
            assert!(r2_smooth(&equispaced(n), &tri1).unwrap().value.abs() < 1e-12);
        }
        let tri3 = WindowFunction::triangle(3.0).unwrap();
        for n in [7, 8, 13, 64] {
            let v = r2_smooth(&equispaced(n), &tri3).unwrap().value;
            assert!((v - 2.0).abs() < 1e-12, "N={n}: {v}");
        }
    }

    #[test]
    fn smooth_indicator_matches_window_count() {
        let p = pts(&[0.01, 0.02, 0.3, 0.31, 0.55, 0.97, 0.99]);
        let ind = WindowFunction::indicator(1.0).unwrap();
        let a = r2_smooth(&p, &ind).unwrap().value;
        let b = r2_window(&p, 1.0, Algorithm::Direct).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn window_parsing() {
        let w: WindowFunction = "triangle:1.0".parse().unwrap();
        assert_eq!(w, WindowFunction::Triangle { half_width: 1.0 });
        assert_eq!(w.to_string(), "triangle:1");
        assert!("gaussian:-1".parse::<WindowFunction>().is_err());
        assert!("box:1".parse::<WindowFunction>().is_err());
        assert!(WindowFunction::indicator(1.0).unwrap().transform(0.3).is_err());
    }

    #[test]
    fn integrals() {
        let g = WindowFunction::gaussian(0.5).unwrap();
        assert!((g.integral() - 0.5 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert_eq!(g.fourier(0.0).unwrap(), g.integral());
        let t = WindowFunction::triangle(2.0).unwrap();
        assert_eq!(t.fourier(0.0).unwrap(), 2.0);
        assert!(t.fourier(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sandwich_rejects_bad_nesting() {
        let p = equispaced(50);
        let s = BigRational::one();
        let eps = BigRational::new(1.into(), 10.into());
        assert!(monotonicity_sandwich(&p, 20, 30, 40, &s, &eps).is_err());
        let r = monotonicity_sandwich(&p, 28, 30, 32, &s, &eps).unwrap();
        assert!(r.holds);
    }
}
