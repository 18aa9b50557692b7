//! Command-line front end. `run` returns the process exit status:
//! 0 success, 1 failed check or counter mismatch, 2 invalid input,
//! 3 budget or precision failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::diophantine::{
    bound_report, count_condition_a, count_condition_b, CountMode, CountParams, CountReport,
};
use crate::error::{Error, Result};
use crate::exact::parse_rational;
use crate::experiments::{convergence_scan, subsequence_grid, AlphaSource, ExperimentPlan, Points};
use crate::paircorr::{r2_smooth, r2_window, Algorithm, WindowFunction};
use crate::precision::{Alpha, PhaseTable, SequenceTable, DEFAULT_GUARD};
use crate::sequences::LacunarySequence;
use crate::spectral::{expectation_mc, r2_fourier, variance_mc, PointSource, Statistic, WeightDensity};

pub const THREADS_ENV: &str = "PAIRCORR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "paircorr", version, about = "Pair correlation of dilated lacunary sequences")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub out: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// R2 of one dilation.
    Paircorr(PaircorrArgs),
    /// Monte Carlo mean of R2 over alpha ~ rho.
    Expect(MomentArgs),
    /// Monte Carlo mean square deviation of R2 from its limit.
    Variance(MomentArgs),
    /// Solutions of n |a(x) - a(y)| < K.
    CountA(CountArgs),
    /// Six-tuples of the variance condition.
    CountB(CountArgs),
    /// R2 along a grid of N for sampled dilations.
    Convergence(ConvergenceArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    /// geometric:<ratio>, exp, custom:<path>, or iid for uniform points.
    #[arg(long, default_value = "geometric:3/2")]
    pub seq: String,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    pub precision_guard: u32,
}

#[derive(Debug, Args)]
pub struct PaircorrArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    /// Dilation, as a decimal or p/q.
    #[arg(long)]
    pub alpha: String,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, default_value = "indicator:1.0")]
    pub window: String,
    /// direct, sorted, smooth or fourier.
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Fourier cutoff (default 20N).
    #[arg(long)]
    pub cutoff: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, default_value = "triangle:1.0")]
    pub window: String,
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long)]
    pub cutoff: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Support lo,hi of the bump density.
    #[arg(long, default_value = "1,2")]
    pub rho: String,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long, default_value = "geometric:2")]
    pub seq: String,
    #[arg(long = "N", required_unless_present = "grid")]
    pub n: Option<usize>,
    /// Comma-separated list of N.
    #[arg(long, conflicts_with = "n")]
    pub grid: Option<String>,
    #[arg(long, default_value = "0.2")]
    pub epsilon: String,
    /// oracle, fast, windowed or both (oracle and fast).
    #[arg(long, default_value = "fast")]
    pub mode: String,
    /// Report the fitted exponent against the trivial one minus this.
    #[arg(long)]
    pub delta_ref: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    #[arg(long, default_value = "indicator:1.0")]
    pub window: String,
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long, requires = "m_max", conflicts_with = "grid")]
    pub delta: Option<f64>,
    #[arg(long)]
    pub m_max: Option<u64>,
    #[arg(long, required_unless_present = "delta")]
    pub grid: Option<String>,
    /// Uniform dilations in lo,hi.
    #[arg(long, default_value = "1,2", conflicts_with = "alpha")]
    pub alpha_range: String,
    /// One fixed dilation instead of a range.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match execute(&config) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_budget() {
                3
            } else {
                2
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool configured earlier in the process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(config: &RunConfig) -> Result<i32> {
    let out = &config.output;
    match &config.command {
        Command::Paircorr(a) => emit(out, &[paircorr(a)?]).map(|_| 0),
        Command::Expect(a) => emit(out, &[moment(a, false)?]).map(|_| 0),
        Command::Variance(a) => emit(out, &[moment(a, true)?]).map(|_| 0),
        Command::CountA(a) => count(out, a, false),
        Command::CountB(a) => count(out, a, true),
        Command::Convergence(a) => emit(out, &convergence(a)?).map(|_| 0),
        Command::Selftest => {
            let rows = selftest();
            emit(out, &rows)?;
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn emit<T: Serialize>(args: &OutputArgs, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match &args.out_file {
        Some(path) => Box::new(File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?),
        None => Box::new(io::stdout().lock()),
    };
    let io_err = |e: io::Error| Error::Io {
        path: args
            .out_file
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<stdout>".into()),
        source: e,
    };
    match args.out {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for r in rows {
                w.serialize(r).map_err(|e| io_err(e.into()))?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, rows).map_err(|e| io_err(e.into()))?;
            writeln!(sink).map_err(io_err)?;
        }
    }
    Ok(())
}

enum SeqChoice {
    Lacunary(LacunarySequence),
    Iid,
}

fn parse_seq(spec: &str) -> Result<SeqChoice> {
    if spec.trim() == "iid" {
        Ok(SeqChoice::Iid)
    } else {
        LacunarySequence::parse_spec(spec).map(SeqChoice::Lacunary)
    }
}

fn parse_pair(s: &str, what: &'static str) -> Result<(f64, f64)> {
    let fail = || Error::Parse {
        what,
        input: s.to_string(),
        reason: "expected lo,hi".into(),
    };
    let (a, b) = s.split_once(',').ok_or_else(fail)?;
    let lo: f64 = a.trim().parse().map_err(|_| fail())?;
    let hi: f64 = b.trim().parse().map_err(|_| fail())?;
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| Error::Parse {
                what: "N grid",
                input: s.to_string(),
                reason: format!("{t:?} is not a count"),
            })
        })
        .collect()
}

fn default_algorithm(window: &WindowFunction) -> Algorithm {
    if window.has_transform() {
        Algorithm::Smooth
    } else {
        Algorithm::Sorted
    }
}

fn statistic(window: WindowFunction, algorithm: Algorithm, cutoff: u64) -> Result<Statistic> {
    match (window, algorithm) {
        (WindowFunction::Indicator { width }, Algorithm::Direct | Algorithm::Sorted) => {
            Ok(Statistic::Window { width, algorithm })
        }
        (w, Algorithm::Smooth) => Ok(Statistic::smooth(w)),
        (w, Algorithm::Fourier) if w.has_transform() => Ok(Statistic::Fourier { window: w, cutoff }),
        (w, a) => Err(Error::invalid(format!("algorithm {a} does not apply to {w}"))),
    }
}

#[derive(Debug, Serialize)]
struct PaircorrRow {
    #[serde(rename = "N")]
    n: usize,
    alpha: String,
    window: String,
    algorithm: Algorithm,
    value: f64,
}

fn paircorr(a: &PaircorrArgs) -> Result<PaircorrRow> {
    let window: WindowFunction = a.window.parse()?;
    let algorithm = match &a.algorithm {
        Some(s) => s.parse()?,
        None => default_algorithm(&window),
    };
    let alpha = Alpha::parse(&a.alpha)?;
    let SeqChoice::Lacunary(seq) = parse_seq(&a.seq.seq)? else {
        return Err(Error::invalid("paircorr needs a lacunary sequence, not iid"));
    };
    let table = SequenceTable::new(&seq, a.n, a.seq.precision_guard)?;
    let phases = PhaseTable::new(&table, &alpha)?;
    let est = match (window, algorithm) {
        (WindowFunction::Indicator { width }, Algorithm::Direct | Algorithm::Sorted) => {
            r2_window(&phases.points(), width, algorithm)?
        }
        (w, Algorithm::Smooth) => r2_smooth(&phases.points(), &w)?,
        (w, Algorithm::Fourier) => r2_fourier(&phases, &w, a.cutoff.unwrap_or(20 * a.n as u64))?,
        (w, alg) => return Err(Error::invalid(format!("algorithm {alg} does not apply to {w}"))),
    };
    Ok(PaircorrRow {
        n: a.n,
        alpha: a.alpha.trim().to_string(),
        window: window.to_string(),
        algorithm,
        value: est.value,
    })
}

#[derive(Debug, Serialize)]
struct MomentRow {
    #[serde(rename = "N")]
    n: usize,
    window: String,
    samples: usize,
    seed: u64,
    mean: f64,
    stderr: f64,
    variance: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn moment(a: &MomentArgs, variance: bool) -> Result<MomentRow> {
    let window: WindowFunction = a.window.parse()?;
    let algorithm = match &a.algorithm {
        Some(s) => s.parse()?,
        None => default_algorithm(&window),
    };
    let stat = statistic(window, algorithm, a.cutoff.unwrap_or(20 * a.n as u64))?;
    let (lo, hi) = parse_pair(&a.rho, "rho support")?;
    let rho = WeightDensity::new(lo, hi)?;
    let source = match parse_seq(&a.seq.seq)? {
        SeqChoice::Lacunary(seq) => {
            PointSource::dilation(SequenceTable::new(&seq, a.n, a.seq.precision_guard)?)
        }
        SeqChoice::Iid => PointSource::IidUniform { n: a.n },
    };
    let est = if variance {
        variance_mc(&source, &stat, &rho, a.samples, a.seed)?
    } else {
        expectation_mc(&source, &stat, &rho, a.samples, a.seed)?
    };
    Ok(MomentRow {
        n: a.n,
        window: window.to_string(),
        samples: est.samples,
        seed: est.seed,
        mean: est.mean,
        stderr: est.stderr,
        variance: est.variance,
        ci_lo: est.ci_lo,
        ci_hi: est.ci_hi,
    })
}

#[derive(Debug, Serialize)]
struct CountRow {
    #[serde(rename = "N")]
    n: usize,
    epsilon: f64,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "K")]
    k: f64,
    mode: CountMode,
    count: u64,
    bound_ratio: f64,
    elapsed_ms: f64,
}

impl From<&CountReport> for CountRow {
    fn from(r: &CountReport) -> Self {
        CountRow {
            n: r.params.n,
            epsilon: r.params.epsilon_f64().unwrap_or(f64::NAN),
            m: r.params.m,
            k: r.params.k_f64(),
            mode: r.mode,
            count: r.count,
            bound_ratio: r.bound_ratio,
            elapsed_ms: r.elapsed_ms,
        }
    }
}

fn count(out: &OutputArgs, a: &CountArgs, condition_b: bool) -> Result<i32> {
    let seq = LacunarySequence::parse_spec(&a.seq)?;
    let eps = parse_rational(&a.epsilon)?;
    let grid = match (&a.grid, a.n) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(n)) => vec![n],
        (None, None) => return Err(Error::invalid("give --N or --grid")),
    };
    let modes = match a.mode.trim() {
        "both" => vec![CountMode::Oracle, CountMode::Fast],
        m => vec![m.parse()?],
    };
    let mut reports = Vec::new();
    let mut mismatch = false;
    for &n in &grid {
        let mut params = CountParams::from_epsilon(n, &eps)?;
        if let Some(d) = a.delta_ref {
            params = params.with_delta_ref(d);
        }
        let mut counts = Vec::new();
        for &mode in &modes {
            let r = if condition_b {
                count_condition_b(&seq, &params, mode)?
            } else {
                count_condition_a(&seq, &params, mode)?
            };
            counts.push(r.count);
            reports.push(r);
        }
        if counts.windows(2).any(|w| w[0] != w[1]) {
            eprintln!("error: counters disagree at N={n}: {counts:?}");
            mismatch = true;
        }
    }
    let rows: Vec<CountRow> = reports.iter().map(CountRow::from).collect();
    emit(out, &rows)?;
    if let Some(d) = a.delta_ref {
        let fast: Vec<CountReport> = reports
            .iter()
            .filter(|r| r.mode == *modes.last().unwrap())
            .cloned()
            .collect();
        match bound_report(&fast, d) {
            Ok(b) if b.empty => eprintln!("bound: all counts zero, trivially within N^{}", b.threshold),
            Ok(b) => eprintln!(
                "bound: slope {:.4} vs {} -> {}",
                b.slope().unwrap_or(f64::NAN),
                b.threshold,
                if b.pass { "pass" } else { "fail" }
            ),
            Err(e) => eprintln!("bound: {e}"),
        }
    }
    Ok(if mismatch { 1 } else { 0 })
}

#[derive(Debug, Serialize)]
struct ConvergenceRow {
    #[serde(rename = "N")]
    n: usize,
    alpha: f64,
    value: f64,
    abs_dev: f64,
}

fn convergence(a: &ConvergenceArgs) -> Result<Vec<ConvergenceRow>> {
    let window: WindowFunction = a.window.parse()?;
    let algorithm = match &a.algorithm {
        Some(s) => s.parse()?,
        None => default_algorithm(&window),
    };
    let points = match parse_seq(&a.seq.seq)? {
        SeqChoice::Lacunary(seq) => Points::Dilated(seq),
        SeqChoice::Iid => Points::IidUniform,
    };
    let alpha = match &a.alpha {
        Some(s) => AlphaSource::Fixed(Alpha::parse(s)?),
        None => {
            let (lo, hi) = parse_pair(&a.alpha_range, "alpha range")?;
            AlphaSource::Uniform { lo, hi }
        }
    };
    let grid: Vec<usize> = match (&a.grid, a.delta, a.m_max) {
        (Some(g), _, _) => parse_grid(g)?,
        (None, Some(d), Some(m)) => subsequence_grid(d, m)?
            .into_iter()
            .filter(|&n| n >= 2)
            .map(|n| n as usize)
            .collect(),
        _ => return Err(Error::invalid("give --grid or --delta with --m-max")),
    };
    let plan = ExperimentPlan::new(points, window, grid, alpha, a.samples, a.seed)?
        .with_algorithm(algorithm)?
        .with_guard(a.seq.precision_guard);
    let report = convergence_scan(&plan)?;
    Ok(report
        .rows
        .iter()
        .map(|r| ConvergenceRow {
            n: r.n,
            alpha: r.alpha,
            value: r.value,
            abs_dev: r.abs_dev,
        })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckRow {
    let (pass, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, e.to_string()),
    };
    CheckRow {
        check: name.to_string(),
        pass,
        detail,
    }
}

/// Oracle equivalences and hand-checked examples, sized to finish quickly.
pub fn selftest() -> Vec<CheckRow> {
    use crate::diophantine::{count_s_fast, count_s_oracle};
    use crate::paircorr::{count_pairs_direct, count_pairs_sorted};
    use crate::precision::{frac_dilate, CirclePoint};
    use crate::spectral::{stream, weyl_sum, weyl_sum_pairs};
    use rand::Rng;

    let two = || LacunarySequence::parse_spec("geometric:2");
    let mut rows = Vec::new();
    rows.push(check("count-b oracle equals fast", || {
        let mut detail = Vec::new();
        let mut ok = true;
        for spec in ["geometric:2", "geometric:3/2"] {
            let seq = LacunarySequence::parse_spec(spec)?;
            for n in [6usize, 8] {
                for eps in ["0.1", "0.2", "0.3"] {
                    let p = CountParams::from_epsilon(n, &parse_rational(eps)?)?;
                    let a = count_s_oracle(&seq, &p)?.count;
                    let b = count_s_fast(&seq, &p)?.count;
                    ok &= a == b;
                    if a != b {
                        detail.push(format!("{spec} N={n} eps={eps}: {a} vs {b}"));
                    }
                }
            }
        }
        Ok((ok, detail.join("; ")))
    }));
    rows.push(check("count-b hand value N=3", || {
        let p = CountParams::from_epsilon(3, &parse_rational("0.2")?)?;
        let c = count_s_fast(&two()?, &p)?.count;
        Ok((c == 120, format!("count {c}, expected 120")))
    }));
    rows.push(check("count-a oracle equals fast", || {
        let seq = LacunarySequence::parse_spec("geometric:3/2")?;
        let p = CountParams::from_epsilon(50, &parse_rational("0.3")?)?;
        let a = count_condition_a(&seq, &p, CountMode::Oracle)?.count;
        let b = count_condition_a(&seq, &p, CountMode::Fast)?.count;
        Ok((a == b, format!("{a} vs {b}")))
    }));
    rows.push(check("count-a hand values", || {
        let k2 = CountParams::explicit(4, 8, parse_rational("2")?)?;
        let k3 = CountParams::explicit(4, 8, parse_rational("3")?)?;
        let a = count_condition_a(&two()?, &k2, CountMode::Oracle)?.count;
        let b = count_condition_a(&two()?, &k3, CountMode::Oracle)?.count;
        Ok((a == 0 && b == 2, format!("K=2: {a}, K=3: {b}")))
    }));
    rows.push(check("sorted pair counts equal direct", || {
        let mut bad = 0;
        for i in 0..50u64 {
            let mut rng = stream(7, i);
            let n = rng.random_range(2..200usize);
            let pts: Vec<CirclePoint> = (0..n).map(|_| CirclePoint::wrap(rng.random())).collect();
            let h = rng.random_range(0.0..0.5);
            if count_pairs_direct(&pts, h) != count_pairs_sorted(&pts, h) {
                bad += 1;
            }
        }
        Ok((bad == 0, format!("{bad} of 50 instances differ")))
    }));
    rows.push(check("frac of 2^x / 3", || {
        let alpha = Alpha::parse("1/3")?;
        let seq = two()?;
        let mut worst: f64 = 0.0;
        for x in 1..=200u64 {
            let want = if x % 2 == 1 { 2.0 / 3.0 } else { 1.0 / 3.0 };
            worst = worst.max((frac_dilate(&alpha, &seq, x)?.theta() - want).abs());
        }
        Ok((worst < 1e-12, format!("max error {worst:e}")))
    }));
    rows.push(check("weyl sum equals pair sum", || {
        let seq = LacunarySequence::parse_spec("geometric:3/2")?;
        let table = SequenceTable::new(&seq, 64, DEFAULT_GUARD)?;
        let phases = PhaseTable::new(&table, &Alpha::parse("1.2345")?)?;
        let mut worst: f64 = 0.0;
        for k in 1..=20 {
            let a = weyl_sum(&phases, k)?.value.re;
            let b = weyl_sum_pairs(&phases, k)?.value.re;
            worst = worst.max((a - b).abs());
        }
        Ok((worst < 1e-9, format!("max difference {worst:e}")))
    }));
    rows.push(check("subsequence grid", || {
        let g = subsequence_grid(1.0, 4)?;
        Ok((g == [1, 4, 9, 16], format!("{g:?}")))
    }));
    rows
}
