//! The `bondperc` command line.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use bondperc_core::lattice::{derive_seed, DEFAULT_ENUMERATION_CAP, MAX_ENUMERATION_BONDS};
use bondperc_core::{sample_config, BoxSpec, ClusterCounter, Probability, RngContract};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{invalid, LabError};
use crate::montecarlo::{clt_check, domain, estimate_moments_mn};
use crate::output::{emit, write_json, Format};
use crate::parallel::Workers;
use crate::scans::{estimate_kappa_prime, two_arm_decay_scan, KappaPrime, ScanRow};
use crate::theorem::{compare_to_theorem, default_radii, TheoremComparison};
use crate::verify::exact_verify;

#[derive(Parser, Debug)]
#[command(
    name = "bondperc",
    version,
    about = "Cluster-count experiments for bond percolation on the box [-n, n]^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one configuration and print its number of open clusters
    Count(CountArgs),
    /// Check the Russo and variance identities and the martingale structure
    /// by exact enumeration (JSON report)
    ExactVerify(ExactArgs),
    /// Mean, variance and variance density of the cluster count
    Variance(McArgs),
    /// Estimate kappa'(p) from growing boxes with a stopping rule
    KappaPrime(KappaArgs),
    /// Compare the variance density with the predicted limit
    Theorem(TheoremArgs),
    /// Kolmogorov-Smirnov check of the standardised cluster count
    Clt(CltArgs),
    /// Two-arm probabilities over a list of arm radii
    TwoArm(TwoArmArgs),
    /// The theorem comparison over a grid of p values
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormatArg {
    Csv,
    Json,
}

impl FormatArg {
    fn name(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug)]
struct BoxArgs {
    /// Lattice dimension d
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Box radius n of B(n) = [-n, n]^d
    #[arg(long, default_value_t = 16)]
    n: usize,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Master seed; every replicate stream derives from it
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: available cores); never changes the output
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    /// Bond probability
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Which replicate's configuration to sample
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    /// Largest bond count enumerated exhaustively
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: usize,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct KappaArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    /// Growing-box radii (default 4,8,...,128 for d <= 2, 4,...,32 above)
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<usize>>,
    /// Stopping rule: consecutive estimates closer than this
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct TheoremArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct CltArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 2000)]
    replicates: u64,
    /// Pass when the KS distance is below this
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct TwoArmArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    /// Arm-box radii, each at least 2
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    radii: Vec<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    geometry: BoxArgs,
    /// Grid lo:hi:step of p values
    #[arg(long = "p-grid", default_value = "0.1:0.9:0.1")]
    p_grid: String,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    #[command(flatten)]
    out: OutArgs,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 identity violation, 2 usage error,
/// 3 any other failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("run `bondperc help` for the grammar");
            }
            e.exit_code()
        }
    }
}

fn probability(p: f64) -> Result<Probability, LabError> {
    Probability::new(p).map_err(|_| invalid("p", format!("must lie in [0, 1], got {p}")))
}

fn box_spec(g: &BoxArgs) -> Result<BoxSpec, LabError> {
    if g.dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    if g.n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    Ok(BoxSpec::new(g.dim, g.n)?)
}

fn workers(w: Option<usize>) -> Result<Workers, LabError> {
    let count = w.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    Workers::new(count)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, LabError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn radii_flag(radii: &[usize]) -> String {
    radii.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// The flags that determine the output, in a fixed order; `--workers` and
/// `--out` are left out since they do not change it.
fn command_line(sub: &str, parts: &[(&str, String)], format: FormatArg) -> String {
    let mut s = format!("bondperc {sub}");
    for (flag, value) in parts {
        let _ = write!(s, " --{flag} {value}");
    }
    if format != FormatArg::Csv {
        let _ = write!(s, " --format {}", format.name());
    }
    s
}

fn execute(command: Command) -> Result<i32, LabError> {
    match command {
        Command::Count(a) => count(a),
        Command::ExactVerify(a) => exact(a),
        Command::Variance(a) => variance(a),
        Command::KappaPrime(a) => kappa(a),
        Command::Theorem(a) => theorem(a),
        Command::Clt(a) => clt(a),
        Command::TwoArm(a) => two_arm(a),
        Command::Sweep(a) => sweep(a),
    }
}

#[derive(Serialize)]
struct CountRow {
    d: usize,
    n: usize,
    p: f64,
    seed: u64,
    replicate: u64,
    clusters: usize,
    largest_cluster: u32,
}

fn count(a: CountArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    let p = probability(a.p)?;
    // single-threaded, but the flag is still validated
    workers(a.out.workers)?;
    let contract = RngContract::new(derive_seed(a.out.seed, domain::CLUSTER_COUNT), a.replicate);
    let labeling = ClusterCounter::new().labeling(&sample_config(&spec, p, contract));
    let row = CountRow {
        d: spec.dim(),
        n: spec.radius(),
        p: a.p,
        seed: a.out.seed,
        replicate: a.replicate,
        clusters: labeling.count,
        largest_cluster: labeling.sizes.iter().copied().max().unwrap_or(0),
    };
    if a.out.out.is_none() && a.out.format == FormatArg::Csv {
        println!("M_n = {}", row.clusters);
        return Ok(0);
    }
    let cmd = command_line(
        "count",
        &[
            ("dim", spec.dim().to_string()),
            ("n", spec.radius().to_string()),
            ("p", a.p.to_string()),
            ("replicate", a.replicate.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &[&row], &row)?;
    Ok(0)
}

fn exact(a: ExactArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    if a.cap > MAX_ENUMERATION_BONDS {
        return Err(invalid("cap", format!("at most {MAX_ENUMERATION_BONDS}")));
    }
    let w = workers(a.workers)?;
    let report = exact_verify(&spec, a.cap, &w)?;
    let cmd = format!(
        "bondperc exact-verify --dim {} --n {} --cap {}",
        spec.dim(),
        spec.radius(),
        a.cap
    );
    write_json(sink(&a.out)?, &cmd, &report)?;
    Ok(if report.all_hold { 0 } else { 1 })
}

#[derive(Serialize)]
struct VarianceRow {
    d: usize,
    n: usize,
    p: f64,
    #[serde(rename = "R")]
    replicates: u64,
    seed: u64,
    mean: f64,
    mean_stderr: f64,
    var: f64,
    var_stderr: f64,
    var_density: f64,
    var_density_stderr: f64,
}

fn variance(a: McArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    let p = probability(a.p)?;
    let w = workers(a.out.workers)?;
    let m = estimate_moments_mn(&spec, p, a.replicates, a.out.seed, &w)?;
    let density = m.variance.scaled(1.0 / spec.vertex_count() as f64);
    let row = VarianceRow {
        d: spec.dim(),
        n: spec.radius(),
        p: a.p,
        replicates: a.replicates,
        seed: a.out.seed,
        mean: m.mean.point,
        mean_stderr: m.mean.stderr,
        var: m.variance.point,
        var_stderr: m.variance.stderr,
        var_density: density.point,
        var_density_stderr: density.stderr,
    };
    let cmd = command_line(
        "variance",
        &[
            ("dim", spec.dim().to_string()),
            ("n", spec.radius().to_string()),
            ("p", a.p.to_string()),
            ("replicates", a.replicates.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &[&row], &m)?;
    Ok(0)
}

#[derive(Serialize)]
struct ScanCsvRow {
    d: usize,
    p: f64,
    m: usize,
    replicates: u64,
    estimate: f64,
    stderr: f64,
    seed: u64,
}

impl ScanCsvRow {
    fn new(r: &ScanRow, replicates: u64, seed: u64) -> Self {
        Self {
            d: r.d,
            p: r.p,
            m: r.m,
            replicates,
            estimate: r.estimate.point,
            stderr: r.estimate.stderr,
            seed,
        }
    }
}

#[derive(Serialize)]
struct KappaCsvRow {
    d: usize,
    p: f64,
    m: usize,
    replicates: u64,
    estimate: f64,
    stderr: f64,
    seed: u64,
    kappa_prime: f64,
    kappa_prime_stderr: f64,
    selected: bool,
}

fn kappa_rows(k: &KappaPrime, replicates: u64, seed: u64) -> Vec<KappaCsvRow> {
    k.rows
        .iter()
        .enumerate()
        .map(|(i, r)| KappaCsvRow {
            d: r.d,
            p: r.p,
            m: r.m,
            replicates,
            estimate: r.estimate.point,
            stderr: r.estimate.stderr,
            seed,
            kappa_prime: k.kappa_prime.point,
            kappa_prime_stderr: k.kappa_prime.stderr,
            selected: i == k.selected,
        })
        .collect()
}

fn check_dim(dim: usize) -> Result<(), LabError> {
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    Ok(())
}

fn kappa(a: KappaArgs) -> Result<i32, LabError> {
    check_dim(a.dim)?;
    let p = probability(a.p)?;
    let radii = a.radii.unwrap_or_else(|| default_radii(a.dim));
    let w = workers(a.out.workers)?;
    let k = estimate_kappa_prime(a.dim, p, &radii, a.replicates, a.out.seed, a.epsilon, &w)?;
    let cmd = command_line(
        "kappa-prime",
        &[
            ("dim", a.dim.to_string()),
            ("p", a.p.to_string()),
            ("replicates", a.replicates.to_string()),
            ("radii", radii_flag(&radii)),
            ("epsilon", a.epsilon.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    let rows = kappa_rows(&k, a.replicates, a.out.seed);
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &rows, &k)?;
    Ok(0)
}

#[derive(Serialize)]
struct TheoremRow {
    d: usize,
    n: usize,
    p: f64,
    #[serde(rename = "R")]
    replicates: u64,
    seed: u64,
    mean: f64,
    mean_stderr: f64,
    var: f64,
    var_stderr: f64,
    var_density: f64,
    predicted_limit: f64,
    gap_in_stderr: f64,
}

impl From<&TheoremComparison> for TheoremRow {
    fn from(c: &TheoremComparison) -> Self {
        Self {
            d: c.d,
            n: c.n,
            p: c.p,
            replicates: c.replicates,
            seed: c.seed,
            mean: c.moments.mean.point,
            mean_stderr: c.moments.mean.stderr,
            var: c.moments.variance.point,
            var_stderr: c.moments.variance.stderr,
            var_density: c.empirical_density.point,
            predicted_limit: c.predicted_limit,
            gap_in_stderr: c.gap_in_stderr,
        }
    }
}

fn theorem(a: TheoremArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    let p = probability(a.p)?;
    let radii = a.radii.unwrap_or_else(|| default_radii(spec.dim()));
    let w = workers(a.out.workers)?;
    let c = compare_to_theorem(&spec, p, a.replicates, a.out.seed, &radii, a.epsilon, &w)?;
    let cmd = command_line(
        "theorem",
        &[
            ("dim", spec.dim().to_string()),
            ("n", spec.radius().to_string()),
            ("p", a.p.to_string()),
            ("replicates", a.replicates.to_string()),
            ("radii", radii_flag(&radii)),
            ("epsilon", a.epsilon.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &[TheoremRow::from(&c)], &c)?;
    Ok(0)
}

#[derive(Serialize)]
struct CltRow {
    d: usize,
    n: usize,
    p: f64,
    #[serde(rename = "R")]
    replicates: u64,
    seed: u64,
    ks_distance: f64,
    threshold: f64,
    pass: bool,
}

fn clt(a: CltArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    let p = probability(a.p)?;
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return Err(invalid("threshold", "must lie in (0, 1]"));
    }
    let w = workers(a.out.workers)?;
    let r = clt_check(&spec, p, a.replicates, a.out.seed, a.threshold, &w)?;
    let row = CltRow {
        d: spec.dim(),
        n: spec.radius(),
        p: a.p,
        replicates: a.replicates,
        seed: a.out.seed,
        ks_distance: r.ks_distance,
        threshold: r.threshold,
        pass: r.pass,
    };
    let cmd = command_line(
        "clt",
        &[
            ("dim", spec.dim().to_string()),
            ("n", spec.radius().to_string()),
            ("p", a.p.to_string()),
            ("replicates", a.replicates.to_string()),
            ("threshold", a.threshold.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &[&row], &r)?;
    Ok(0)
}

fn two_arm(a: TwoArmArgs) -> Result<i32, LabError> {
    check_dim(a.dim)?;
    let p = probability(a.p)?;
    let w = workers(a.out.workers)?;
    let rows = two_arm_decay_scan(a.dim, p, &a.radii, a.replicates, a.out.seed, &w)?;
    let csv: Vec<ScanCsvRow> = rows
        .iter()
        .map(|r| ScanCsvRow::new(r, a.replicates, a.out.seed))
        .collect();
    let cmd = command_line(
        "two-arm",
        &[
            ("dim", a.dim.to_string()),
            ("p", a.p.to_string()),
            ("replicates", a.replicates.to_string()),
            ("radii", radii_flag(&a.radii)),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &csv, &rows)?;
    Ok(0)
}

/// `lo:hi:step` into the grid `lo, lo + step, ...` up to `hi` inclusive,
/// each value rounded to 12 decimals.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>, LabError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(invalid("p-grid", "expected lo:hi:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| invalid("p-grid", format!("{s:?} is not a number")))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(step > 0.0) || !(lo <= hi) || lo < 0.0 || hi > 1.0 {
        return Err(invalid("p-grid", "need 0 <= lo <= hi <= 1 and step > 0"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn sweep(a: SweepArgs) -> Result<i32, LabError> {
    let spec = box_spec(&a.geometry)?;
    let grid = parse_p_grid(&a.p_grid)?;
    let radii = a.radii.unwrap_or_else(|| default_radii(spec.dim()));
    let w = workers(a.out.workers)?;
    let mut comparisons = Vec::with_capacity(grid.len());
    for &p in &grid {
        comparisons.push(compare_to_theorem(
            &spec,
            probability(p)?,
            a.replicates,
            a.out.seed,
            &radii,
            a.epsilon,
            &w,
        )?);
    }
    let rows: Vec<TheoremRow> = comparisons.iter().map(TheoremRow::from).collect();
    let cmd = command_line(
        "sweep",
        &[
            ("dim", spec.dim().to_string()),
            ("n", spec.radius().to_string()),
            ("p-grid", a.p_grid.clone()),
            ("replicates", a.replicates.to_string()),
            ("radii", radii_flag(&radii)),
            ("epsilon", a.epsilon.to_string()),
            ("seed", a.out.seed.to_string()),
        ],
        a.out.format,
    );
    emit(sink(&a.out.out)?, a.out.format.into(), &cmd, &rows, &comparisons)?;
    Ok(0)
}
