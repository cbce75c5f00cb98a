//! `pfzeros` command-line interface.
//!
//! Exit codes: 0 on success, 1 when a computation rejects its input (error
//! JSON on stderr), 2 on usage or input-file errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pfzeros::bellgen::{bell_sequence_exact, MapSpec1D};
use pfzeros::empir::{
    arcsine_cdf, fmt_f64, half_semicircle_cdf, iterate_orbit, ks_distance, orbit_samples,
    write_cdf_comparison_csv, EmpiricalCdf, Histogram,
};
use pfzeros::lorenz::{lorenz_report, DirectionGrid, LorenzParams};
use pfzeros::odeiter::{
    critical_frequencies, euler_iterate, fixed_points, lattice_seeds, DifferentialIteration,
    OdeSystem,
};
use pfzeros::polycore::{real_zeros, RootConfig};
use pfzeros::saddle::{invariant_density_p, zero_density_q_with, SaddleProblem};

#[derive(Parser, Debug)]
#[command(
    name = "pfzeros",
    version,
    about = "Invariant densities from the zeros of Bell polynomials"
)]
struct Cli {
    /// Seed for the starting-point perturbation of orbits.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root-finding precision in bits (default 53; `hermite zeros` defaults to 128).
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bell polynomials H_n(y, 0) of a 1-D map.
    #[command(subcommand)]
    Hermite(HermiteCmd),
    /// Zero density q(s) and invariant density p(x).
    #[command(subcommand)]
    Density(DensityCmd),
    /// Orbit histogram of a 1-D map.
    Orbit(OrbitArgs),
    /// Polynomial vector fields as differential iterations.
    #[command(subcommand)]
    Ode(OdeCmd),
    /// The Lorenz system.
    #[command(subcommand)]
    Lorenz(LorenzCmd),
    /// Distance between a sample and a reference law.
    Compare(CompareArgs),
}

#[derive(Subcommand, Debug)]
enum HermiteCmd {
    /// Coefficients as CSV `n,k,coeff` (coefficient of y^k in H_n).
    Gen(HermiteArgs),
    /// Real zeros of H_n as CSV `index,zero`.
    Zeros(HermiteArgs),
}

#[derive(Args, Debug)]
struct HermiteArgs {
    /// Map JSON, e.g. {"coeffs": [0, 2, -0.5]}.
    #[arg(long)]
    map: PathBuf,
    #[arg(short = 'n', long = "order")]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DensityCmd {
    /// Saddle-point zero density as CSV `s,q`.
    Saddle(SaddleArgs),
    /// p(x) = -x q'(x) as CSV `x,p`.
    Invariant(InvariantArgs),
}

#[derive(Args, Debug)]
struct SaddleArgs {
    #[arg(long)]
    map: PathBuf,
    /// Grid lo:hi:count.
    #[arg(long = "s", allow_hyphen_values = true)]
    s: Grid,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvariantArgs {
    #[arg(long)]
    map: PathBuf,
    /// Support of q as lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    support: Interval,
    /// Evaluation grid lo:hi:count (default: 99 interior points of the support).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<Grid>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 1000)]
    burn: usize,
    #[arg(long, default_value_t = 100_000)]
    keep: usize,
    /// Histogram range lo:hi (default: observed range).
    #[arg(long, allow_hyphen_values = true)]
    range: Option<Interval>,
    #[arg(long, default_value_t = 200)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OdeCmd {
    /// Zeros of F by Newton's method from a lattice of seeds (JSON).
    FixedPoints(FixedPointArgs),
    /// Critical asymptotic frequencies at a point (JSON).
    Frequencies(FrequencyArgs),
    /// Euler trajectory endpoint and partial sum (JSON).
    Euler(EulerArgs),
}

#[derive(Args, Debug)]
struct FixedPointArgs {
    #[arg(long)]
    system: PathBuf,
    /// Seeds cover [-radius, radius]^d.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 5)]
    per_axis: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrequencyArgs {
    #[arg(long)]
    system: PathBuf,
    /// Evaluation point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    at: Point,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EulerArgs {
    #[arg(long)]
    system: PathBuf,
    /// Starting point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    a0: Point,
    #[arg(long)]
    delta: f64,
    #[arg(short = 'n', long = "steps")]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum LorenzCmd {
    /// Fixed points, spectra, condition surfaces and cycle densities (JSON).
    Report(LorenzArgs),
}

#[derive(Args, Debug)]
struct LorenzArgs {
    #[arg(long, default_value_t = 10.0)]
    sigma: f64,
    #[arg(long, default_value_t = 28.0)]
    rho: f64,
    #[arg(long, default_value_t = 8.0 / 3.0)]
    beta: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Direction grid as polar:azimuth counts.
    #[arg(long, default_value = "12:24")]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Metric {
    Ks,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Reference {
    /// Arcsine law on the support.
    Arcsine,
    /// Normalized half semicircle on [0, 1].
    Semicircle,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_enum)]
    metric: Metric,
    /// CSV with a header row: raw values, or a histogram `bin_lo,bin_hi,count`.
    #[arg(long)]
    sample: PathBuf,
    /// Column holding the sample values (default: last).
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum)]
    reference: Reference,
    /// Support lo:hi for the arcsine law (default: sample range).
    #[arg(long, allow_hyphen_values = true)]
    support: Option<Interval>,
    /// Optional CSV `x,empirical,reference`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid {
    lo: f64,
    hi: f64,
    count: usize,
}

impl Grid {
    fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.hi
                } else {
                    self.lo + step * k as f64
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected lo:hi:count, got {s:?}"));
        }
        let lo: f64 = parts[0].parse().map_err(|e| format!("lo: {e}"))?;
        let hi: f64 = parts[1].parse().map_err(|e| format!("hi: {e}"))?;
        let count: usize = parts[2].parse().map_err(|e| format!("count: {e}"))?;
        if count == 0 || !lo.is_finite() || !hi.is_finite() || (count > 1 && lo > hi) {
            return Err(format!("empty or reversed range {s:?}"));
        }
        Ok(Self { lo, hi, count })
    }
}

#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl FromStr for Interval {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: f64 = a.parse().map_err(|e| format!("lo: {e}"))?;
        let hi: f64 = b.parse().map_err(|e| format!("hi: {e}"))?;
        if !(lo < hi) {
            return Err(format!("need lo < hi, got {s:?}"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Clone, Debug)]
struct Point(Vec<f64>);

impl FromStr for Point {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(Point)
    }
}

enum Failure {
    Usage(String),
    Domain { kind: String, message: String },
}

/// Variant name of a library error, from its `Debug` form.
fn kind_of(e: &impl std::fmt::Debug) -> String {
    let text = format!("{e:?}");
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or("Error")
        .to_string()
}

fn domain<E: std::fmt::Debug + std::fmt::Display>(e: E) -> Failure {
    // wrapper variants carry the interesting name one level down
    let mut kind = kind_of(&e);
    let debug = format!("{e:?}");
    if matches!(kind.as_str(), "Roots" | "Saddle" | "Ode") {
        if let Some(inner) = debug.split_once('(') {
            kind = kind_of(&inner.1);
        }
    }
    Failure::Domain {
        kind,
        message: e.to_string(),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_output(out: &Option<PathBuf>, body: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(body)
            .map_err(|e| usage(e.to_string())),
    }
}

fn write_json(out: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
    text.push('\n');
    write_output(out, text.as_bytes())
}

fn root_config(bits: Option<u32>, default_bits: u32) -> RootConfig {
    RootConfig::default().with_precision(bits.unwrap_or(default_bits))
}

fn hermite(cmd: &HermiteCmd, bits: Option<u32>) -> Result<(), Failure> {
    match cmd {
        HermiteCmd::Gen(a) => {
            let f: MapSpec1D = read_json(&a.map)?;
            let seq = bell_sequence_exact(&f, a.n);
            let mut body = String::from("n,k,coeff\n");
            for (m, h) in seq.iter().enumerate() {
                let p = h
                    .to_f64()
                    .ok_or_else(|| domain(format!("coefficients of H_{m} overflow f64")))?;
                for (k, c) in p.real_coeffs().unwrap_or_default().iter().enumerate() {
                    body.push_str(&format!("{m},{k},{}\n", fmt_f64(*c)));
                }
            }
            write_output(&a.out, body.as_bytes())
        }
        HermiteCmd::Zeros(a) => {
            let f: MapSpec1D = read_json(&a.map)?;
            let cfg = root_config(bits, 128);
            let h = bell_sequence_exact(&f, a.n)
                .pop()
                .expect("non-empty sequence");
            let roots = h.roots(&cfg).map_err(domain)?;
            let zeros = real_zeros(&roots, &cfg);
            let mut body = String::from("index,zero\n");
            for (k, z) in zeros.iter().enumerate() {
                body.push_str(&format!("{k},{}\n", fmt_f64(*z)));
            }
            write_output(&a.out, body.as_bytes())
        }
    }
}

fn density(cmd: &DensityCmd, bits: Option<u32>) -> Result<(), Failure> {
    let cfg = root_config(bits, 53);
    match cmd {
        DensityCmd::Saddle(a) => {
            let f: MapSpec1D = read_json(&a.map)?;
            let mut body = String::from("s,q\n");
            for s in a.s.points() {
                let prob = SaddleProblem::new(&f, s).map_err(domain)?;
                let q = zero_density_q_with(&prob, &cfg).map_err(domain)?;
                body.push_str(&format!("{},{}\n", fmt_f64(s), fmt_f64(q)));
            }
            write_output(&a.out, body.as_bytes())
        }
        DensityCmd::Invariant(a) => {
            let f: MapSpec1D = read_json(&a.map)?;
            let Interval { lo, hi } = a.support;
            let xs = match &a.x {
                Some(g) => g.points(),
                None => (1..=99)
                    .map(|k| lo + (hi - lo) * k as f64 / 100.0)
                    .collect(),
            };
            let q = |s: f64| {
                SaddleProblem::new(&f, s)
                    .and_then(|p| zero_density_q_with(&p, &cfg))
                    .unwrap_or(0.0)
            };
            let mut body = String::from("x,p\n");
            for x in xs {
                let p = invariant_density_p(q, (lo, hi), x).map_err(domain)?;
                body.push_str(&format!("{},{}\n", fmt_f64(x), fmt_f64(p)));
            }
            write_output(&a.out, body.as_bytes())
        }
    }
}

fn orbit(a: &OrbitArgs, seed: u64) -> Result<(), Failure> {
    let f: MapSpec1D = read_json(&a.map)?;
    let hist = match a.range {
        Some(Interval { lo, hi }) => {
            let mut h = Histogram::with_range(lo, hi, a.bins).map_err(domain)?;
            for x in orbit_samples(&f, a.x0, a.burn, a.keep, seed).map_err(domain)? {
                h.add(x);
            }
            h
        }
        None if a.bins == 200 => iterate_orbit(&f, a.x0, a.burn, a.keep, seed).map_err(domain)?,
        None => Histogram::from_samples(
            &orbit_samples(&f, a.x0, a.burn, a.keep, seed).map_err(domain)?,
            a.bins,
        )
        .map_err(domain)?,
    };
    if hist.out_of_range > 0 {
        eprintln!(
            "{}",
            json!({"warning": "out_of_range", "count": hist.out_of_range})
        );
    }
    let mut body = Vec::new();
    hist.write_csv(&mut body)
        .map_err(|e| usage(e.to_string()))?;
    write_output(&a.out, &body)
}

fn ode(cmd: &OdeCmd) -> Result<(), Failure> {
    match cmd {
        OdeCmd::FixedPoints(a) => {
            let sys: OdeSystem = read_json(&a.system)?;
            let seeds = lattice_seeds(sys.dim(), a.radius, a.per_axis);
            let fp = fixed_points(&sys, &seeds).map_err(domain)?;
            write_json(&a.out, &fp)
        }
        OdeCmd::Frequencies(a) => {
            let sys: OdeSystem = read_json(&a.system)?;
            let r = critical_frequencies(&sys, &a.at.0).map_err(domain)?;
            write_json(&a.out, &r)
        }
        OdeCmd::Euler(a) => {
            let sys: OdeSystem = read_json(&a.system)?;
            let it = DifferentialIteration::new(sys, a.delta, a.n).map_err(domain)?;
            let run = euler_iterate(&it, &a.a0.0).map_err(domain)?;
            write_json(
                &a.out,
                &json!({"delta": a.delta, "n": a.n, "a0": a.a0.0, "a_n": run.a_n, "s_n": run.s_n}),
            )
        }
    }
}

fn lorenz(cmd: &LorenzCmd) -> Result<(), Failure> {
    let LorenzCmd::Report(a) = cmd;
    let (polar, azimuth) = a
        .grid
        .split_once(':')
        .and_then(|(p, q)| Some((p.parse::<usize>().ok()?, q.parse::<usize>().ok()?)))
        .filter(|(p, q)| *p > 0 && *q > 0)
        .ok_or_else(|| {
            usage(format!(
                "--grid expects polar:azimuth counts, got {:?}",
                a.grid
            ))
        })?;
    let p = LorenzParams::new(a.sigma, a.rho, a.beta).map_err(domain)?;
    let report =
        lorenz_report(&p, &DirectionGrid::sphere(polar, azimuth), a.delta).map_err(domain)?;
    write_json(&a.out, &report)
}

fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| usage("sample file is empty"))?
        .split(',')
        .map(str::trim)
        .collect();
    let idx = match column {
        Some(c) => header
            .iter()
            .position(|h| *h == c)
            .ok_or_else(|| usage(format!("no column {c:?} in {header:?}")))?,
        None => header.len() - 1,
    };
    lines
        .enumerate()
        .map(|(row, l)| {
            l.split(',')
                .nth(idx)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| usage(format!("row {}: no numeric value in column {idx}", row + 2)))
        })
        .collect()
}

/// Bin edges and counts when the file is a histogram CSV.
fn read_histogram(path: &Path) -> Result<Option<(Vec<f64>, Vec<u64>)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("bin_lo,bin_hi,count") {
        return Ok(None);
    }
    let (mut edges, mut counts) = (Vec::new(), Vec::new());
    for (row, l) in lines.enumerate() {
        let bad = || usage(format!("row {}: expected bin_lo,bin_hi,count", row + 2));
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = f[0].parse().map_err(|_| bad())?;
        let hi: f64 = f[1].parse().map_err(|_| bad())?;
        if edges.is_empty() {
            edges.push(lo);
        }
        edges.push(hi);
        counts.push(f[2].parse::<u64>().map_err(|_| bad())?);
    }
    Ok(Some((edges, counts)))
}

fn compare_histogram(a: &CompareArgs, edges: &[f64], counts: &[u64]) -> Result<(), Failure> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(domain(pfzeros::empir::EmpirError::EmptySample));
    }
    let (lo, hi) = match (a.reference, a.support) {
        (_, Some(Interval { lo, hi })) => (lo, hi),
        _ => (edges[0], edges[edges.len() - 1]),
    };
    if !(lo < hi) {
        return Err(domain(pfzeros::empir::EmpirError::InvalidArgument(
            "degenerate histogram range".into(),
        )));
    }
    let mut acc = 0u64;
    let mut d = 0.0f64;
    let mut rows = String::from("x,empirical,reference\n");
    for (k, e) in edges.iter().enumerate() {
        if k > 0 {
            acc += counts[k - 1];
        }
        let emp = acc as f64 / total as f64;
        let x = e.clamp(lo, hi);
        let r = match a.reference {
            Reference::Arcsine => arcsine_cdf(x, lo, hi).map_err(domain)?,
            Reference::Semicircle => half_semicircle_cdf((x - lo) / (hi - lo)).map_err(domain)?,
        };
        d = d.max((emp - r).abs());
        rows.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(*e),
            fmt_f64(emp),
            fmt_f64(r)
        ));
    }
    if a.out.is_some() {
        write_output(&a.out, rows.as_bytes())?;
    }
    println!(
        "{}",
        json!({"metric": "ks", "value": d, "n": total, "support": [lo, hi]})
    );
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<(), Failure> {
    let Metric::Ks = a.metric;
    if a.column.is_none() {
        if let Some((edges, counts)) = read_histogram(&a.sample)? {
            return compare_histogram(a, &edges, &counts);
        }
    }
    let values = read_column(&a.sample, a.column.as_deref())?;
    let sample = EmpiricalCdf::new(values).map_err(domain)?;
    if sample.is_empty() {
        return Err(domain(pfzeros::empir::EmpirError::EmptySample));
    }
    let pts = sample.points();
    let (lo, hi) = match (a.reference, a.support) {
        (_, Some(Interval { lo, hi })) => (lo, hi),
        (Reference::Arcsine, None) => (pts[0], pts[pts.len() - 1]),
        (Reference::Semicircle, None) => (0.0, 1.0),
    };
    let reference = |x: f64| -> f64 {
        let x = x.clamp(lo, hi);
        match a.reference {
            Reference::Arcsine => arcsine_cdf(x, lo, hi).unwrap_or(0.0),
            Reference::Semicircle => half_semicircle_cdf((x - lo) / (hi - lo)).unwrap_or(0.0),
        }
    };
    let d = ks_distance(&sample, reference).map_err(domain)?;
    if let Some(path) = &a.out {
        let mut body = Vec::new();
        write_cdf_comparison_csv(&mut body, &sample, reference)
            .map_err(|e| usage(e.to_string()))?;
        write_output(&Some(path.clone()), &body)?;
    }
    let summary = json!({"metric": "ks", "value": d, "n": sample.len(), "support": [lo, hi]});
    println!("{summary}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Hermite(c) => hermite(c, cli.precision_bits),
        Command::Density(c) => density(c, cli.precision_bits),
        Command::Orbit(a) => orbit(a, cli.seed),
        Command::Ode(c) => ode(c),
        Command::Lorenz(c) => lorenz(c),
        Command::Compare(a) => compare(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("{}", json!({"error": "UsageError", "message": message}));
            ExitCode::from(2)
        }
        Err(Failure::Domain { kind, message }) => {
            eprintln!("{}", json!({"error": kind, "message": message}));
            ExitCode::from(1)
        }
    }
}
