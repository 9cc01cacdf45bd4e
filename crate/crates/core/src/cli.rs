//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when an argument or input file violates a
//! precondition (one diagnostic line on stderr), 1 on runtime failure.

use crate::capacity::{capacity_of, equilibrium_measure, SolverOptions};
use crate::certify::{run_suite, Batteries, BundleEntry, SuiteConfig};
use crate::circle_fn::{analyze, max_bandwidth, synthesize, FourierSeries, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{carleson_integral, CircleSet};
use crate::norms::NormReport;
use crate::outer::{f_eps_modulus, outer_from_log_modulus, p_eps_thm2, p_eps_thm3, FEpsData, OuterFunction};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable naming the directory that relative `--out` paths
/// are resolved against.
pub const OUT_DIR_ENV: &str = "DIRICHLET_LAB_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "dirichlet-lab", version, about = "Dirichlet-space norms, capacities and cyclicity certificates")]
pub struct Cli {
    /// Output file (default: stdout). Relative paths are placed under
    /// $DIRICHLET_LAB_OUT_DIR when it is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a circle set.
    Sets(SetsArgs),
    /// Norms of a sampled function or Fourier series.
    Norm(NormArgs),
    /// Outer functions and certificate multipliers.
    Outer(OuterArgs),
    /// Equilibrium energy and capacity of a set.
    Capacity(CapacityArgs),
    /// Carleson integral of a set.
    Carleson(CarlesonArgs),
    /// Run certificate batteries.
    Certify(CertifyArgs),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SetsArgs {
    /// Exponent of E_β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Truncation of E_β.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Cantor gap fractions per generation.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Cantor depth; with --slowly-closing uses r_k = 1 − 2^(−1/k).
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub slowly_closing: bool,
    #[arg(long, default_value_t = 0.0)]
    pub arc_start: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub arc_length: f64,
    /// Finite set of angles.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<f64>>,
    /// The whole circle.
    #[arg(long)]
    pub full: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormMethodArg {
    Spectral,
    Quadrature,
    Both,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct NormArgs {
    /// Grid function or Fourier series JSON.
    #[arg(long = "fn")]
    pub function: PathBuf,
    #[arg(long, value_enum, default_value_t = NormMethodArg::Both)]
    pub method: NormMethodArg,
    /// Bandwidth for analyzing grid samples (default M/2 − 1).
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Grid used to sample a series for the quadrature.
    #[arg(long = "M", default_value_t = 4096)]
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Factor {
    /// The multiplier p_ε (normalized to p_ε(0) = 1).
    P,
    /// The function F_ε.
    F,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct OuterArgs {
    /// Real log-modulus samples: build exp(u + i ũ).
    #[arg(long)]
    pub log_modulus: Option<PathBuf>,
    /// Samples of |f| for the Theorem 2 construction.
    #[arg(long)]
    pub abs_f: Option<PathBuf>,
    /// Set file for the Theorem 3 construction.
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "M", default_value_t = 4096)]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Factor::P)]
    pub factor: Factor,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CapacityArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Coarse rung R of the ladder (R, 2R).
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Also write the fine-rung equilibrium weights as CSV.
    #[arg(long)]
    pub weights_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CarlesonArgs {
    #[arg(long)]
    pub set: PathBuf,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CertifyArgs {
    /// Battery names (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub battery: Option<Vec<String>>,
    /// Suite configuration JSON; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub mollify_width: Option<f64>,
    /// Write one CSV per certificate into this directory.
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
    /// Record wall-clock times in the bundle's sidecar field.
    #[arg(long)]
    pub timings: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().lines().next().unwrap_or(""));
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::invalid("--threads ≥ 1 required")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sets(a) => cmd_sets(cli, a),
        Command::Norm(a) => cmd_norm(cli, a),
        Command::Outer(a) => cmd_outer(cli, a),
        Command::Capacity(a) => cmd_capacity(cli, a),
        Command::Carleson(a) => cmd_carleson(cli, a),
        Command::Certify(a) => cmd_certify(cli, a),
    }
}

fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_bytes(target: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match target {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
        }
        Some(p) => {
            let p = resolve_out(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, bytes)?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(cli.out.as_deref(), text.as_bytes())
}

fn json_only(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Format::Csv {
        return Err(Error::invalid(format!("--format csv is not available for {what}")));
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("invalid {what} file {}: {e}", path.display())))
}

fn read_set(path: &Path) -> Result<CircleSet> {
    read_json(path, "set")
}

fn cmd_sets(cli: &Cli, a: &SetsArgs) -> Result<()> {
    json_only(cli, "sets")?;
    let e_beta = a.beta.is_some() || a.nmax.is_some();
    let cantor = a.ratios.is_some() || a.depth.is_some() || a.slowly_closing;
    let families = [e_beta, cantor, a.points.is_some(), a.full].iter().filter(|x| **x).count();
    if families != 1 {
        return Err(Error::invalid(
            "choose exactly one family: --beta/--nmax, --ratios/--depth, --points or --full",
        ));
    }
    let set = if e_beta {
        let beta = a.beta.ok_or_else(|| Error::invalid("--beta is required with --nmax"))?;
        let nmax = a.nmax.ok_or_else(|| Error::invalid("--nmax is required with --beta"))?;
        CircleSet::build_e_beta(beta, nmax)?
    } else if cantor {
        let depth = a.depth.ok_or_else(|| Error::invalid("--depth is required for Cantor sets"))?;
        let ratios = match (&a.ratios, a.slowly_closing) {
            (Some(r), false) => r.clone(),
            (None, true) => CircleSet::slowly_closing_ratios(depth),
            _ => return Err(Error::invalid("give either --ratios or --slowly-closing")),
        };
        CircleSet::build_cantor(&ratios, depth, a.arc_start, a.arc_length)?
    } else if let Some(p) = &a.points {
        CircleSet::from_points(p.clone())?
    } else {
        CircleSet::full_circle()
    };
    emit_json(cli, &set)
}

enum Input {
    Grid(GridFunction),
    Series(FourierSeries),
}

fn read_function(path: &Path) -> Result<Input> {
    let v: serde_json::Value = read_json(path, "function")?;
    let bad = |e: serde_json::Error| Error::invalid(format!("invalid function file {}: {e}", path.display()));
    match v.get("kind").and_then(|k| k.as_str()) {
        Some("grid") => Ok(Input::Grid(serde_json::from_value(v).map_err(bad)?)),
        Some("series") => Ok(Input::Series(serde_json::from_value(v).map_err(bad)?)),
        _ => Err(Error::invalid(format!(
            "invalid function file {}: \"kind\" must be \"grid\" or \"series\"",
            path.display()
        ))),
    }
}

#[derive(Serialize)]
struct NormBoth {
    spectral: NormReport,
    quadrature: NormReport,
    relative_difference: f64,
}

fn cmd_norm(cli: &Cli, a: &NormArgs) -> Result<()> {
    json_only(cli, "norm")?;
    let (grid, series) = match read_function(&a.function)? {
        Input::Grid(g) => {
            let n = a.bandwidth.unwrap_or_else(|| max_bandwidth(g.len()));
            let s = analyze(&g, n)?;
            (g, s)
        }
        Input::Series(s) => {
            if a.method != NormMethodArg::Spectral && !(a.m.is_power_of_two() && a.m > 2 * s.bandwidth()) {
                return Err(Error::invalid(format!("M > 2N and M a power of two required (got M = {})", a.m)));
            }
            let g = if a.method == NormMethodArg::Spectral {
                GridFunction::constant(4, num_complex::Complex64::new(0.0, 0.0))?
            } else {
                synthesize(&s, a.m)?
            };
            (g, s)
        }
    };
    match a.method {
        NormMethodArg::Spectral => emit_json(cli, &NormReport::spectral(&series)),
        NormMethodArg::Quadrature => emit_json(cli, &NormReport::quadrature(&grid)),
        NormMethodArg::Both => {
            let spectral = NormReport::spectral(&series);
            let quadrature = NormReport::quadrature(&grid);
            let scale = spectral.dirichlet_energy.abs().max(f64::MIN_POSITIVE);
            let relative_difference = (quadrature.dirichlet_energy - spectral.dirichlet_energy).abs() / scale;
            emit_json(cli, &NormBoth { spectral, quadrature, relative_difference })
        }
    }
}

#[derive(Serialize)]
struct OuterOut<'a> {
    boundary: &'a GridFunction,
    value_at_zero: f64,
    #[serde(rename = "M_eps", skip_serializing_if = "Option::is_none")]
    m_eps: Option<f64>,
}

fn cmd_outer(cli: &Cli, a: &OuterArgs) -> Result<()> {
    json_only(cli, "outer")?;
    let sources = [a.log_modulus.is_some(), a.abs_f.is_some(), a.set.is_some()].iter().filter(|x| **x).count();
    if sources != 1 {
        return Err(Error::invalid("give exactly one of --log-modulus, --abs-f, --set"));
    }
    let need_eps = || a.eps.ok_or_else(|| Error::invalid("ε > 0 required (--eps missing)"));
    let grid = |p: &Path| -> Result<GridFunction> {
        match read_function(p)? {
            Input::Grid(g) => Ok(g),
            Input::Series(_) => Err(Error::invalid("expected grid samples, got a series")),
        }
    };
    let (outer, m_eps): (OuterFunction, Option<f64>) = if let Some(p) = &a.log_modulus {
        (outer_from_log_modulus(&grid(p)?)?, None)
    } else if let Some(p) = &a.abs_f {
        let f = grid(p)?;
        let eps = need_eps()?;
        match a.factor {
            Factor::P => {
                let (o, m) = p_eps_thm2(&f, eps)?;
                (o, Some(m))
            }
            Factor::F => (f_eps_modulus(FEpsData::Thm2 { abs_f: &f }, eps)?, None),
        }
    } else {
        let set = read_set(a.set.as_deref().expect("checked"))?;
        let gamma = a.gamma.ok_or_else(|| Error::invalid("γ > 0 required (--gamma missing)"))?;
        let eps = need_eps()?;
        match a.factor {
            Factor::P => {
                let (o, m) = p_eps_thm3(&set, gamma, eps, a.m)?;
                (o, Some(m))
            }
            Factor::F => (f_eps_modulus(FEpsData::Thm3 { set: &set, gamma, m: a.m }, eps)?, None),
        }
    };
    emit_json(cli, &OuterOut { boundary: &outer.boundary, value_at_zero: outer.value_at_zero.re, m_eps })
}

fn cmd_capacity(cli: &Cli, a: &CapacityArgs) -> Result<()> {
    let set = read_set(&a.set)?;
    let opts = SolverOptions { resolution: a.resolution, tol: a.tol, max_iter: a.max_iter, ..Default::default() };
    if cli.format == Format::Csv || a.weights_csv.is_some() {
        let fine = SolverOptions { resolution: 2 * a.resolution, ..opts };
        let (mu, _) = equilibrium_measure(&set, a.alpha, &fine)?;
        let mut buf = Vec::new();
        mu.write_csv(&mut buf)?;
        if let Some(p) = &a.weights_csv {
            write_bytes(Some(p), &buf)?;
        }
        if cli.format == Format::Csv {
            return write_bytes(cli.out.as_deref(), &buf);
        }
    }
    emit_json(cli, &capacity_of(&set, a.alpha, &opts)?)
}

#[derive(Serialize)]
struct CarlesonOut {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coarse_value: Option<f64>,
    diverging: bool,
    gaps: usize,
    total_gap_length: f64,
}

fn cmd_carleson(cli: &Cli, a: &CarlesonArgs) -> Result<()> {
    json_only(cli, "carleson")?;
    let set = read_set(&a.set)?;
    let r = carleson_integral(&set);
    emit_json(
        cli,
        &CarlesonOut {
            value: r.value,
            coarse_value: r.coarse_value,
            diverging: r.diverging,
            gaps: set.gaps().len(),
            total_gap_length: set.total_gap_length(),
        },
    )
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn cmd_certify(cli: &Cli, a: &CertifyArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => read_json::<SuiteConfig>(p, "config")?,
        None => {
            let b = a.battery.clone().ok_or_else(|| Error::invalid("--battery or --config required"))?;
            SuiteConfig::new(Batteries::Many(b))
        }
    };
    if let (Some(b), Some(_)) = (&a.battery, &a.config) {
        config.battery = Batteries::Many(b.clone());
    }
    if let Some(p) = &a.set {
        config.set = Some(read_set(p)?);
    }
    if let Some(v) = a.beta {
        config.beta = v;
    }
    if let Some(v) = a.gamma {
        config.gamma = v;
    }
    if let Some(v) = a.eta {
        config.eta = v;
    }
    if let Some(v) = &a.eps {
        config.eps = v.clone();
    }
    if let Some(v) = a.m {
        config.m = v;
    }
    if let Some(v) = a.mollify_width {
        config.mollify_width = v;
    }
    config.validate()?;
    if cli.format == Format::Csv {
        let count: usize = config
            .battery
            .names()
            .iter()
            .map(|n| match n.as_str() {
                "smoke" | "controls" => 2,
                "classify" => 0,
                _ => 1,
            })
            .sum();
        if count != 1 {
            return Err(Error::invalid(format!(
                "--format csv needs exactly one certificate (batteries give {count}); use --csv-dir"
            )));
        }
    }
    let certificates = |b: &crate::certify::SuiteBundle| {
        b.entries
            .iter()
            .filter_map(|e| match e {
                BundleEntry::Certificate { battery, label, report } => Some((battery.clone(), label.clone(), report.clone())),
                _ => None,
            })
            .collect::<Vec<_>>()
    };
    let bundle = run_suite(&config, a.timings)?;
    let certs = certificates(&bundle);
    if let Some(dir) = &a.csv_dir {
        let dir = resolve_out(dir);
        fs::create_dir_all(&dir)?;
        for (i, (battery, label, report)) in certs.iter().enumerate() {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            fs::write(dir.join(format!("{i:02}-{}-{}.csv", slug(battery), slug(label))), buf)?;
        }
    }
    match cli.format {
        Format::Json => emit_json(cli, &bundle),
        Format::Csv => {
            let mut buf = Vec::new();
            certs[0].2.write_csv(&mut buf)?;
            write_bytes(cli.out.as_deref(), &buf)
        }
    }
}
