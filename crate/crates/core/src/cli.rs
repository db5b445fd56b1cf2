//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or flag validation, 2 data or numerical
//! error, 3 verification failure. `SRFF_THREADS` sets the worker count.
//!
//! Report CSV schema (`srff-report-v1`): `schema, method, d, sigma, m_r, m_s,
//! m_total, seed, rel_frobenius, spectral_dev, ridge, pointwise_mse,
//! seeds_used, bound_thm1, bound_thm2`, plus `wall_time` with `--timing`.
//! Optional cells are empty when not computed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{bound_thm1_terms, bound_thm2_terms, mc_error_series};
use crate::error::{Error, Result};
use crate::experiment::{run_approx, ApproxConfig, ApproxMethod, DataSource, SigmaChoice};
use crate::features::OkqParams;
use crate::io::{fmt_f64, synthetic_gaussian, synthetic_sphere, write_matrix_csv, RuleFile};
use crate::radial::gauss_laguerre;
use crate::spherical::{default_jitter, okq_weights, sample_sphere, NodeKind, RngSeed};
use crate::verify::{run_check, CRITERIA};

pub const THREADS_ENV: &str = "SRFF_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "srff",
    version,
    about = "Spherical-radial Fourier features for the Gaussian kernel"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a radial or spherical quadrature rule file.
    Quad(QuadArgs),
    /// Kernel approximation sweep; one CSV row per configuration.
    Approx(ApproxArgs),
    /// Tabulate the error bounds and the Monte Carlo error series.
    Bounds(BoundsArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
    /// Dataset utilities.
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(
        long,
        conflicts_with = "spherical",
        required_unless_present = "spherical"
    )]
    pub radial: bool,
    #[arg(long)]
    pub spherical: bool,
    #[arg(long)]
    pub d: usize,
    /// Number of radial nodes.
    #[arg(long, required_if_eq("radial", "true"))]
    pub mr: Option<usize>,
    /// Number of sphere nodes.
    #[arg(long, required_if_eq("spherical", "true"))]
    pub ms: Option<usize>,
    #[arg(long, value_enum, default_value = "mc")]
    pub kind: KindArg,
    /// Reweight the sphere nodes by kernel quadrature with this bandwidth.
    #[arg(long)]
    pub okq_bandwidth: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Mc,
    Omc,
    Somc,
}

impl From<KindArg> for NodeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mc => NodeKind::Mc,
            KindArg::Omc => NodeKind::Omc,
            KindArg::Somc => NodeKind::Somc,
        }
    }
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    /// Comma-separated methods: EXACT, SR_MC, SR_OMC, SR_SOMC, SR_OKQ_MC,
    /// SR_OKQ_OMC, SR_OKQ_SOMC, RFF, ORF, QMC_HALTON.
    #[arg(long, value_delimiter = ',', required = true)]
    pub method: Vec<String>,
    /// Bandwidth, or `median` for the median heuristic.
    #[arg(long, default_value = "median")]
    pub sigma: String,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub mr: Vec<usize>,
    /// Sphere node counts; baselines use M_R·M_S features.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ms: Vec<usize>,
    /// `gaussian`, `sphere`, or a CSV path.
    #[arg(long, default_value = "gaussian")]
    pub data: String,
    /// The CSV has a header row.
    #[arg(long)]
    pub header: bool,
    /// Dimension of synthetic data.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Points generated for synthetic data.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Radius of the synthetic sphere dataset.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Seeded subsample size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub okq_bandwidth: f64,
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Also compute the spectral deviation.
    #[arg(long)]
    pub spectral: bool,
    /// Ridge for the spectral deviation (default 1e-8·trace(K)/n).
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Also compute the mean squared off-diagonal error.
    #[arg(long)]
    pub pointwise: bool,
    /// Fill bound columns at this `c = ‖x−y‖/(√2σ)`.
    #[arg(long)]
    pub bound_c: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    /// Add a wall_time column (output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub mr: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub ms: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub c: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    /// Plane-wave argument for the Monte Carlo error series.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion numbers to run (all by default).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    /// Check a rule file parses and is well formed.
    #[arg(long)]
    pub rule: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kind: DataKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DataKind {
    Gaussian,
    Sphere,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(Error),
    Verification(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_quad(args: &QuadArgs) -> Result<String> {
    let file = if args.radial {
        let m_r = args
            .mr
            .ok_or_else(|| Error::Precondition("--mr is required".into()))?;
        RuleFile::from(&gauss_laguerre(args.d, m_r)?)
    } else {
        let m_s = args
            .ms
            .ok_or_else(|| Error::Precondition("--ms is required".into()))?;
        let mut rule = sample_sphere(args.kind.into(), args.d, m_s, RngSeed::new(args.seed, 0))?;
        if let Some(bw) = args.okq_bandwidth {
            rule = okq_weights(
                &rule,
                bw,
                args.jitter.unwrap_or_else(|| default_jitter(m_s)),
            )?;
        }
        RuleFile::from(&rule)
    };
    Ok(file.serialize())
}

pub fn approx_config(args: &ApproxArgs) -> Result<ApproxConfig> {
    let methods = args
        .method
        .iter()
        .map(|m| m.parse::<ApproxMethod>())
        .collect::<Result<Vec<_>>>()?;
    let source = match args.data.as_str() {
        "gaussian" => DataSource::Gaussian {
            n: args.points,
            d: args.d,
        },
        "sphere" => DataSource::Sphere {
            n: args.points,
            d: args.d,
            radius: args.radius,
        },
        path => DataSource::Csv {
            path: PathBuf::from(path),
            header: args.header,
        },
    };
    Ok(ApproxConfig {
        methods,
        sigma: args.sigma.parse::<SigmaChoice>()?,
        m_r: args.mr.clone(),
        m_s: args.ms.clone(),
        n: args.n,
        source,
        data_seed: args.data_seed,
        seeds: args.seeds.clone(),
        okq: OkqParams {
            bandwidth: args.okq_bandwidth,
            jitter: args.jitter,
        },
        spectral: args.spectral,
        ridge: args.ridge,
        pointwise: args.pointwise,
        bound_c: args.bound_c,
        lipschitz: args.lipschitz,
        timing: args.timing,
    })
}

pub const BOUNDS_HEADER: &str = "d,m_r,m_s,c,lipschitz,bound_thm1,bound_thm2,radial_term,\
spherical_thm1,spherical_thm2,ratio,ratio_algebraic,beta,mc_series_k2,mc_series_k4";

pub fn cmd_bounds(args: &BoundsArgs) -> Result<String> {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    let d = args.d;
    for &c in &args.c {
        for &m_r in &args.mr {
            for &m_s in &args.ms {
                let t1 = bound_thm1_terms(d, m_r, m_s, c, args.lipschitz)?;
                let t2 = bound_thm2_terms(d, m_r, m_s, c, args.lipschitz)?;
                let a = (4 * m_r + d) as f64 / (d as f64 - 1.0);
                let ratio = if t1.spherical > 0.0 {
                    t2.spherical / t1.spherical
                } else {
                    0.0
                };
                let cells = [
                    d.to_string(),
                    m_r.to_string(),
                    m_s.to_string(),
                    fmt_f64(c),
                    fmt_f64(args.lipschitz),
                    fmt_f64(t1.total),
                    fmt_f64(t2.total),
                    fmt_f64(t1.radial),
                    fmt_f64(t1.spherical),
                    fmt_f64(t2.spherical),
                    fmt_f64(ratio),
                    fmt_f64(a * a * c.powi(4) / 4.0),
                    fmt_f64(args.beta),
                    fmt_f64(mc_error_series(d, args.beta, m_s, 2, 1.0)?),
                    fmt_f64(mc_error_series(d, args.beta, m_s, 4, 3.0)?),
                ];
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn cmd_verify(args: &VerifyArgs) -> std::result::Result<(), Failure> {
    let mut failed = 0;
    if let Some(path) = &args.rule {
        match RuleFile::read(path).and_then(|f| check_rule(&f)) {
            Ok(()) => println!("[PASS] rule file {}", path.display()),
            Err(e) => {
                println!("[FAIL] rule file {}: {e}", path.display());
                failed += 1;
            }
        }
    }
    if args.rule.is_none() || !args.only.is_empty() {
        for (id, _, _) in CRITERIA {
            if !args.only.is_empty() && !args.only.contains(&id) {
                continue;
            }
            let outcome = run_check(id);
            println!("{outcome}");
            failed += usize::from(!outcome.passed);
        }
    }
    if failed > 0 {
        Err(Failure::Verification(failed))
    } else {
        Ok(())
    }
}

/// Structural checks on a parsed rule: finite values, unit sphere nodes,
/// positive radial nodes, unit radial mass.
pub fn check_rule(file: &RuleFile) -> Result<()> {
    let bad = |msg: String| Err(Error::Precondition(msg));
    if file.nodes.is_empty() {
        return bad("rule has no nodes".into());
    }
    if file
        .nodes
        .iter()
        .flatten()
        .chain(&file.weights)
        .any(|x| !x.is_finite())
    {
        return bad("rule has non-finite entries".into());
    }
    match file.kind {
        crate::io::RuleKind::Radial => {
            let rule = file.to_radial()?;
            if rule.xi.iter().any(|&x| x <= 0.0) {
                return bad("radial nodes must be positive".into());
            }
            let total: f64 = rule.a.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return bad(format!("radial weights sum to {total}, expected 1"));
            }
            let reference = gauss_laguerre(rule.d, rule.order)?;
            let dev = rule
                .xi
                .iter()
                .zip(&reference.xi)
                .chain(rule.a.iter().zip(&reference.a))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if dev > 1e-12 {
                return bad(format!(
                    "radial rule deviates from Gauss-Laguerre by {dev:e}"
                ));
            }
        }
        crate::io::RuleKind::Spherical(_) => {
            for (j, node) in file.nodes.iter().enumerate() {
                let norm: f64 = node.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return bad(format!("sphere node {j} has norm {norm}"));
                }
            }
        }
    }
    Ok(())
}

fn cmd_dataset_gen(args: &GenArgs) -> Result<String> {
    let seed = RngSeed::new(args.seed, 0);
    let data = match args.kind {
        DataKind::Gaussian => synthetic_gaussian(args.n, args.d, seed)?,
        DataKind::Sphere => synthetic_sphere(args.n, args.d, args.radius, seed)?,
    };
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, &data.rows)?;
    Ok(String::from_utf8(buf).expect("ASCII output"))
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Quad(a) => emit(&a.out, &cmd_quad(a)?)?,
        Command::Approx(a) => emit(&a.out, &run_approx(&approx_config(a)?)?)?,
        Command::Bounds(a) => emit(&a.out, &cmd_bounds(a)?)?,
        Command::Verify(a) => cmd_verify(a)?,
        Command::Dataset {
            command: DatasetCommand::Gen(a),
        } => emit(&a.out, &cmd_dataset_gen(a)?)?,
    }
    Ok(())
}

fn configure_threads() -> std::result::Result<(), Failure> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| {
            Failure::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

/// Binary entry point.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Data(e) => eprintln!("error: {e}"),
                Failure::Verification(n) => eprintln!("verification failed: {n} check(s)"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
