//! Experiment orchestration behind `srff approx`.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::analysis::{
    bound_thm1, bound_thm2, default_ridge, rel_frobenius, spectral_deviation, ErrorReport,
};
use crate::error::{Error, Result};
use crate::features::{gram_exact, gram_hat, Dataset, MapConfig, Method, OkqParams};
use crate::io::{
    fnv1a, load_csv, median_heuristic, report_header, report_row, subsample, synthetic_gaussian,
    synthetic_sphere,
};
use crate::radial::KernelSpec;
use crate::spherical::RngSeed;

/// A method column in the report; `Exact` compares `K` with itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMethod {
    Exact,
    Map(Method),
}

impl ApproxMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ApproxMethod::Exact => "EXACT",
            ApproxMethod::Map(m) => m.name(),
        }
    }
}

impl FromStr for ApproxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("exact") {
            Ok(ApproxMethod::Exact)
        } else {
            s.parse().map(ApproxMethod::Map)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, header: bool },
    Gaussian { n: usize, d: usize },
    Sphere { n: usize, d: usize, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaChoice {
    Fixed(f64),
    Median { max_pairs: usize },
}

impl FromStr for SigmaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" | "median-heuristic" => Ok(SigmaChoice::Median { max_pairs: 100_000 }),
            v => v.parse::<f64>().map(SigmaChoice::Fixed).map_err(|_| {
                Error::Domain(format!("sigma must be a number or 'median', got '{s}'"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub methods: Vec<ApproxMethod>,
    pub sigma: SigmaChoice,
    pub m_r: Vec<usize>,
    pub m_s: Vec<usize>,
    /// Subsample size; `None` keeps every row.
    pub n: Option<usize>,
    pub source: DataSource,
    pub data_seed: u64,
    pub seeds: Vec<u64>,
    pub okq: OkqParams,
    pub spectral: bool,
    /// `None` selects [`default_ridge`].
    pub ridge: Option<f64>,
    pub pointwise: bool,
    /// Bound columns are filled when set.
    pub bound_c: Option<f64>,
    pub lipschitz: f64,
    pub timing: bool,
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Error::Precondition(format!("{what} list must not be empty"));
        if self.methods.is_empty() {
            return Err(empty("method"));
        }
        if self.m_r.is_empty() {
            return Err(empty("M_R"));
        }
        if self.m_s.is_empty() {
            return Err(empty("M_S"));
        }
        if self.seeds.is_empty() {
            return Err(empty("seed"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition("seeds must be distinct".into()));
        }
        if let DataSource::Csv { path, .. } = &self.source {
            if !path.exists() {
                return Err(Error::Precondition(format!(
                    "dataset {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let seed = RngSeed::new(self.data_seed, fnv1a(b"dataset"));
        let data = match &self.source {
            DataSource::Csv { path, header } => load_csv(path, *header)?,
            DataSource::Gaussian { n, d } => synthetic_gaussian(*n, *d, seed)?,
            DataSource::Sphere { n, d, radius } => synthetic_sphere(*n, *d, *radius, seed)?,
        };
        Ok(match self.n {
            Some(n) => subsample(&data, n, RngSeed::new(self.data_seed, fnv1a(b"subsample"))),
            None => data,
        })
    }
}

/// Stream id for one grid cell, so that cells never share random numbers.
pub fn config_stream(method: ApproxMethod, m_r: usize, m_s: usize) -> u64 {
    fnv1a(format!("{}|{m_r}|{m_s}", method.name()).as_bytes())
}

/// Runs the full grid and returns the CSV text.
pub fn run_approx(cfg: &ApproxConfig) -> Result<String> {
    cfg.validate()?;
    let data = cfg.load_dataset()?;
    let sigma = match cfg.sigma {
        SigmaChoice::Fixed(s) => s,
        SigmaChoice::Median { max_pairs } => median_heuristic(
            &data,
            max_pairs,
            RngSeed::new(cfg.data_seed, fnv1a(b"median")),
        )?,
    };
    let spec = KernelSpec::new(data.d(), sigma)?;
    let k = gram_exact(&spec, &data)?;
    let ridge = cfg.ridge.unwrap_or_else(|| default_ridge(&k));

    let mut out = report_header(cfg.timing);
    out.push('\n');
    for &method in &cfg.methods {
        for &m_r in &cfg.m_r {
            for &m_s in &cfg.m_s {
                for &seed in &cfg.seeds {
                    let start = Instant::now();
                    let stream = RngSeed::new(seed, config_stream(method, m_r, m_s));
                    let (k_hat, m_total) = match method {
                        ApproxMethod::Exact => (k.clone(), 0),
                        ApproxMethod::Map(m) => {
                            let mc = MapConfig {
                                method: m,
                                m_r,
                                m_s: if m.is_spherical_radial() {
                                    m_s
                                } else {
                                    m_r * m_s
                                },
                                okq: cfg.okq,
                            };
                            let map = mc.build(spec, stream)?;
                            (gram_hat(&map, &data)?, map.len())
                        }
                    };
                    let report = evaluate(
                        cfg, method, &spec, &k, &k_hat, ridge, m_r, m_s, m_total, seed, start,
                    )?;
                    out.push_str(&report_row(&report, cfg.timing));
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    cfg: &ApproxConfig,
    method: ApproxMethod,
    spec: &KernelSpec,
    k: &DMatrix<f64>,
    k_hat: &DMatrix<f64>,
    ridge: f64,
    m_r: usize,
    m_s: usize,
    m_total: usize,
    seed: u64,
    start: Instant,
) -> Result<ErrorReport> {
    let spectral_dev = if cfg.spectral {
        Some(spectral_deviation(k, k_hat, ridge)?)
    } else {
        None
    };
    let pointwise_mse = cfg.pointwise.then(|| {
        let n = k.nrows();
        if n < 2 {
            return 0.0;
        }
        let sq: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (k[(i, j)] - k_hat[(i, j)]).powi(2))
            .sum();
        sq / (n * (n - 1)) as f64
    });
    let bounds = match (cfg.bound_c, method) {
        (Some(c), ApproxMethod::Map(m)) if m.is_spherical_radial() => (
            Some(bound_thm1(spec.d, m_r, m_s, c, cfg.lipschitz)?),
            Some(bound_thm2(spec.d, m_r, m_s, c, cfg.lipschitz)?),
        ),
        _ => (None, None),
    };
    Ok(ErrorReport {
        method: method.name().to_string(),
        d: spec.d,
        sigma: spec.sigma,
        m_r,
        m_s,
        m_total,
        seed,
        rel_frobenius: rel_frobenius(k, k_hat)?,
        spectral_dev,
        ridge: cfg.spectral.then_some(ridge),
        pointwise_mse,
        seeds_used: 1,
        bound_thm1: bounds.0,
        bound_thm2: bounds.1,
        wall_time: Some(start.elapsed().as_secs_f64()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ApproxConfig {
        ApproxConfig {
            methods: vec![ApproxMethod::Exact, ApproxMethod::Map(Method::SrOmc)],
            sigma: SigmaChoice::Fixed(1.5),
            m_r: vec![1],
            m_s: vec![4, 8],
            n: Some(30),
            source: DataSource::Gaussian { n: 50, d: 4 },
            data_seed: 1,
            seeds: vec![0, 1],
            okq: OkqParams::default(),
            spectral: true,
            ridge: None,
            pointwise: true,
            bound_c: Some(0.5),
            lipschitz: 1.0,
            timing: false,
        }
    }

    #[test]
    fn exact_rows_are_zero() {
        let csv = run_approx(&base()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 2 * 2);
        for l in lines.iter().filter(|l| l.contains(",EXACT,")) {
            let cells: Vec<&str> = l.split(',').collect();
            assert_eq!(cells[8].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn repeated_runs_identical() {
        assert_eq!(run_approx(&base()).unwrap(), run_approx(&base()).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let mut c = base();
        c.seeds = vec![1, 1];
        assert!(run_approx(&c).is_err());
        let mut c = base();
        c.methods.clear();
        assert!(run_approx(&c).is_err());
    }
}
