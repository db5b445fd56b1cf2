//! Text formats: rule files, dataset CSV, report CSV.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::analysis::ErrorReport;
use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::radial::RadialRule;
use crate::spherical::{sample_unit_vector, NodeKind, RngSeed, SphericalKind, SphericalRule};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const RULE_HEADER: &str = "srff-rule v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Radial,
    Spherical(SphericalKind),
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleKind::Radial => f.write_str("radial"),
            RuleKind::Spherical(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "radial" {
            return Ok(RuleKind::Radial);
        }
        if let Some(rest) = s.strip_prefix("okq-") {
            let (base, bw) = rest
                .split_once(':')
                .ok_or_else(|| Error::Domain(format!("okq kind needs ':bandwidth', got '{s}'")))?;
            let bandwidth = bw
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad bandwidth '{bw}': {e}")))?;
            return Ok(RuleKind::Spherical(SphericalKind::Okq {
                base: base.parse()?,
                bandwidth,
            }));
        }
        Ok(RuleKind::Spherical(s.parse::<NodeKind>()?.into()))
    }
}

/// Serializable form of a radial or spherical rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleFile {
    pub kind: RuleKind,
    pub d: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl From<&RadialRule> for RuleFile {
    fn from(rule: &RadialRule) -> Self {
        Self {
            kind: RuleKind::Radial,
            d: rule.d,
            nodes: rule.xi.iter().map(|&x| vec![x]).collect(),
            weights: rule.a.clone(),
        }
    }
}

impl From<&SphericalRule> for RuleFile {
    fn from(rule: &SphericalRule) -> Self {
        Self {
            kind: RuleKind::Spherical(rule.kind),
            d: rule.d,
            nodes: rule
                .theta
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            weights: rule.b.clone(),
        }
    }
}

impl RuleFile {
    pub fn to_radial(&self) -> Result<RadialRule> {
        if self.kind != RuleKind::Radial {
            return Err(Error::Domain(format!(
                "rule kind is {}, not radial",
                self.kind
            )));
        }
        Ok(RadialRule {
            order: self.nodes.len(),
            xi: self.nodes.iter().map(|n| n[0]).collect(),
            a: self.weights.clone(),
            alpha: self.d as f64 / 2.0 - 1.0,
            d: self.d,
        })
    }

    pub fn to_spherical(&self) -> Result<SphericalRule> {
        let RuleKind::Spherical(kind) = self.kind else {
            return Err(Error::Domain("rule kind is radial, not spherical".into()));
        };
        let m = self.nodes.len();
        let theta = DMatrix::from_fn(self.d, m, |i, j| self.nodes[j][i]);
        Ok(SphericalRule {
            d: self.d,
            theta,
            b: self.weights.clone(),
            kind,
        })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{RULE_HEADER}").unwrap();
        writeln!(out, "kind {}", self.kind).unwrap();
        writeln!(out, "dim {}", self.d).unwrap();
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            out.push_str("node");
            for x in node {
                out.push(' ');
                out.push_str(&fmt_f64(*x));
            }
            writeln!(out, " weight {}", fmt_f64(*w)).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, column: usize, message: String| Error::Parse {
            line,
            column,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, RULE_HEADER)) => {}
            _ => return Err(perr(1, 1, format!("expected header '{RULE_HEADER}'"))),
        }
        let mut kind = None;
        let mut d = None;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (ln, line) in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("kind") => {
                    let v = tokens
                        .next()
                        .ok_or_else(|| perr(ln, 2, "missing kind".into()))?;
                    kind = Some(
                        v.parse::<RuleKind>()
                            .map_err(|e| perr(ln, 2, e.to_string()))?,
                    );
                }
                Some("dim") => {
                    let v = tokens
                        .next()
                        .ok_or_else(|| perr(ln, 2, "missing dim".into()))?;
                    d = Some(v.parse::<usize>().map_err(|e| perr(ln, 2, e.to_string()))?);
                }
                Some("node") => {
                    let dim = d.ok_or_else(|| perr(ln, 1, "node before dim".into()))?;
                    let expect = if kind == Some(RuleKind::Radial) {
                        1
                    } else {
                        dim
                    };
                    let rest: Vec<&str> = tokens.collect();
                    if rest.len() != expect + 2 || rest[expect] != "weight" {
                        return Err(perr(
                            ln,
                            1,
                            format!("expected {expect} components then 'weight <w>'"),
                        ));
                    }
                    let num = |i: usize| {
                        rest[i]
                            .parse::<f64>()
                            .map_err(|e| perr(ln, i + 2, format!("'{}': {e}", rest[i])))
                    };
                    nodes.push((0..expect).map(num).collect::<Result<Vec<_>>>()?);
                    weights.push(num(expect + 1)?);
                }
                Some(other) => return Err(perr(ln, 1, format!("unknown record '{other}'"))),
                None => {}
            }
        }
        Ok(Self {
            kind: kind.ok_or_else(|| perr(1, 1, "missing kind line".into()))?,
            d: d.ok_or_else(|| perr(1, 1, "missing dim line".into()))?,
            nodes,
            weights,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Reads a numeric CSV; every column is a coordinate.
pub fn load_csv(path: &Path, header: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), header)
}

pub fn read_csv<R: BufRead>(reader: R, header: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        column: col + 1,
                        message: format!("not a finite number: '{cell}'"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    column: row.len().min(first.len()) + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Dataset::from_rows(&rows)
}

/// Row-major matrix as CSV with 17 significant digits.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Median of pairwise distances over all pairs, or over `max_pairs` pairs
/// drawn with `seed` when there are more.
pub fn median_heuristic(data: &Dataset, max_pairs: usize, seed: RngSeed) -> Result<f64> {
    let n = data.n();
    if n < 2 || max_pairs == 0 {
        return Err(Error::Domain(
            "median heuristic needs at least two points and one pair".into(),
        ));
    }
    let d = data.d();
    let x = data.row_major();
    let dist = |i: usize, j: usize| {
        x[i * d..(i + 1) * d]
            .iter()
            .zip(&x[j * d..(j + 1) * d])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let total = n * (n - 1) / 2;
    let mut dists: Vec<f64> = if total <= max_pairs {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| dist(i, j))
            .collect()
    } else {
        let mut rng = seed.rng();
        (0..max_pairs)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                dist(i, j)
            })
            .collect()
    };
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if !(median > 0.0) {
        return Err(Error::Domain("median pairwise distance is zero".into()));
    }
    Ok(median)
}

/// `n` standard Gaussian points in `R^d`.
pub fn synthetic_gaussian(n: usize, d: usize, seed: RngSeed) -> Result<Dataset> {
    let mut rng = seed.rng();
    let mut m = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Dataset::new(m)
}

/// `n` uniform points on the sphere of the given radius.
pub fn synthetic_sphere(n: usize, d: usize, radius: f64, seed: RngSeed) -> Result<Dataset> {
    let mut rng = seed.rng();
    let mut m = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        let v = sample_unit_vector(&mut rng, d);
        for j in 0..d {
            m[(i, j)] = radius * v[j];
        }
    }
    Dataset::new(m)
}

/// Seeded subsample of `n` rows (all rows, shuffled, when `n` exceeds the size).
pub fn subsample(data: &Dataset, n: usize, seed: RngSeed) -> Dataset {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..data.n()).collect();
    idx.shuffle(&mut seed.rng());
    idx.truncate(n.min(data.n()));
    let rows = DMatrix::from_fn(idx.len(), data.d(), |i, j| data.rows[(idx[i], j)]);
    Dataset { rows, labels: None }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub const REPORT_SCHEMA: &str = "srff-report-v1";

pub const REPORT_COLUMNS: [&str; 15] = [
    "schema",
    "method",
    "d",
    "sigma",
    "m_r",
    "m_s",
    "m_total",
    "seed",
    "rel_frobenius",
    "spectral_dev",
    "ridge",
    "pointwise_mse",
    "seeds_used",
    "bound_thm1",
    "bound_thm2",
];

pub fn report_header(timing: bool) -> String {
    let mut h = REPORT_COLUMNS.join(",");
    if timing {
        h.push_str(",wall_time");
    }
    h
}

pub fn report_row(r: &ErrorReport, timing: bool) -> String {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut cells = vec![
        REPORT_SCHEMA.to_string(),
        r.method.clone(),
        r.d.to_string(),
        fmt_f64(r.sigma),
        r.m_r.to_string(),
        r.m_s.to_string(),
        r.m_total.to_string(),
        r.seed.to_string(),
        fmt_f64(r.rel_frobenius),
        opt(r.spectral_dev),
        opt(r.ridge),
        opt(r.pointwise_mse),
        r.seeds_used.to_string(),
        opt(r.bound_thm1),
        opt(r.bound_thm2),
    ];
    if timing {
        cells.push(opt(r.wall_time));
    }
    cells.join(",")
}
