//! Random and deterministic Fourier feature maps for the Gaussian kernel.
//!
//! A map is a finite list of frequencies `n_m` with weights `w_m`, and the
//! approximate kernel is `κ̂(x, y) = Σ_m w_m cos⟨n_m, x − y⟩`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::radial::{gauss_laguerre, radii, KernelSpec, RadialRule};
use crate::spherical::{
    default_jitter, haar_from_rng, okq_weights, sample_sphere, NodeKind, RngSeed, SphericalRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SrMc,
    SrOmc,
    SrSomc,
    SrOkqMc,
    SrOkqOmc,
    SrOkqSomc,
    Rff,
    Orf,
    QmcHalton,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::SrMc,
        Method::SrOmc,
        Method::SrSomc,
        Method::SrOkqMc,
        Method::SrOkqOmc,
        Method::SrOkqSomc,
        Method::Rff,
        Method::Orf,
        Method::QmcHalton,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SrMc => "SR_MC",
            Method::SrOmc => "SR_OMC",
            Method::SrSomc => "SR_SOMC",
            Method::SrOkqMc => "SR_OKQ_MC",
            Method::SrOkqOmc => "SR_OKQ_OMC",
            Method::SrOkqSomc => "SR_OKQ_SOMC",
            Method::Rff => "RFF",
            Method::Orf => "ORF",
            Method::QmcHalton => "QMC_HALTON",
        }
    }

    /// Sphere node kind for spherical-radial methods.
    pub fn node_kind(&self) -> Option<NodeKind> {
        match self {
            Method::SrMc | Method::SrOkqMc => Some(NodeKind::Mc),
            Method::SrOmc | Method::SrOkqOmc => Some(NodeKind::Omc),
            Method::SrSomc | Method::SrOkqSomc => Some(NodeKind::Somc),
            _ => None,
        }
    }

    pub fn is_spherical_radial(&self) -> bool {
        self.node_kind().is_some()
    }

    pub fn is_okq(&self) -> bool {
        matches!(self, Method::SrOkqMc | Method::SrOkqOmc | Method::SrOkqSomc)
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, Method::QmcHalton)
    }

    pub fn sr(kind: NodeKind, okq: bool) -> Method {
        match (kind, okq) {
            (NodeKind::Mc, false) => Method::SrMc,
            (NodeKind::Omc, false) => Method::SrOmc,
            (NodeKind::Somc, false) => Method::SrSomc,
            (NodeKind::Mc, true) => Method::SrOkqMc,
            (NodeKind::Omc, true) => Method::SrOkqOmc,
            (NodeKind::Somc, true) => Method::SrOkqSomc,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::Domain(format!("unknown method '{s}'")))
    }
}

/// Parameters of the optional kernel-quadrature reweighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OkqParams {
    pub bandwidth: f64,
    /// `None` selects [`default_jitter`].
    pub jitter: Option<f64>,
}

impl Default for OkqParams {
    fn default() -> Self {
        Self {
            bandwidth: 1.0,
            jitter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub spec: KernelSpec,
    /// `d × M`, one frequency per column.
    pub freqs: DMatrix<f64>,
    pub w: Vec<f64>,
    pub method: Method,
    /// Zero for the baselines.
    pub m_r: usize,
    pub m_s: usize,
}

impl FeatureMap {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn weight_sum(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// Input points, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = rows.iter().position(|x| !x.is_finite()) {
            let n = rows.nrows();
            return Err(Error::Domain(format!(
                "non-finite entry at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { rows, labels: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }

    /// Row-major copy, convenient for per-row slices.
    pub fn row_major(&self) -> Vec<f64> {
        self.rows.transpose().as_slice().to_vec()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Tensor product of a radial and a spherical rule: frequency `r_i θ_j` with
/// weight `a_i b_j`, ordered with `j` running fastest.
pub fn product_map(
    spec: KernelSpec,
    radial: &RadialRule,
    spherical: &SphericalRule,
    method: Method,
) -> Result<FeatureMap> {
    check_dim(spec.d, spherical.d)?;
    let r = radii(radial, &spec)?;
    let (m_r, m_s) = (r.len(), spherical.len());
    let mut freqs = DMatrix::<f64>::zeros(spec.d, m_r * m_s);
    let mut w = Vec::with_capacity(m_r * m_s);
    for (i, (&ri, &ai)) in r.iter().zip(&radial.a).enumerate() {
        for (j, &bj) in spherical.b.iter().enumerate() {
            freqs
                .column_mut(i * m_s + j)
                .copy_from(&(spherical.theta.column(j) * ri));
            w.push(ai * bj);
        }
    }
    Ok(FeatureMap {
        spec,
        freqs,
        w,
        method,
        m_r,
        m_s,
    })
}

/// Spherical-radial map with `M_R` Gauss-Laguerre radii and `M_S` sphere
/// nodes of the given kind, optionally reweighted by kernel quadrature.
pub fn build_sr(
    spec: KernelSpec,
    m_r: usize,
    m_s: usize,
    kind: NodeKind,
    okq: Option<OkqParams>,
    seed: RngSeed,
) -> Result<FeatureMap> {
    let radial = gauss_laguerre(spec.d, m_r)?;
    let mut spherical = sample_sphere(kind, spec.d, m_s, seed)?;
    if let Some(p) = okq {
        let jitter = p.jitter.unwrap_or_else(|| default_jitter(m_s));
        spherical = okq_weights(&spherical, p.bandwidth, jitter)?;
    }
    product_map(spec, &radial, &spherical, Method::sr(kind, okq.is_some()))
}

fn uniform_map(spec: KernelSpec, freqs: DMatrix<f64>, method: Method) -> FeatureMap {
    let m = freqs.ncols();
    FeatureMap {
        spec,
        freqs,
        w: vec![1.0 / m as f64; m],
        method,
        m_r: 0,
        m_s: 0,
    }
}

fn check_positive(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Precondition(
            "number of features must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Plain random Fourier features: `n_m ~ N(0, σ^{-2} I)` i.i.d.
pub fn build_rff(spec: KernelSpec, m: usize, seed: RngSeed) -> Result<FeatureMap> {
    check_positive(m)?;
    let mut rng = seed.rng();
    let inv = 1.0 / spec.sigma;
    let mut freqs = DMatrix::<f64>::zeros(spec.d, m);
    for col in 0..m {
        for row in 0..spec.d {
            let z: f64 = rng.sample(StandardNormal);
            freqs[(row, col)] = z * inv;
        }
    }
    Ok(uniform_map(spec, freqs, Method::Rff))
}

/// Orthogonal random features: Haar directions, each with its own
/// `χ_d / σ` length.
pub fn build_orf(spec: KernelSpec, m: usize, seed: RngSeed) -> Result<FeatureMap> {
    check_positive(m)?;
    let d = spec.d;
    if !m.is_multiple_of(d) {
        return Err(Error::Precondition(format!(
            "ORF needs M to be a multiple of {d} (d = {d}), got {m}"
        )));
    }
    let mut rng = seed.rng();
    let chi2 = ChiSquared::new(d as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let mut freqs = DMatrix::<f64>::zeros(d, m);
    for block in 0..m / d {
        let q = haar_from_rng(&mut rng, d);
        for j in 0..d {
            let radius = chi2.sample(&mut rng).sqrt() / spec.sigma;
            freqs
                .column_mut(block * d + j)
                .copy_from(&(q.column(j) * radius));
        }
    }
    Ok(uniform_map(spec, freqs, Method::Orf))
}

pub const PRIMES: [u64; 64] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311,
];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    value
}

/// Halton point number `index` (starting at 1) in `d` dimensions.
pub fn halton_point(index: u64, d: usize) -> Result<Vec<f64>> {
    if d > PRIMES.len() {
        return Err(Error::Domain(format!(
            "Halton sequence supports d <= {}, got {d}",
            PRIMES.len()
        )));
    }
    Ok(PRIMES[..d]
        .iter()
        .map(|&p| radical_inverse(index, p))
        .collect())
}

/// Deterministic quasi-Monte Carlo frequencies from the Halton sequence
/// pushed through the inverse normal CDF.
pub fn build_qmc_halton(spec: KernelSpec, m: usize) -> Result<FeatureMap> {
    check_positive(m)?;
    let normal = Normal::standard();
    let mut freqs = DMatrix::<f64>::zeros(spec.d, m);
    for col in 0..m {
        let u = halton_point(col as u64 + 1, spec.d)?;
        for (row, ui) in u.into_iter().enumerate() {
            freqs[(row, col)] = normal.inverse_cdf(ui) / spec.sigma;
        }
    }
    Ok(uniform_map(spec, freqs, Method::QmcHalton))
}

/// Builds any method; `m_r` is ignored by the baselines, which use `m` features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapConfig {
    pub method: Method,
    pub m_r: usize,
    pub m_s: usize,
    pub okq: OkqParams,
}

impl MapConfig {
    pub fn total(&self) -> usize {
        if self.method.is_spherical_radial() {
            self.m_r * self.m_s
        } else {
            self.m_s
        }
    }

    pub fn build(&self, spec: KernelSpec, seed: RngSeed) -> Result<FeatureMap> {
        match self.method {
            Method::Rff => build_rff(spec, self.m_s, seed),
            Method::Orf => build_orf(spec, self.m_s, seed),
            Method::QmcHalton => build_qmc_halton(spec, self.m_s),
            sr => {
                let kind = sr.node_kind().expect("spherical-radial method");
                let okq = sr.is_okq().then_some(self.okq);
                build_sr(spec, self.m_r, self.m_s, kind, okq, seed)
            }
        }
    }
}

/// `Σ_m w_m cos⟨n_m, x − y⟩`.
pub fn kappa_hat(map: &FeatureMap, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(map.d(), x.len())?;
    check_dim(map.d(), y.len())?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(kappa_hat_diff(map, &diff))
}

/// `κ̂` as a function of the difference `x − y`.
pub fn kappa_hat_diff(map: &FeatureMap, diff: &[f64]) -> f64 {
    map.freqs
        .column_iter()
        .zip(&map.w)
        .map(|(n, &w)| w * crate::spherical::dot(n.as_slice(), diff).cos())
        .sum()
}

/// Row-major `n × M` matrices of `cos⟨n_m, x_i⟩` and `sin⟨n_m, x_i⟩`.
fn projections(map: &FeatureMap, data: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(map.d(), data.d())?;
    let (n, m) = (data.n(), map.len());
    let x = data.row_major();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &x[i * data.d()..(i + 1) * data.d()];
            (0..m)
                .map(|k| crate::spherical::dot(map.freqs.column(k).as_slice(), xi).sin_cos())
                .map(|(s, c)| (c, s))
                .unzip()
        })
        .collect();
    let mut c = Vec::with_capacity(n * m);
    let mut s = Vec::with_capacity(n * m);
    for (ci, si) in rows {
        c.extend(ci);
        s.extend(si);
    }
    Ok((c, s))
}

/// `n × 2M` matrix with rows `[√w_m cos⟨n_m,x⟩, √w_m sin⟨n_m,x⟩]_m`, so that
/// `Φ Φᵀ = K̂`. Fails on signed weights.
pub fn feature_matrix(map: &FeatureMap, data: &Dataset) -> Result<DMatrix<f64>> {
    if let Some((index, &weight)) = map.w.iter().enumerate().find(|(_, w)| **w < 0.0) {
        return Err(Error::NegativeWeight { index, weight });
    }
    let (c, s) = projections(map, data)?;
    let m = map.len();
    let sqrt_w: Vec<f64> = map.w.iter().map(|w| w.sqrt()).collect();
    Ok(DMatrix::from_fn(data.n(), 2 * m, |i, j| {
        let k = j / 2;
        let v = if j % 2 == 0 {
            c[i * m + k]
        } else {
            s[i * m + k]
        };
        sqrt_w[k] * v
    }))
}

/// Fills a symmetric matrix from a per-entry function on the upper triangle.
/// Each entry is computed independently, so the result does not depend on
/// the thread schedule.
fn symmetric_from<F>(n: usize, entry: F) -> DMatrix<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| entry(i, j)).collect())
        .collect();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    k
}

/// Exact Gaussian Gram matrix.
pub fn gram_exact(spec: &KernelSpec, data: &Dataset) -> Result<DMatrix<f64>> {
    check_dim(spec.d, data.d())?;
    let x = data.row_major();
    let d = data.d();
    Ok(symmetric_from(data.n(), |i, j| {
        if i == j {
            1.0
        } else {
            spec.kernel(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d])
        }
    }))
}

/// Approximate Gram matrix `K̂_ij = κ̂(x_i, x_j)`; valid for signed weights.
pub fn gram_hat(map: &FeatureMap, data: &Dataset) -> Result<DMatrix<f64>> {
    let (c, s) = projections(map, data)?;
    let m = map.len();
    let w = &map.w;
    Ok(symmetric_from(data.n(), |i, j| {
        let (ci, si) = (&c[i * m..(i + 1) * m], &s[i * m..(i + 1) * m]);
        let (cj, sj) = (&c[j * m..(j + 1) * m], &s[j * m..(j + 1) * m]);
        (0..m).map(|k| w[k] * (ci[k] * cj[k] + si[k] * sj[k])).sum()
    }))
}
