//! Error metrics, theoretical bound curves and replication estimators.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::features::{kappa_hat, FeatureMap, Method};
use crate::orthopoly::{harmonic_dim, lambda_single, lambda_tail_envelope, sphere_average};
use crate::spherical::{sample_sphere, NodeKind, RngSeed};

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub method: String,
    pub d: usize,
    pub sigma: f64,
    pub m_r: usize,
    pub m_s: usize,
    pub m_total: usize,
    pub seed: u64,
    pub rel_frobenius: f64,
    pub spectral_dev: Option<f64>,
    pub ridge: Option<f64>,
    pub pointwise_mse: Option<f64>,
    pub seeds_used: usize,
    pub bound_thm1: Option<f64>,
    pub bound_thm2: Option<f64>,
    pub wall_time: Option<f64>,
}

fn check_shape(k: &DMatrix<f64>, k_hat: &DMatrix<f64>) -> Result<()> {
    if k.shape() != k_hat.shape() {
        return Err(Error::Precondition(format!(
            "shape mismatch: {:?} vs {:?}",
            k.shape(),
            k_hat.shape()
        )));
    }
    Ok(())
}

/// `‖K − K̂‖_F / ‖K‖_F`.
pub fn rel_frobenius(k: &DMatrix<f64>, k_hat: &DMatrix<f64>) -> Result<f64> {
    check_shape(k, k_hat)?;
    let denom = k.norm();
    if denom == 0.0 {
        return Err(Error::Precondition(
            "reference matrix has zero Frobenius norm".into(),
        ));
    }
    Ok((k - k_hat).norm() / denom)
}

/// `1e-8 · trace(K) / n`.
pub fn default_ridge(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows().max(1);
    1e-8 * k.trace() / n as f64
}

/// `‖(K + ρI)^{-1/2} (K̂ + ρI) (K + ρI)^{-1/2} − I‖_2`.
///
/// The ridge enters both matrices, so `G(K, K) = 0` for every `ρ`.
pub fn spectral_deviation(k: &DMatrix<f64>, k_hat: &DMatrix<f64>, ridge: f64) -> Result<f64> {
    check_shape(k, k_hat)?;
    if !k.is_square() {
        return Err(Error::Precondition(
            "spectral deviation needs square matrices".into(),
        ));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Domain(format!(
            "ridge must be nonnegative, got {ridge}"
        )));
    }
    let n = k.nrows();
    let mut reg = k.clone();
    for i in 0..n {
        reg[(i, i)] += ridge;
    }
    let eig = SymmetricEigen::new(reg);
    let min = eig.eigenvalues.min();
    if !(min > 0.0) {
        return Err(Error::Precondition(format!(
            "K + ridge·I is not positive definite (smallest eigenvalue {min:e}); use a larger ridge"
        )));
    }
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * inv_sqrt[j]);
    let whiten = &scaled * v.transpose();
    // W (K̂ + ρI) W − I = W (K̂ − K) W, and the right side avoids
    // subtracting the identity from an ill-conditioned product.
    let m = &whiten * (k_hat - k) * &whiten;
    let sym = (&m + m.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.amax())
}

/// Terms of a bound, each as it enters the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub radial: f64,
    pub spherical: f64,
    pub total: f64,
}

fn check_bound_args(d: usize, m_r: usize, m_s: usize, c: f64, l: f64) -> Result<()> {
    if d < 2 || m_r == 0 || m_s == 0 {
        return Err(Error::Domain(format!(
            "bounds need d >= 2, M_R >= 1, M_S >= 1 (got d={d}, M_R={m_r}, M_S={m_s})"
        )));
    }
    if !(c >= 0.0) || !(l > 0.0) {
        return Err(Error::Domain(format!(
            "bounds need c >= 0 and L > 0 (got c={c}, L={l})"
        )));
    }
    Ok(())
}

/// `ln` of `2 L c² / √Γ(d/2) · (c² / (2M_R − 1))^{2M_R − 1}`.
fn ln_radial_term(d: usize, m_r: usize, c: f64, l: f64) -> f64 {
    let p = (2 * m_r - 1) as f64;
    let ln_c2 = 2.0 * c.ln();
    2f64.ln() + l.ln() + ln_c2 - 0.5 * ln_gamma(d as f64 / 2.0) + p * (ln_c2 - p.ln())
}

fn spherical_parts(d: usize, m_r: usize, c: f64) -> (f64, f64) {
    let a = (4 * m_r + d) as f64 / (d as f64 - 1.0);
    let ln_exp = 4.0 * a * c * c;
    (a.ln(), ln_exp)
}

fn finish(ln_radial: f64, ln_spherical: f64) -> BoundTerms {
    let radial = ln_radial.exp();
    let spherical = ln_spherical.exp();
    BoundTerms {
        radial,
        spherical,
        total: radial + spherical,
    }
}

/// Bound for Monte Carlo sphere nodes; the spherical term is
/// `2 (8/M_S) ((4M_R+d)/(d−1))² c⁴ exp(4(4M_R+d)c²/(d−1))`.
/// Overflow yields `+∞`.
pub fn bound_thm1_terms(d: usize, m_r: usize, m_s: usize, c: f64, l: f64) -> Result<BoundTerms> {
    check_bound_args(d, m_r, m_s, c, l)?;
    if c == 0.0 {
        return Ok(BoundTerms {
            radial: 0.0,
            spherical: 0.0,
            total: 0.0,
        });
    }
    let (ln_a, ln_exp) = spherical_parts(d, m_r, c);
    let ln_sph = 16f64.ln() - (m_s as f64).ln() + 2.0 * ln_a + 4.0 * c.ln() + ln_exp;
    Ok(finish(ln_radial_term(d, m_r, c, l), ln_sph))
}

/// Bound for orthogonal sphere nodes; the spherical term is
/// `2 (2/M_S) ((4M_R+d)/(d−1))⁴ c⁸ exp(4(4M_R+d)c²/(d−1))`.
pub fn bound_thm2_terms(d: usize, m_r: usize, m_s: usize, c: f64, l: f64) -> Result<BoundTerms> {
    check_bound_args(d, m_r, m_s, c, l)?;
    if c == 0.0 {
        return Ok(BoundTerms {
            radial: 0.0,
            spherical: 0.0,
            total: 0.0,
        });
    }
    let (ln_a, ln_exp) = spherical_parts(d, m_r, c);
    let ln_sph = 4f64.ln() - (m_s as f64).ln() + 4.0 * ln_a + 8.0 * c.ln() + ln_exp;
    Ok(finish(ln_radial_term(d, m_r, c, l), ln_sph))
}

pub fn bound_thm1(d: usize, m_r: usize, m_s: usize, c: f64, l: f64) -> Result<f64> {
    bound_thm1_terms(d, m_r, m_s, c, l).map(|t| t.total)
}

pub fn bound_thm2(d: usize, m_r: usize, m_s: usize, c: f64, l: f64) -> Result<f64> {
    bound_thm2_terms(d, m_r, m_s, c, l).map(|t| t.total)
}

/// `c = ‖x − y‖ / (√2 σ)`.
pub fn bound_c(dist: f64, sigma: f64) -> f64 {
    dist / (2f64.sqrt() * sigma)
}

/// `(factor / M_S) Σ_{k ≥ k_min} N(d,k) λ_k²`, summed until the coefficient
/// envelope certifies that the remainder is below `1e-12` of the partial sum.
pub fn mc_error_series(d: usize, beta: f64, m_s: usize, k_min: usize, factor: f64) -> Result<f64> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    if m_s == 0 {
        return Err(Error::Domain("M_S must be at least 1".into()));
    }
    let sum = harmonic_energy(d, beta, k_min)?;
    Ok(factor / m_s as f64 * sum)
}

/// `Σ_{k ≥ k_min} N(d,k) λ_k²` with certified truncation.
pub fn harmonic_energy(d: usize, beta: f64, k_min: usize) -> Result<f64> {
    if beta == 0.0 {
        return Ok(if k_min == 0 { 1.0 } else { 0.0 });
    }
    let mut k = k_min + (k_min % 2);
    let mut partial = 0.0;
    loop {
        let lambda = lambda_single(d, beta, k, 1e-15)?;
        partial += harmonic_dim(d, k)? as f64 * lambda * lambda;
        let tail = lambda_tail_envelope(d, beta, k + 2, 2);
        if tail < 1e-12 * partial {
            return Ok(partial);
        }
        k += 2;
        if k > 10_000 {
            return Err(Error::Convergence {
                tol: 1e-12,
                estimate: tail / partial,
                evaluations: k,
            });
        }
    }
}

/// Mean of squared errors with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    pub mse: f64,
    pub standard_error: f64,
    pub replications: usize,
}

impl MseEstimate {
    pub fn from_squared_errors(sq: &[f64]) -> Self {
        let n = sq.len();
        let mse = sq.iter().sum::<f64>() / n as f64;
        let constant = sq.windows(2).all(|w| w[0] == w[1]);
        let mse = if constant && n > 0 { sq[0] } else { mse };
        let var = if n > 1 && !constant {
            sq.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mse,
            standard_error: (var / n as f64).sqrt(),
            replications: n,
        }
    }
}

/// Stream used for replication `r` of a run seeded with `seed`.
pub fn replication_seed(seed: RngSeed, r: usize) -> RngSeed {
    seed.with_stream(seed.stream_id.wrapping_add(r as u64))
}

/// Rebuilds a map for each replication on its own stream and estimates
/// `E|κ(x,y) − κ̂(x,y)|²`.
pub fn replicate_mse<F>(
    builder: F,
    x: &[f64],
    y: &[f64],
    replications: usize,
    seed: RngSeed,
) -> Result<MseEstimate>
where
    F: Fn(RngSeed) -> Result<FeatureMap> + Sync,
{
    if replications < 100 {
        return Err(Error::Precondition(format!(
            "at least 100 replications required, got {replications}"
        )));
    }
    let sq: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let map = builder(replication_seed(seed, r))?;
            let exact = map.spec.kernel(x, y);
            let approx = kappa_hat(&map, x, y)?;
            Ok((exact - approx).powi(2))
        })
        .collect::<Result<_>>()?;
    Ok(MseEstimate::from_squared_errors(&sq))
}

/// Squared error of the sphere rule alone on `θ ↦ cos(β θ_1)`, replicated.
///
/// The integrand is the plane wave at a fixed radius, so the radial rule
/// plays no part; the target is `λ_0(β)`. All node kinds are rotation
/// invariant, so fixing the direction to `e_1` loses nothing.
pub fn spherical_stage_mse(
    kind: NodeKind,
    d: usize,
    m_s: usize,
    beta: f64,
    replications: usize,
    seed: RngSeed,
) -> Result<MseEstimate> {
    if replications < 2 {
        return Err(Error::Precondition(
            "at least 2 replications required".into(),
        ));
    }
    let exact = sphere_average(d, beta, 1e-15)?;
    let sq: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rule = sample_sphere(kind, d, m_s, replication_seed(seed, r))?;
            let est = rule.integrate(|t| (beta * t[0]).cos());
            Ok((est - exact).powi(2))
        })
        .collect::<Result<_>>()?;
    Ok(MseEstimate::from_squared_errors(&sq))
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Label used in reports for a method.
pub fn method_label(method: Option<Method>) -> String {
    method.map_or_else(|| "EXACT".to_string(), |m| m.name().to_string())
}
