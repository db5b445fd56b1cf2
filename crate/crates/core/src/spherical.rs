//! Quadrature rules on the unit sphere `S^{d-1}`.
//!
//! Node sets are Monte Carlo (i.i.d. uniform), orthogonal Monte Carlo (the
//! columns of independent Haar-distributed orthogonal matrices) and its
//! antipodally symmetrized variant. Any of them can be reweighted by optimal
//! kernel quadrature against the Gaussian kernel restricted to the sphere.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::orthopoly::hecke_funk;

/// Seed plus stream index; every sampler is a pure function of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        Self::new(seed, 0)
    }
}

/// How the sphere nodes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Mc,
    Omc,
    Somc,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Mc => "mc",
            NodeKind::Omc => "omc",
            NodeKind::Somc => "somc",
        }
    }

    /// `M_S` must be a multiple of this.
    pub fn block(&self, d: usize) -> usize {
        match self {
            NodeKind::Mc => 1,
            NodeKind::Omc => d,
            NodeKind::Somc => 2 * d,
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(NodeKind::Mc),
            "omc" => Ok(NodeKind::Omc),
            "somc" => Ok(NodeKind::Somc),
            other => Err(Error::Domain(format!("unknown spherical kind '{other}'"))),
        }
    }
}

/// Provenance of a spherical rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphericalKind {
    Mc,
    Omc,
    Somc,
    Okq { base: NodeKind, bandwidth: f64 },
}

impl SphericalKind {
    pub fn base(&self) -> NodeKind {
        match *self {
            SphericalKind::Mc => NodeKind::Mc,
            SphericalKind::Omc => NodeKind::Omc,
            SphericalKind::Somc => NodeKind::Somc,
            SphericalKind::Okq { base, .. } => base,
        }
    }
}

impl From<NodeKind> for SphericalKind {
    fn from(kind: NodeKind) -> Self {
        match kind {
            NodeKind::Mc => SphericalKind::Mc,
            NodeKind::Omc => SphericalKind::Omc,
            NodeKind::Somc => SphericalKind::Somc,
        }
    }
}

impl fmt::Display for SphericalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphericalKind::Okq { base, bandwidth } => {
                write!(f, "okq-{}:{}", base.name(), crate::io::fmt_f64(*bandwidth))
            }
            other => f.write_str(other.base().name()),
        }
    }
}

/// Nodes `θ_j` (columns of a `d × M_S` matrix) and weights `b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalRule {
    pub d: usize,
    pub theta: DMatrix<f64>,
    pub b: Vec<f64>,
    pub kind: SphericalKind,
}

impl SphericalRule {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `Σ_j b_j g(θ_j)`.
    pub fn integrate<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        self.theta
            .column_iter()
            .zip(&self.b)
            .map(|(col, &w)| w * g(col.as_slice()))
            .sum()
    }

    /// `Σ_j b_j cos(β ⟨v, θ_j⟩)` for a unit direction `v`.
    pub fn integrate_plane_wave(&self, v: &[f64], beta: f64) -> f64 {
        self.integrate(|t| (beta * dot(v, t)).cos())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn check_count(kind: NodeKind, d: usize, m_s: usize) -> Result<()> {
    if m_s == 0 {
        return Err(Error::Precondition("M_S must be at least 1".into()));
    }
    let block = kind.block(d);
    if !m_s.is_multiple_of(block) {
        return Err(Error::Precondition(format!(
            "{} rule needs M_S to be a multiple of {block} (d = {d}), got {m_s}",
            kind.name().to_uppercase()
        )));
    }
    Ok(())
}

/// Uniform point on `S^{d-1}` by normalizing a standard Gaussian vector.
pub fn sample_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&g, &g).sqrt();
        if norm > 0.0 && norm.is_finite() {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Haar-distributed `d × d` orthogonal matrix from an existing generator.
///
/// QR of a Gaussian matrix, with `Q`'s columns flipped by the signs of
/// `R`'s diagonal; without the flip the law of `Q` is not Haar.
pub fn haar_from_rng<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    loop {
        let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        let diag = r.diagonal();
        let scale = diag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if diag.iter().any(|x| x.abs() <= 1e-12 * scale) {
            continue;
        }
        let mut q = qr.q();
        for (j, &rjj) in diag.iter().enumerate() {
            if rjj < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        return q;
    }
}

/// Haar-distributed orthogonal matrix for `seed`.
pub fn sample_haar_orthogonal(d: usize, seed: RngSeed) -> Result<DMatrix<f64>> {
    check_dimension(d)?;
    Ok(haar_from_rng(&mut seed.rng(), d))
}

/// `M_S` i.i.d. uniform nodes with weights `1/M_S`.
pub fn sample_sphere_mc(d: usize, m_s: usize, seed: RngSeed) -> Result<SphericalRule> {
    check_dimension(d)?;
    check_count(NodeKind::Mc, d, m_s)?;
    let mut rng = seed.rng();
    let mut theta = DMatrix::<f64>::zeros(d, m_s);
    for j in 0..m_s {
        let v = sample_unit_vector(&mut rng, d);
        theta.column_mut(j).copy_from_slice(&v);
    }
    Ok(uniform_rule(d, theta, SphericalKind::Mc))
}

/// Columns of `M_S / d` independent Haar matrices, weights `1/M_S`.
pub fn sample_sphere_omc(d: usize, m_s: usize, seed: RngSeed) -> Result<SphericalRule> {
    check_dimension(d)?;
    check_count(NodeKind::Omc, d, m_s)?;
    let mut rng = seed.rng();
    let mut theta = DMatrix::<f64>::zeros(d, m_s);
    for block in 0..m_s / d {
        let q = haar_from_rng(&mut rng, d);
        theta.columns_mut(block * d, d).copy_from(&q);
    }
    Ok(uniform_rule(d, theta, SphericalKind::Omc))
}

/// Blocks `B_1, -B_1, B_2, -B_2, …` of independent Haar matrices.
pub fn sample_sphere_somc(d: usize, m_s: usize, seed: RngSeed) -> Result<SphericalRule> {
    check_dimension(d)?;
    check_count(NodeKind::Somc, d, m_s)?;
    let mut rng = seed.rng();
    let mut theta = DMatrix::<f64>::zeros(d, m_s);
    for pair in 0..m_s / (2 * d) {
        let q = haar_from_rng(&mut rng, d);
        theta.columns_mut(2 * pair * d, d).copy_from(&q);
        theta.columns_mut((2 * pair + 1) * d, d).copy_from(&(-q));
    }
    Ok(uniform_rule(d, theta, SphericalKind::Somc))
}

/// Dispatches on the node kind.
pub fn sample_sphere(kind: NodeKind, d: usize, m_s: usize, seed: RngSeed) -> Result<SphericalRule> {
    match kind {
        NodeKind::Mc => sample_sphere_mc(d, m_s, seed),
        NodeKind::Omc => sample_sphere_omc(d, m_s, seed),
        NodeKind::Somc => sample_sphere_somc(d, m_s, seed),
    }
}

fn uniform_rule(d: usize, theta: DMatrix<f64>, kind: SphericalKind) -> SphericalRule {
    let m = theta.ncols();
    SphericalRule {
        d,
        theta,
        b: vec![1.0 / m as f64; m],
        kind,
    }
}

/// Gram matrix of `κ_S(θ, θ') = exp(-‖θ - θ'‖² / (2 s²))` over the nodes.
pub fn sphere_gram(theta: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let m = theta.ncols();
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut k = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let sq: f64 = theta
                .column(i)
                .iter()
                .zip(theta.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-sq * inv).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Kernel mean `μ = ∫ κ_S(θ, θ') dπ(θ')`, constant in `θ` by rotation
/// invariance; evaluated as a one-dimensional projected integral.
pub fn sphere_kernel_mean(d: usize, bandwidth: f64) -> Result<f64> {
    check_dimension(d)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::Domain(format!(
            "sphere bandwidth must be positive, got {bandwidth}"
        )));
    }
    let s2 = bandwidth * bandwidth;
    hecke_funk(d, |t| (-(1.0 - t) / s2).exp(), 1e-12)
}

/// Default diagonal regularization for the OKQ solve.
pub fn default_jitter(m_s: usize) -> f64 {
    1e-10 * m_s as f64
}

/// Replaces the weights of `rule` by the optimal kernel quadrature weights,
/// the solution of `(K_S + jitter·I) w = μ·1`.
///
/// The weights are returned with their sign; nothing forces them positive.
pub fn okq_weights(rule: &SphericalRule, bandwidth: f64, jitter: f64) -> Result<SphericalRule> {
    if !(jitter >= 0.0) {
        return Err(Error::Domain(format!(
            "jitter must be nonnegative, got {jitter}"
        )));
    }
    let mu = sphere_kernel_mean(rule.d, bandwidth)?;
    let m = rule.len();
    let mut k = sphere_gram(&rule.theta, bandwidth);
    for i in 0..m {
        k[(i, i)] += jitter;
    }
    let chol = k.cholesky().ok_or_else(|| {
        Error::Solve(format!(
            "sphere Gram matrix of {m} nodes is not numerically positive definite with \
             jitter {jitter:e}; increase the jitter or remove duplicate nodes"
        ))
    })?;
    let w = chol.solve(&DVector::from_element(m, mu));
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solve("OKQ solve produced non-finite weights".into()));
    }
    Ok(SphericalRule {
        d: rule.d,
        theta: rule.theta.clone(),
        b: w.iter().copied().collect(),
        kind: SphericalKind::Okq {
            base: rule.kind.base(),
            bandwidth,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orthopoly::gegenbauer;

    fn max_orthogonality_defect(b: &DMatrix<f64>) -> f64 {
        let g = b.transpose() * b;
        let id = DMatrix::<f64>::identity(b.ncols(), b.ncols());
        (g - id).amax()
    }

    #[test]
    fn mc_single_node() {
        let r = sample_sphere_mc(5, 1, RngSeed::new(3, 0)).unwrap();
        assert_eq!(r.b, vec![1.0]);
        assert!((r.theta.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_stream() {
        let a = sample_sphere_omc(4, 8, RngSeed::new(7, 2)).unwrap();
        let b = sample_sphere_omc(4, 8, RngSeed::new(7, 2)).unwrap();
        let c = sample_sphere_omc(4, 8, RngSeed::new(7, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.theta, c.theta);
    }

    #[test]
    fn haar_is_orthogonal() {
        for d in [2usize, 5, 17] {
            let q = sample_haar_orthogonal(d, RngSeed::new(11, d as u64)).unwrap();
            assert!(max_orthogonality_defect(&q) < 1e-12);
        }
    }

    #[test]
    fn omc_blocks_and_p2_cancellation() {
        let d = 6;
        let r = sample_sphere_omc(d, 3 * d, RngSeed::new(1, 1)).unwrap();
        for blk in 0..3 {
            assert!(max_orthogonality_defect(&r.theta.columns(blk * d, d).into_owned()) < 1e-10);
        }
        let v = sample_unit_vector(&mut RngSeed::new(99, 0).rng(), d);
        let block = sample_sphere_omc(d, d, RngSeed::new(5, 0)).unwrap();
        let s: f64 = block
            .theta
            .column_iter()
            .map(|c| gegenbauer(2, d, dot(&v, c.as_slice()).clamp(-1.0, 1.0)).unwrap())
            .sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn somc_is_antipodal() {
        let d = 3;
        let r = sample_sphere_somc(d, 4 * d, RngSeed::new(2, 0)).unwrap();
        for pair in 0..2 {
            let a = r.theta.columns(2 * pair * d, d);
            let b = r.theta.columns((2 * pair + 1) * d, d);
            assert_eq!(a.into_owned(), -b.into_owned());
        }
        let v = [0.6, 0.0, 0.8];
        let s: f64 = r.theta.column_iter().map(|c| dot(&v, c.as_slice())).sum();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn divisibility_errors_name_the_multiple() {
        let err = sample_sphere_omc(4, 6, RngSeed::new(0, 0)).unwrap_err();
        assert!(err.to_string().contains("multiple of 4"));
        let err = sample_sphere_somc(4, 4, RngSeed::new(0, 0)).unwrap_err();
        assert!(err.to_string().contains("multiple of 8"));
    }

    #[test]
    fn okq_single_node_weight_is_mu() {
        let r = sample_sphere_mc(4, 1, RngSeed::new(0, 0)).unwrap();
        let okq = okq_weights(&r, 1.0, 0.0).unwrap();
        let mu = sphere_kernel_mean(4, 1.0).unwrap();
        assert!((okq.b[0] - mu).abs() < 1e-15);
        assert!(matches!(
            okq.kind,
            SphericalKind::Okq {
                base: NodeKind::Mc,
                ..
            }
        ));
    }

    #[test]
    fn okq_antipodal_pair_has_equal_weights() {
        let theta = DMatrix::from_column_slice(3, 2, &[0.0, 0.6, 0.8, 0.0, -0.6, -0.8]);
        let rule = SphericalRule {
            d: 3,
            theta,
            b: vec![0.5, 0.5],
            kind: SphericalKind::Mc,
        };
        let okq = okq_weights(&rule, 0.7, 1e-10).unwrap();
        assert!((okq.b[0] - okq.b[1]).abs() < 1e-14);
    }

    /// Squared worst-case error `μ - 2μ Σw + wᵀKw` in the sphere RKHS.
    fn worst_case_error_sq(rule: &SphericalRule, bandwidth: f64) -> f64 {
        let mu = sphere_kernel_mean(rule.d, bandwidth).unwrap();
        let k = sphere_gram(&rule.theta, bandwidth);
        let w = DVector::from_column_slice(&rule.b);
        mu - 2.0 * mu * w.sum() + (w.transpose() * k * &w)[(0, 0)]
    }

    #[test]
    fn okq_minimizes_worst_case_error() {
        for m_s in [8usize, 16, 32] {
            let r = sample_sphere_omc(4, m_s, RngSeed::new(21, m_s as u64)).unwrap();
            let okq = okq_weights(&r, 1.0, 0.0).unwrap();
            let base = worst_case_error_sq(&r, 1.0);
            let opt = worst_case_error_sq(&okq, 1.0);
            assert!(opt <= base + 1e-12, "{opt} > {base}");
            let mut perturbed = okq.clone();
            perturbed.b[0] += 1e-3;
            assert!(worst_case_error_sq(&perturbed, 1.0) > opt);
        }
    }

    #[test]
    fn kernel_mean_closed_form_d3() {
        // d = 3: μ = (s²/2)(1 - e^{-2/s²}).
        for &s in &[0.5, 1.0, 2.0] {
            let s2: f64 = s * s;
            let expect = s2 / 2.0 * (1.0 - (-2.0 / s2).exp());
            assert!((sphere_kernel_mean(3, s).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_gram_is_psd() {
        let r = sample_sphere_mc(4, 40, RngSeed::new(4, 0)).unwrap();
        let k = sphere_gram(&r.theta, 1.0);
        let eig = nalgebra::SymmetricEigen::new(k.clone());
        assert!(eig.eigenvalues.min() >= -1e-8);
        assert_eq!(k, k.transpose());
    }
}
