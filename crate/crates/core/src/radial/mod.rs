//! Generalized Gauss-Laguerre rule for the radial density
//! `p_Ξ(ξ) = ξ^{d/2-1} e^{-ξ} / Γ(d/2)` and the spherical average `f̄`.
//!
//! Nodes come from the Jacobi matrix of the normalized Laguerre family
//! (Golub-Welsch). A node `ξ` maps to the frequency radius `√(2ξ)/σ`.

pub mod tridiag;

use crate::error::{Error, Result};
use crate::orthopoly::{sphere_average, PolyParams};

pub use tridiag::{symmetric_tridiagonal_eigen, TridiagEigen};

/// Dimension and bandwidth of `κ_σ(x, y) = exp(-‖x - y‖² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub d: usize,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(d: usize, sigma: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!(
                "dimension must be at least 2, got {d}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!(
                "bandwidth must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { d, sigma })
    }

    /// `‖x - y‖² / (2σ²)` for a pair at distance `dist`.
    pub fn c2(&self, dist: f64) -> f64 {
        dist * dist / (2.0 * self.sigma * self.sigma)
    }

    /// Exact kernel value at distance `dist`.
    pub fn kernel_at(&self, dist: f64) -> f64 {
        (-self.c2(dist)).exp()
    }

    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (-sq / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// `M_R`-point Gaussian rule for `p_Ξ`; nodes ascending, weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    pub order: usize,
    pub xi: Vec<f64>,
    pub a: Vec<f64>,
    pub alpha: f64,
    pub d: usize,
}

impl RadialRule {
    /// Applies the rule to `g`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.xi.iter().zip(&self.a).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Builds the rule from the Jacobi matrix with diagonal `2i - 1 + α` and
/// off-diagonal `√(i(i + α))`, `α = d/2 - 1`.
pub fn gauss_laguerre(d: usize, order: usize) -> Result<RadialRule> {
    let params = PolyParams::from_dimension(d)?;
    if order == 0 {
        return Err(Error::Domain("radial order must be at least 1".into()));
    }
    let alpha = params.alpha;
    let diag: Vec<f64> = (1..=order).map(|i| 2.0 * i as f64 - 1.0 + alpha).collect();
    let off: Vec<f64> = (1..order)
        .map(|i| (i as f64 * (i as f64 + alpha)).sqrt())
        .collect();
    let eig = symmetric_tridiagonal_eigen(&diag, &off)?;
    let raw: Vec<f64> = eig.first_components.iter().map(|z| z * z).collect();
    let total: f64 = raw.iter().sum();
    Ok(RadialRule {
        order,
        xi: eig.values,
        a: raw.iter().map(|w| w / total).collect(),
        alpha,
        d,
    })
}

/// Frequency radii `r_i = √(2ξ_i) / σ`, in node order.
pub fn radii(rule: &RadialRule, spec: &KernelSpec) -> Result<Vec<f64>> {
    if rule.d != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: rule.d,
        });
    }
    Ok(rule
        .xi
        .iter()
        .map(|&x| (2.0 * x).sqrt() / spec.sigma)
        .collect())
}

// Once a term exceeds this size the alternating sum has lost two digits to
// cancellation and the average is taken by quadrature on the sphere instead.
const MAX_SERIES_TERM: f64 = 1e2;

/// Spherical average `f̄(ξ) = Σ_n β_n ξ^n` with `β_n` built from `c2`.
///
/// The series is summed until the ratio-test remainder falls below `tol`.
/// When some term `|β_n ξ^n|` exceeds `MAX_SERIES_TERM` the alternating sum
/// loses too many digits, and the equivalent one-dimensional integral of
/// `cos(2√(c2 ξ) t)` over the projected sphere measure is used instead.
pub fn f_bar(d: usize, c2: f64, xi: f64, tol: f64) -> Result<f64> {
    PolyParams::from_dimension(d)?;
    if !(c2 >= 0.0) || !(xi >= 0.0) || !c2.is_finite() || !xi.is_finite() {
        return Err(Error::Domain(format!(
            "f_bar needs finite c2, xi >= 0, got {c2}, {xi}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let z = c2 * xi;
    if z == 0.0 {
        return Ok(1.0);
    }
    match f_bar_series(d, z, tol) {
        Some(v) => Ok(v),
        None => sphere_average(d, 2.0 * z.sqrt(), tol),
    }
}

fn f_bar_series(d: usize, z: f64, tol: f64) -> Option<f64> {
    let half_d = d as f64 / 2.0;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut largest = 1.0f64;
    for n in 1..10_000usize {
        let nf = n as f64;
        term *= -z / (nf * (half_d + nf - 1.0));
        sum += term;
        largest = largest.max(term.abs());
        if largest > MAX_SERIES_TERM {
            return None;
        }
        let ratio = z / ((nf + 1.0) * (half_d + nf));
        if ratio < 0.5 {
            let remainder = term.abs() * ratio / (1.0 - ratio);
            if remainder < tol {
                return Some(sum.clamp(-1.0, 1.0));
            }
        }
    }
    None
}

/// Signed radial error `∫ f̄ p_Ξ - Σ a_i f̄(ξ_i)` for a pair at distance `dist`.
///
/// The reference integral is the kernel value `exp(-c²)`, `c² = dist²/(2σ²)`.
pub fn radial_quadrature_error(rule: &RadialRule, spec: &KernelSpec, dist: f64) -> Result<f64> {
    if rule.d != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: rule.d,
        });
    }
    if !(dist >= 0.0) || !dist.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be finite and nonnegative, got {dist}"
        )));
    }
    if dist == 0.0 {
        return Ok(0.0);
    }
    let c2 = spec.c2(dist);
    let mut quad = 0.0;
    for (&x, &w) in rule.xi.iter().zip(&rule.a) {
        quad += w * f_bar(spec.d, c2, x, 1e-16)?;
    }
    Ok((-c2).exp() - quad)
}

/// The radial error expanded over monomials,
/// `Σ_{n ≥ 2M_R} β_n (E[ξ^n] - Σ_i a_i ξ_i^n)`.
///
/// Mathematically equal to [`radial_quadrature_error`], but free of the
/// cancellation between two numbers near `exp(-c²)`, so it stays accurate
/// after the direct difference has reached rounding level. Terms below the
/// rule's exactness degree vanish identically and are skipped.
pub fn radial_quadrature_error_by_moments(
    rule: &RadialRule,
    spec: &KernelSpec,
    dist: f64,
) -> Result<f64> {
    if rule.d != spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.d,
            got: rule.d,
        });
    }
    let c2 = spec.c2(dist);
    if c2 == 0.0 {
        return Ok(0.0);
    }
    let half_d = spec.d as f64 / 2.0;
    // β_n · E[ξ^n] = (-c2)^n / n!, and β_n ξ_i^n is carried per node.
    let mut exact_term = 1.0f64;
    let mut node_terms = vec![1.0f64; rule.order];
    let mut total = 0.0;
    for n in 1..10_000usize {
        let nf = n as f64;
        exact_term *= -c2 / nf;
        let step = -c2 / (nf * (half_d + nf - 1.0));
        for (t, &x) in node_terms.iter_mut().zip(&rule.xi) {
            *t *= step * x;
        }
        if n >= 2 * rule.order {
            let quad: f64 = node_terms.iter().zip(&rule.a).map(|(t, w)| w * t).sum();
            let contribution = exact_term - quad;
            total += contribution;
            let bound = exact_term.abs() + quad.abs();
            if bound <= 1e-18 * total.abs().max(f64::MIN_POSITIVE) && nf > c2 {
                break;
            }
        }
    }
    Ok(total)
}
