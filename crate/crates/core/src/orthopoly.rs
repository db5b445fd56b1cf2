//! Special functions behind the construction and its error analysis.
//!
//! * normalized generalized Laguerre polynomials `ℓ_m^α`, orthonormal for the
//!   Gamma(α+1, 1) density;
//! * Gegenbauer polynomials `P_k` on `S^{d-1}`, normalized so `P_k(1) = 1`;
//! * the spherical-harmonic dimension `N(d, k)`;
//! * the power-series coefficients `β_n` of the spherical average `f̄`, and
//!   the Gegenbauer coefficients `λ_k` of the plane wave `cos(β⟨v, ·⟩)`.
//!
//! Every ratio of Gamma functions is formed in log space.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::integrate::integrate;

/// Laguerre order and ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyParams {
    pub alpha: f64,
    pub d: usize,
}

impl PolyParams {
    /// Parameters attached to dimension `d`: `α = d/2 - 1`.
    pub fn from_dimension(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!(
                "dimension must be at least 2, got {d}"
            )));
        }
        Ok(Self {
            alpha: d as f64 / 2.0 - 1.0,
            d,
        })
    }
}

/// Truncated coefficient sequence with a bound on what was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoeffs {
    pub values: Vec<f64>,
    pub truncation_index: usize,
    pub tail_bound: f64,
}

/// `ℓ_m^α(x)` by the three-term recurrence on the normalized family.
pub fn laguerre_normalized(m: usize, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!(
            "Laguerre order must exceed -1, got {alpha}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "Laguerre argument must be nonnegative, got {x}"
        )));
    }
    let mut prev = 1.0;
    if m == 0 {
        return Ok(prev);
    }
    let mut cur = (1.0 + alpha - x) / (1.0 + alpha).sqrt();
    for n in 1..m {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + alpha - x) * cur - (nf * (nf + alpha)).sqrt() * prev)
            / ((nf + 1.0) * (nf + alpha + 1.0)).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Gegenbauer polynomial `P_k(t)` for `S^{d-1}`, with `P_k(1) = 1`.
pub fn gegenbauer(k: usize, d: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain(format!(
            "Gegenbauer argument must lie in [-1, 1], got {t}"
        )));
    }
    Ok(gegenbauer_unchecked(k, d, t))
}

pub(crate) fn gegenbauer_unchecked(k: usize, d: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = t;
    let df = d as f64;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + df - 2.0) * t * cur - jf * prev) / (jf + df - 2.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `N(d, k)`, the dimension of degree-`k` spherical harmonics on `S^{d-1}`.
///
/// Evaluated in exact integer arithmetic; fails with [`Error::Overflow`] when
/// the count does not fit in a `u64`.
pub fn harmonic_dim(d: usize, k: usize) -> Result<u64> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    if k == 0 {
        return Ok(1);
    }
    let overflow = || Error::Overflow(format!("N({d}, {k}) exceeds the u64 range"));
    // C(k + d - 3, d - 2) by the multiplicative formula; each partial product
    // is itself a binomial coefficient, so the division is exact.
    let top = (k + d - 3) as u128;
    let choose = (d - 2) as u128;
    let mut binom: u128 = 1;
    for i in 0..choose {
        binom = binom.checked_mul(top - i).ok_or_else(overflow)? / (i + 1);
    }
    let n = binom
        .checked_mul((2 * k + d - 2) as u128)
        .ok_or_else(overflow)?
        / k as u128;
    u64::try_from(n).map_err(|_| overflow())
}

/// `ln N(d, k)` through log-gamma; usable far beyond the `u64` range.
pub fn ln_harmonic_dim(d: usize, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (df, kf) = (d as f64, k as f64);
    (2.0 * kf + df - 2.0).ln() - kf.ln() + ln_gamma(kf + df - 2.0)
        - ln_gamma(df - 1.0)
        - ln_gamma(kf)
}

/// Coefficients `β_n = (-c2)^n Γ(d/2) / (n! Γ(d/2 + n))` for `n ≤ n_max`.
///
/// `c2 = ‖x - y‖² / (2σ²)`. The Gamma ratio is carried as the running
/// product `β_n = β_{n-1} · (-c2) / (n (d/2 + n - 1))`, which never forms a
/// Gamma value and keeps full relative precision. The tail bound covers
/// `Σ_{n > n_max} |β_n|`.
pub fn beta_coeffs(d: usize, c2: f64, n_max: usize) -> Result<SeriesCoeffs> {
    PolyParams::from_dimension(d)?;
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::Domain(format!(
            "c2 must be finite and nonnegative, got {c2}"
        )));
    }
    let half_d = d as f64 / 2.0;
    let step = |n: usize| -c2 / (n as f64 * (half_d + n as f64 - 1.0));
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(1.0);
    for n in 1..=n_max {
        values.push(values[n - 1] * step(n));
    }
    let next = (values[n_max] * step(n_max + 1)).abs();
    // Ratio test from n_max + 1 on; otherwise the exponential-truncation
    // envelope Σ_{n>N} c2^n/n! ≤ c2^{N+1} e^{c2}/(N+1)!.
    let ratio = c2 / ((n_max as f64 + 2.0) * (half_d + n_max as f64 + 1.0));
    let mut tail_bound = next * c2.exp();
    if ratio < 1.0 {
        tail_bound = tail_bound.min(next / (1.0 - ratio));
    }
    Ok(SeriesCoeffs {
        values,
        truncation_index: n_max,
        tail_bound,
    })
}

/// `Γ(d/2) / (√π Γ((d-1)/2))`, the normalizing constant of the projected
/// uniform measure on `[-1, 1]`.
pub fn hecke_funk_constant(d: usize) -> f64 {
    let df = d as f64;
    (ln_gamma(df / 2.0) - ln_gamma((df - 1.0) / 2.0)).exp() / PI.sqrt()
}

/// `Γ(d/2)/(√π Γ((d-1)/2)) ∫_{-1}^{1} g(t) (1 - t²)^{(d-3)/2} dt`.
///
/// Integrated in the angle `t = cos φ`, which turns the weight into
/// `sin^{d-2} φ` and removes the endpoint singularity at `d = 2`.
pub fn hecke_funk<G: Fn(f64) -> f64>(d: usize, g: G, tol: f64) -> Result<f64> {
    PolyParams::from_dimension(d)?;
    let power = (d - 2) as i32;
    let constant = hecke_funk_constant(d);
    let integral = integrate(
        |phi: f64| g(phi.cos()) * phi.sin().powi(power),
        0.0,
        PI,
        tol / constant,
    )?;
    Ok(constant * integral.value)
}

/// `λ_k = c_d ∫ cos(βt) P_k(t) (1-t²)^{(d-3)/2} dt` for `k ≤ k_max`.
///
/// Odd entries are exactly zero. The tail bound covers
/// `Σ_{k > k_max} N(d,k) |λ_k|`, the sup-norm of the dropped part of the
/// harmonic expansion, through the envelope [`lambda_bound`].
pub fn lambda_coeffs(d: usize, beta: f64, k_max: usize, tol: f64) -> Result<SeriesCoeffs> {
    PolyParams::from_dimension(d)?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut values = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        values.push(lambda_single(d, beta, k, tol)?);
    }
    Ok(SeriesCoeffs {
        values,
        truncation_index: k_max,
        tail_bound: lambda_tail_envelope(d, beta, k_max + 1, 1),
    })
}

/// One Gegenbauer coefficient of `cos(β⟨v, ·⟩)`.
pub fn lambda_single(d: usize, beta: f64, k: usize, tol: f64) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    if beta == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    hecke_funk(d, |t| (beta * t).cos() * gegenbauer_unchecked(k, d, t), tol)
}

/// Spherical average of `cos(β⟨v, θ⟩)` over `θ ∈ S^{d-1}`, i.e. `λ_0`.
pub fn sphere_average(d: usize, beta: f64, tol: f64) -> Result<f64> {
    lambda_single(d, beta, 0, tol)
}

/// `ln` of `Γ((d-1)/2) / Γ(k + (d-1)/2) · (β/2)^k`.
pub fn ln_lambda_bound(d: usize, k: usize, beta: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if beta == 0.0 {
        return f64::NEG_INFINITY;
    }
    let h = (d as f64 - 1.0) / 2.0;
    ln_gamma(h) - ln_gamma(k as f64 + h) + k as f64 * (beta / 2.0).ln()
}

/// Envelope `|λ_k| ≤ Γ((d-1)/2) / Γ(k + (d-1)/2) · (β/2)^k`.
pub fn lambda_bound(d: usize, k: usize, beta: f64) -> f64 {
    ln_lambda_bound(d, k, beta).exp()
}

/// Bound on `Σ_{k ≥ k_start, k even} N(d,k) · bound_k^power`.
///
/// Terms are summed until the ratio of consecutive even terms has dropped
/// below 1/2 and the remainder is geometrically negligible.
pub(crate) fn lambda_tail_envelope(d: usize, beta: f64, k_start: usize, power: i32) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let p = power as f64;
    let ln_term = |k: usize| ln_harmonic_dim(d, k) + p * ln_lambda_bound(d, k, beta);
    let mut k = k_start + (k_start % 2);
    let mut total = 0.0;
    let mut prev = ln_term(k);
    total += prev.exp();
    for _ in 0..100_000 {
        k += 2;
        let cur = ln_term(k);
        let ratio = (cur - prev).exp();
        total += cur.exp();
        if ratio < 0.5 {
            let remainder = cur.exp() * ratio / (1.0 - ratio);
            if remainder <= 1e-17 * total || remainder == 0.0 {
                return total + remainder;
            }
        }
        prev = cur;
    }
    f64::INFINITY
}
