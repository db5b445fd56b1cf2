//! Library values against oracles computed independently in this file.

use std::f64::consts::PI;

use srff::analysis::{bound_thm1_terms, bound_thm2_terms, harmonic_energy, mc_error_series};
use srff::orthopoly::{
    gegenbauer, harmonic_dim, laguerre_normalized, lambda_single, sphere_average,
};
use srff::radial::{f_bar, gauss_laguerre, radial_quadrature_error, KernelSpec};
use srff::spherical::{sample_haar_orthogonal, sample_sphere_mc, sphere_kernel_mean, RngSeed};

/// Γ(x) for positive integers and half-integers.
fn gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    assert!(twice > 0 && (2.0 * x - twice as f64).abs() < 1e-12);
    let (mut g, mut t) = if twice % 2 == 0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while t < x - 1e-9 {
        g *= t;
        t += 1.0;
    }
    g
}

/// Gegenbauer coefficient of `cos(β⟨v,·⟩)` from the Bessel series of
/// `J_{k+d/2-1}`.
fn lambda_bessel(d: usize, beta: f64, k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let h = beta / 2.0;
    let nu1 = d as f64 / 2.0;
    let mut sum = 0.0;
    let mut fact = 1.0;
    for m in 0..60 {
        if m > 0 {
            fact *= m as f64;
        }
        let term = (-1f64).powi(m) * h.powi(2 * m) / (fact * gamma_half(m as f64 + k as f64 + nu1));
        sum += term;
    }
    let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * gamma_half(nu1) * h.powi(k as i32) * sum
}

/// Spherical Bessel `j_k` by its power series.
fn spherical_bessel(k: usize, x: f64) -> f64 {
    let mut dfact = 1.0;
    for i in (1..=2 * k + 1).step_by(2) {
        dfact *= i as f64;
    }
    let mut term = x.powi(k as i32) / dfact;
    let mut sum = term;
    for m in 1..60 {
        term *= -x * x / (2.0 * m as f64 * (2 * k + 2 * m + 1) as f64);
        sum += term;
    }
    sum
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn binomial_real(top: f64, n: usize) -> f64 {
    (1..=n)
        .map(|i| (top - n as f64 + i as f64) / i as f64)
        .product()
}

#[test]
fn laguerre_orthonormal_alpha_one() {
    let alpha = 1.0;
    for m in 0..=8 {
        for n in m..=8 {
            let ip = simpson(
                |x| {
                    laguerre_normalized(m, alpha, x).unwrap()
                        * laguerre_normalized(n, alpha, x).unwrap()
                        * x
                        * (-x).exp()
                },
                0.0,
                120.0,
                40_000,
            );
            let expect = if m == n { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-9, "m={m} n={n}: {ip}");
        }
    }
}

#[test]
fn laguerre_matches_explicit_sum() {
    // L_n^α(x) = Σ_i (-1)^i C(n+α, n-i) x^i / i!, norm² = Γ(n+α+1)/(n! Γ(α+1)).
    for &alpha in &[0.0, 0.5, 1.0, 2.5] {
        for n in 0..=6 {
            for &x in &[0.1f64, 1.3, 5.0] {
                let mut l = 0.0;
                let mut ifact = 1.0;
                for i in 0..=n {
                    if i > 0 {
                        ifact *= i as f64;
                    }
                    l += (-1f64).powi(i as i32)
                        * binomial_real(n as f64 + alpha, n - i)
                        * x.powi(i as i32)
                        / ifact;
                }
                let norm2 = binomial_real(n as f64 + alpha, n);
                let got = laguerre_normalized(n, alpha, x).unwrap();
                assert!(
                    (got - l / norm2.sqrt()).abs() < 1e-11 * (1.0 + got.abs()),
                    "α={alpha} n={n} x={x}"
                );
            }
        }
    }
}

#[test]
fn laguerre_moment_identity() {
    // ∫ x^{α'-1} e^{-x} L_n^α dx = C(α - α' + n, n) Γ(α'), integrated with the
    // Gauss rule for exponent α' - 1 (dimension 2α').
    for alpha in 0..=3usize {
        for alpha_p in 1..=4usize {
            let rule = gauss_laguerre(2 * alpha_p, 6).unwrap();
            for n in 0..=6usize {
                let scale = binomial_real((n + alpha) as f64, n).sqrt();
                let integral: f64 = rule
                    .xi
                    .iter()
                    .zip(&rule.a)
                    .map(|(&x, &a)| a * scale * laguerre_normalized(n, alpha as f64, x).unwrap())
                    .sum::<f64>()
                    * gamma_half(alpha_p as f64);
                let expect = binomial_real(alpha as f64 - alpha_p as f64 + n as f64, n)
                    * gamma_half(alpha_p as f64);
                assert!(
                    (integral - expect).abs() < 1e-9 * (1.0 + expect.abs()),
                    "α={alpha} α'={alpha_p} n={n}: {integral} vs {expect}"
                );
            }
        }
    }
}

#[test]
fn gauss_laguerre_nodes_are_laguerre_roots() {
    for d in [2usize, 3, 7] {
        let alpha = d as f64 / 2.0 - 1.0;
        for m in 1..=8 {
            let rule = gauss_laguerre(d, m).unwrap();
            for &x in &rule.xi {
                let mut l = 0.0;
                let mut scale = 0.0f64;
                let mut ifact = 1.0;
                for i in 0..=m {
                    if i > 0 {
                        ifact *= i as f64;
                    }
                    let t = (-1f64).powi(i as i32)
                        * binomial_real(m as f64 + alpha, m - i)
                        * x.powi(i as i32)
                        / ifact;
                    l += t;
                    scale = scale.max(t.abs());
                }
                assert!(l.abs() < 1e-10 * scale, "d={d} m={m} x={x}");
            }
        }
    }
}

#[test]
fn gegenbauer_classical_cases() {
    for &t in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
        // d = 3: Legendre.
        assert!((gegenbauer(2, 3, t).unwrap() - (3.0 * t * t - 1.0) / 2.0).abs() < 1e-14);
        let p4 = (35.0 * t.powi(4) - 30.0 * t * t + 3.0) / 8.0;
        assert!((gegenbauer(4, 3, t).unwrap() - p4).abs() < 1e-14);
        // d = 4: U_k(t) / (k + 1).
        let phi = f64::acos(t);
        for k in 0..8 {
            let u = ((k + 1) as f64 * phi).sin() / phi.sin();
            assert!((gegenbauer(k, 4, t).unwrap() - u / (k + 1) as f64).abs() < 1e-13);
        }
        // d = 2: Chebyshev T_k.
        for k in 0..8 {
            assert!((gegenbauer(k, 2, t).unwrap() - (k as f64 * phi).cos()).abs() < 1e-13);
        }
    }
}

#[test]
fn harmonic_dim_by_pascal() {
    let mut c = vec![vec![0u128; 80]; 80];
    for n in 0..80 {
        c[n][0] = 1;
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + c[n - 1][k];
        }
    }
    for d in 2..20usize {
        for k in 0..40usize {
            // Homogeneous polynomials of degree k minus those of degree k - 2.
            let all = c[k + d - 1][d - 1];
            let lower = if k >= 2 { c[k + d - 3][d - 1] } else { 0 };
            assert_eq!(
                harmonic_dim(d, k).unwrap() as u128,
                all - lower,
                "d={d} k={k}"
            );
        }
    }
}

#[test]
fn lambda_matches_bessel() {
    for d in [2usize, 3, 4, 5, 8, 16] {
        for &beta in &[0.3, 1.0, 2.5] {
            for k in 0..=10 {
                let got = lambda_single(d, beta, k, 1e-14).unwrap();
                let want = lambda_bessel(d, beta, k);
                assert!(
                    (got - want).abs() < 1e-12,
                    "d={d} β={beta} k={k}: {got} vs {want}"
                );
            }
        }
    }
    for k in (0..=10usize).step_by(2) {
        let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let got = lambda_single(3, 1.0, k, 1e-14).unwrap();
        assert!((got - sign * spherical_bessel(k, 1.0)).abs() < 1e-14);
    }
}

#[test]
fn mc_series_against_spherical_bessel_sum() {
    let direct: f64 = (1..40)
        .map(|m| {
            let k = 2 * m;
            (2 * k + 1) as f64 * spherical_bessel(k, 1.0).powi(2)
        })
        .sum();
    let closed = 0.5 * (1.0 + 2f64.sin() / 2.0) - 1f64.sin().powi(2);
    assert!((direct - closed).abs() < 1e-15);
    let series = mc_error_series(3, 1.0, 1, 2, 1.0).unwrap();
    assert!((series - direct).abs() < 1e-12 * direct);
    let block = mc_error_series(8, 1.0, 8, 4, 3.0).unwrap();
    let oracle: f64 = (2..30)
        .map(|m| {
            let k = 2 * m;
            harmonic_dim(8, k).unwrap() as f64 * lambda_bessel(8, 1.0, k).powi(2)
        })
        .sum::<f64>()
        * 3.0
        / 8.0;
    assert!((block - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn parseval_energy() {
    for d in [2usize, 3, 6] {
        for &beta in &[0.5, 1.5, 3.0] {
            let e = harmonic_energy(d, beta, 0).unwrap();
            let want = 0.5 * (1.0 + lambda_bessel(d, 2.0 * beta, 0));
            assert!((e - want).abs() < 1e-11, "d={d} β={beta}");
        }
    }
}

#[test]
fn f_bar_is_sphere_average() {
    // f̄(ξ) = λ_0(2√(c2 ξ)); against the Bessel series.
    for d in [2usize, 3, 4, 9] {
        for &(c2, xi) in &[(0.1f64, 0.5f64), (0.5, 2.0), (1.0, 6.0), (0.25, 30.0)] {
            let beta: f64 = 2.0 * (c2 * xi).sqrt();
            let want = lambda_bessel(d, beta, 0);
            assert!(
                (f_bar(d, c2, xi, 1e-15).unwrap() - want).abs() < 1e-12,
                "d={d}"
            );
            assert!((sphere_average(d, beta, 1e-15).unwrap() - want).abs() < 1e-12);
        }
    }
}

#[test]
fn radial_error_against_direct_sum() {
    // d = 2: f̄ = J_0, the exact integral is e^{-c²}.
    let spec = KernelSpec::new(2, 1.0).unwrap();
    for m_r in 1..=5 {
        let rule = gauss_laguerre(2, m_r).unwrap();
        let approx: f64 = rule
            .xi
            .iter()
            .zip(&rule.a)
            .map(|(&x, &a)| a * lambda_bessel(2, 2.0 * (0.5 * x).sqrt(), 0))
            .sum();
        let want = (-0.5f64).exp() - approx;
        let got = radial_quadrature_error(&rule, &spec, 1.0).unwrap();
        assert!((got - want).abs() < 1e-14, "M_R={m_r}");
    }
}

#[test]
fn bounds_against_direct_formulas() {
    let mut rng = RngSeed::new(77, 0).rng();
    use rand::Rng;
    for _ in 0..10 {
        let d: usize = rng.random_range(2..40);
        let m_r: usize = rng.random_range(1..6);
        let m_s: usize = rng.random_range(1..200);
        let c: f64 = rng.random_range(0.05..0.6);
        let l: f64 = rng.random_range(0.5..3.0);
        let a = (4 * m_r + d) as f64 / (d as f64 - 1.0);
        let p = (2 * m_r - 1) as f64;
        let radial = 2.0 * l * c * c / gamma_half(d as f64 / 2.0).sqrt() * (c * c / p).powf(p);
        let e = (4.0 * a * c * c).exp();
        let s1 = 2.0 * (8.0 / m_s as f64) * a * a * c.powi(4) * e;
        let s2 = 2.0 * (2.0 / m_s as f64) * a.powi(4) * c.powi(8) * e;
        let t1 = bound_thm1_terms(d, m_r, m_s, c, l).unwrap();
        let t2 = bound_thm2_terms(d, m_r, m_s, c, l).unwrap();
        for (got, want) in [
            (t1.radial, radial),
            (t1.spherical, s1),
            (t2.spherical, s2),
            (t1.total, radial + s1),
            (t2.total, radial + s2),
        ] {
            assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
        }
    }
}

#[test]
fn kernel_mean_by_simpson() {
    // μ = c_d ∫ e^{-(1-t)/s²} (1-t²)^{(d-3)/2} dt, here in the angle variable.
    for d in [2usize, 4, 7] {
        for &s in &[0.5, 1.0, 1.7] {
            let num = simpson(
                |phi: f64| (-(1.0 - phi.cos()) / (s * s)).exp() * phi.sin().powi(d as i32 - 2),
                0.0,
                PI,
                20_000,
            );
            let den = simpson(|phi: f64| phi.sin().powi(d as i32 - 2), 0.0, PI, 20_000);
            assert!((sphere_kernel_mean(d, s).unwrap() - num / den).abs() < 1e-10);
        }
    }
}

#[test]
fn haar_first_coordinate_ks() {
    let d = 4;
    let n = 4000;
    let mut xs: Vec<f64> = (0..n)
        .map(|s| sample_haar_orthogonal(d, RngSeed::new(5, s)).unwrap()[(0, 0)])
        .collect();
    xs.sort_by(f64::total_cmp);
    let cdf = |t: f64| (t * (1.0 - t * t).sqrt() + t.asin() + PI / 2.0) / PI;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.95 / (n as f64).sqrt(), "KS statistic {ks}");
}

#[test]
fn haar_determinant_signs_balanced() {
    let n = 4000;
    let positive = (0..n)
        .filter(|&s| {
            sample_haar_orthogonal(3, RngSeed::new(6, s))
                .unwrap()
                .determinant()
                > 0.0
        })
        .count();
    let frac = positive as f64 / n as f64;
    assert!(
        (frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(),
        "{frac}"
    );
}

#[test]
fn haar_cross_column_gegenbauer_moments() {
    // Distinct columns: E P_2 P_4 = 0, and block cancellation of P_2 gives
    // E P_2(⟨v,θ_1⟩) P_2(⟨v,θ_2⟩) = -1 / ((d-1) N(d,2)).
    for d in [4usize, 6] {
        let n = 40_000;
        let v: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let mut p22 = Vec::with_capacity(n);
        let mut p24 = Vec::with_capacity(n);
        for s in 0..n as u64 {
            let q = sample_haar_orthogonal(d, RngSeed::new(8, s)).unwrap();
            let x1: f64 = q.column(0).iter().zip(&v).map(|(a, b)| a * b).sum();
            let x2: f64 = q.column(1).iter().zip(&v).map(|(a, b)| a * b).sum();
            p22.push(gegenbauer(2, d, x1).unwrap() * gegenbauer(2, d, x2).unwrap());
            p24.push(gegenbauer(2, d, x1).unwrap() * gegenbauer(4, d, x2).unwrap());
        }
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, (var / v.len() as f64).sqrt())
        };
        let (m22, se22) = stats(&p22);
        let (m24, se24) = stats(&p24);
        let want = -1.0 / ((d - 1) as f64 * harmonic_dim(d, 2).unwrap() as f64);
        assert!((m22 - want).abs() < 4.0 * se22, "d={d}: {m22} vs {want}");
        assert!(m24.abs() < 4.0 * se24, "d={d}: {m24}");
        let bound = 2.0 / ((d - 1) as f64 * harmonic_dim(d, 2).unwrap() as f64);
        assert!(m22 <= bound);
    }
}

#[test]
fn mc_sphere_isotropy() {
    let d = 5;
    let n = 20_000;
    let rule = sample_sphere_mc(d, n, RngSeed::new(9, 0)).unwrap();
    let cov = &rule.theta * rule.theta.transpose() / n as f64;
    for i in 0..d {
        let mean = rule.theta.row(i).sum() / n as f64;
        assert!(mean.abs() < 4.0 * (1.0 / (d * n) as f64).sqrt());
        for j in 0..d {
            let want = if i == j { 1.0 / d as f64 } else { 0.0 };
            assert!((cov[(i, j)] - want).abs() < 0.01);
        }
    }
}
