//! Acceptance checks, shared by `srff verify` and the acceptance test target.

use std::fmt;
use std::time::{Duration, Instant};

use rand_distr::{ChiSquared, Distribution};

use crate::analysis::{harmonic_energy, mc_error_series, rel_frobenius, spherical_stage_mse};
use crate::error::Result;
use crate::experiment::{run_approx, ApproxConfig, ApproxMethod, DataSource, SigmaChoice};
use crate::features::{build_rff, build_sr, gram_exact, gram_hat, kappa_hat, Method, OkqParams};
use crate::io::{fnv1a, median_heuristic, synthetic_gaussian};
use crate::orthopoly::sphere_average;
use crate::radial::{
    f_bar, gauss_laguerre, radial_quadrature_error, radial_quadrature_error_by_moments, KernelSpec,
};
use crate::spherical::{
    default_jitter, okq_weights, sample_haar_orthogonal, sample_sphere_omc, sample_unit_vector,
    NodeKind, RngSeed,
};

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {} ({:.2}s / {}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str, u64); 10] = [
    (1, "Gauss-Laguerre exactness", 5),
    (2, "Haar orthogonality", 10),
    (3, "MC spherical error identity", 60),
    (4, "OMC block bound and ordering", 120),
    (5, "radial decay exponent", 5),
    (6, "kernel consistency", 10),
    (7, "SR-OMC vs RFF trend", 300),
    (8, "Parseval closure", 5),
    (9, "OKQ sanity", 30),
    (10, "determinism across threads", 60),
];

/// Runs one criterion; errors are reported as failures.
pub fn run_check(id: u8) -> CheckOutcome {
    let (_, title, budget) = CRITERIA
        .iter()
        .copied()
        .find(|c| c.0 == id)
        .unwrap_or((id, "unknown", 0));
    let start = Instant::now();
    let result = match id {
        1 => check_quadrature_exactness(),
        2 => check_haar_orthogonality(),
        3 => check_mc_identity(),
        4 => check_omc_block(),
        5 => check_radial_decay(),
        6 => check_kernel_consistency(),
        7 => check_trend(),
        8 => check_parseval(),
        9 => check_okq(),
        10 => check_determinism(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget);
    let (ok, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    let in_budget = elapsed <= budget;
    CheckOutcome {
        id,
        title,
        passed: ok && in_budget,
        detail: if in_budget {
            detail
        } else {
            format!("{detail}; over time budget")
        },
        elapsed,
        budget,
    }
}

pub fn run_all() -> Vec<CheckOutcome> {
    CRITERIA.iter().map(|c| run_check(c.0)).collect()
}

type Check = Result<(bool, String)>;

fn check_quadrature_exactness() -> Check {
    let mut worst_moment = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut szego_ok = true;
    for d in [2usize, 4, 8, 16, 32, 784] {
        let h = d as f64 / 2.0;
        for m_r in 1..=10 {
            let rule = gauss_laguerre(d, m_r)?;
            worst_sum = worst_sum.max((rule.a.iter().sum::<f64>() - 1.0).abs());
            let mut exact = 1.0;
            for p in 0..2 * m_r {
                if p > 0 {
                    exact *= h + (p - 1) as f64;
                }
                let approx: f64 = rule
                    .xi
                    .iter()
                    .zip(&rule.a)
                    .map(|(x, a)| a * x.powi(p as i32))
                    .sum();
                worst_moment = worst_moment.max((approx - exact).abs() / exact);
            }
            szego_ok &= rule.xi[m_r - 1] <= (4 * m_r + d) as f64;
        }
    }
    let ok = worst_moment <= 1e-10 && worst_sum <= 1e-12 && szego_ok;
    Ok((
        ok,
        format!(
            "max moment rel err {worst_moment:.2e}, max |Σa-1| {worst_sum:.2e}, largest node bound {}",
            if szego_ok { "holds" } else { "violated" }
        ),
    ))
}

fn check_haar_orthogonality() -> Check {
    let mut worst = 0.0f64;
    for d in [4usize, 16, 64] {
        for s in 0..1000u64 {
            let q = sample_haar_orthogonal(d, RngSeed::new(SEED, d as u64 * 10_000 + s))?;
            let g = q.transpose() * &q;
            let dev = (g - nalgebra::DMatrix::<f64>::identity(d, d)).amax();
            worst = worst.max(dev);
        }
    }
    Ok((worst <= 1e-12, format!("max |BᵀB - I| = {worst:.2e}")))
}

/// `Σ_{k≥2} (2k+1) j_k(1)²` from `Σ_{k≥0} (2k+1) j_k(β)² = (1 + sin 2β / 2β) / 2`.
fn prop4_reference_d3() -> f64 {
    let s1 = 1f64.sin();
    0.5 * (1.0 + 2f64.sin() / 2.0) - s1 * s1
}

fn check_mc_identity() -> Check {
    let reference = prop4_reference_d3();
    let series = mc_error_series(3, 1.0, 1, 2, 1.0)?;
    let mut ok = (series - reference).abs() <= 1e-10 * reference;
    let mut parts = vec![format!(
        "series {series:.6e} vs closed form {reference:.6e}"
    )];
    for m_s in [4usize, 16] {
        let expect = mc_error_series(3, 1.0, m_s, 2, 1.0)?;
        let est = spherical_stage_mse(
            NodeKind::Mc,
            3,
            m_s,
            1.0,
            100_000,
            RngSeed::new(SEED, 3_000 + m_s as u64),
        )?;
        let z = (est.mse - expect) / est.standard_error;
        ok &= z.abs() <= 4.0;
        parts.push(format!(
            "M_S={m_s}: mse {:.4e} expect {expect:.4e} z={z:+.2}",
            est.mse
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn check_omc_block() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [4usize, 8] {
        let bound = mc_error_series(d, 1.0, d, 4, 3.0)?;
        let omc = spherical_stage_mse(
            NodeKind::Omc,
            d,
            d,
            1.0,
            100_000,
            RngSeed::new(SEED, 4_000 + d as u64),
        )?;
        let mc = spherical_stage_mse(
            NodeKind::Mc,
            d,
            d,
            1.0,
            100_000,
            RngSeed::new(SEED, 4_100 + d as u64),
        )?;
        let under = omc.mse <= bound + 4.0 * omc.standard_error;
        let sep = (mc.standard_error.powi(2) + omc.standard_error.powi(2)).sqrt();
        let ordered = mc.mse - omc.mse > 2.0 * sep;
        ok &= under && ordered;
        parts.push(format!(
            "d={d}: OMC {:.3e}±{:.1e} bound {bound:.3e}, MC {:.3e}±{:.1e}",
            omc.mse, omc.standard_error, mc.mse, mc.standard_error
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn check_radial_decay() -> Check {
    let spec = KernelSpec::new(4, 1.0)?;
    let c2: f64 = 0.5;
    let mut log_err = Vec::new();
    let mut log_err_moments = Vec::new();
    let mut log_env = Vec::new();
    for m_r in 1..=6usize {
        let rule = gauss_laguerre(4, m_r)?;
        log_err.push(radial_quadrature_error(&rule, &spec, 1.0)?.abs().ln());
        log_err_moments.push(
            radial_quadrature_error_by_moments(&rule, &spec, 1.0)?
                .abs()
                .ln(),
        );
        let p = (2 * m_r - 1) as f64;
        log_env.push(p * (c2 / p).ln());
    }
    let mut ok = true;
    let mut steps = Vec::new();
    for i in 0..5 {
        let de = log_err[i + 1] - log_err[i];
        let dv = log_env[i + 1] - log_env[i];
        ok &= de < 0.0 && de <= dv;
        steps.push(format!("{}→{}: {de:.2} vs {dv:.2}", i + 1, i + 2));
    }
    let moments: Vec<String> = log_err_moments.iter().map(|x| format!("{x:.2}")).collect();
    Ok((
        ok,
        format!(
            "Δlog|err| vs Δlog env [{}]; cancellation-free log|err| [{}]",
            steps.join(", "),
            moments.join(", ")
        ),
    ))
}

fn check_kernel_consistency() -> Check {
    let spec = KernelSpec::new(2, 1.0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for dist in [1.0f64, 0.5f64.sqrt()] {
        let target = spec.kernel_at(dist);
        let mut total = 0.0;
        for s in 0..100u64 {
            let map = build_sr(
                spec,
                8,
                256,
                NodeKind::Omc,
                None,
                RngSeed::new(SEED, 6_000 + s),
            )?;
            total += kappa_hat(&map, &[0.0, 0.0], &[dist, 0.0])?;
        }
        let mean = total / 100.0;
        ok &= (mean - target).abs() <= 0.01;
        parts.push(format!("|x-y|={dist:.4}: mean {mean:.5} vs {target:.5}"));
    }
    Ok((ok, parts.join("; ")))
}

fn check_trend() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [4usize, 16] {
        let data = synthetic_gaussian(1000, d, RngSeed::new(SEED, 7_000 + d as u64))?;
        let sigma = median_heuristic(&data, 100_000, RngSeed::new(SEED, 7_100 + d as u64))?;
        let spec = KernelSpec::new(d, sigma)?;
        let k = gram_exact(&spec, &data)?;
        let mut means = Vec::new();
        let mut wins_all = Vec::new();
        for mult in [1usize, 2, 4, 8] {
            let m = mult * d;
            let preferred = if d == 4 { 2 } else { 1 };
            let m_r = if m % (preferred * d) == 0 {
                preferred
            } else {
                1
            };
            let mut wins = 0;
            let mut sum = 0.0;
            for s in 0..20u64 {
                let seed = RngSeed::new(SEED + s, fnv1a(format!("trend|{d}|{m}").as_bytes()));
                let sr = build_sr(spec, m_r, m / m_r, NodeKind::Omc, None, seed)?;
                let rff = build_rff(spec, m, seed.with_stream(seed.stream_id ^ 1))?;
                let e_sr = rel_frobenius(&k, &gram_hat(&sr, &data)?)?;
                let e_rff = rel_frobenius(&k, &gram_hat(&rff, &data)?)?;
                wins += usize::from(e_sr <= e_rff);
                sum += e_sr;
            }
            ok &= wins >= 16;
            means.push(sum / 20.0);
            wins_all.push(format!("M={m}(M_R={m_r}) {wins}/20"));
        }
        let decreasing = means.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing;
        let means: Vec<String> = means.iter().map(|x| format!("{x:.4}")).collect();
        parts.push(format!(
            "d={d} σ={sigma:.3}: wins [{}], mean d_F [{}]",
            wins_all.join(", "),
            means.join(", ")
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn check_parseval() -> Check {
    let mut worst = 0.0f64;
    for d in [3usize, 8] {
        for beta in [0.5f64, 1.0, 2.0] {
            let energy = harmonic_energy(d, beta, 0)?;
            // λ_0 at 2β equals f̄ with c2·ξ = β².
            let doubled = f_bar(d, beta * beta, 1.0, 1e-15)?;
            worst = worst.max((energy - 0.5 * (1.0 + doubled)).abs());
        }
    }
    Ok((
        worst <= 1e-8,
        format!("max |Σ N λ² - (1 + f̄(2β))/2| = {worst:.2e}"),
    ))
}

fn check_okq() -> Check {
    let d = 4;
    let bandwidth = 1.0;
    let mut rng = RngSeed::new(SEED, 9_000).rng();
    let chi = ChiSquared::new(d as f64).expect("valid degrees of freedom");
    let cases: Vec<(f64, Vec<f64>)> = (0..5)
        .map(|_| (chi.sample(&mut rng).sqrt(), sample_unit_vector(&mut rng, d)))
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for m_s in [8usize, 16, 32] {
        let uniform = sample_sphere_omc(d, m_s, RngSeed::new(SEED, 9_100 + m_s as u64))?;
        let okq = okq_weights(&uniform, bandwidth, default_jitter(m_s))?;
        let const_u = (uniform.b.iter().sum::<f64>() - 1.0).abs();
        let const_o = (okq.b.iter().sum::<f64>() - 1.0).abs();
        let mut wins = 0;
        for (r, v) in &cases {
            let exact = sphere_average(d, *r, 1e-14)?;
            let eu = (uniform.integrate_plane_wave(v, *r) - exact).abs();
            let eo = (okq.integrate_plane_wave(v, *r) - exact).abs();
            wins += usize::from(eo <= eu);
        }
        let const_ok = const_o <= const_u;
        ok &= const_ok && wins >= 4;
        parts.push(format!(
            "M_S={m_s}: plane waves {wins}/5, constant err OKQ {const_o:.2e} vs uniform {const_u:.2e}"
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Config used by the determinism check.
pub fn determinism_config() -> ApproxConfig {
    ApproxConfig {
        methods: vec![
            ApproxMethod::Exact,
            ApproxMethod::Map(Method::SrOmc),
            ApproxMethod::Map(Method::SrOkqSomc),
            ApproxMethod::Map(Method::Rff),
            ApproxMethod::Map(Method::Orf),
            ApproxMethod::Map(Method::QmcHalton),
        ],
        sigma: SigmaChoice::Median { max_pairs: 20_000 },
        m_r: vec![1, 2],
        m_s: vec![8, 16],
        n: Some(300),
        source: DataSource::Gaussian { n: 400, d: 4 },
        data_seed: 11,
        seeds: vec![1, 2],
        okq: OkqParams::default(),
        spectral: true,
        ridge: None,
        pointwise: true,
        bound_c: Some(0.5),
        lipschitz: 1.0,
        timing: false,
    }
}

fn check_determinism() -> Check {
    let cfg = determinism_config();
    let run = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::error::Error::Precondition(e.to_string()))?;
        pool.install(|| run_approx(&cfg))
    };
    let a = run(1)?;
    let b = run(4)?;
    let rows = a.lines().count() - 1;
    Ok((
        a == b,
        format!(
            "{rows} rows, 1 vs 4 threads {}",
            if a == b { "identical" } else { "differ" }
        ),
    ))
}
