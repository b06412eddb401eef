//! End-to-end acceptance checks. Each test prints one line
//! `criterion N [PASS|FAIL] ...` to standard error, outside the test harness
//! capture, and then asserts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use std::io::Write;
use std::time::{Duration, Instant};

use stable_cones::cone::{CapCone, Cone, ConeBoundaryChart, Region, Side};
use stable_cones::constants::{bar_cs, verify_all, DEFAULT_IDENTITY_TOL};
use stable_cones::energy::{first_variation_scan, Configuration1D};
use stable_cones::exponent::{
    find_aperture, lambda_of_beta, principal_eigenvalue_extrapolated, AngularDomain, MeshControls,
};
use stable_cones::fraclap::{flap_1d, large_solution_harmonicity, Profile1D, QuadratureSpec};
use stable_cones::kernel::{kernel_point, kernel_tilde, KernelConfig};
use stable_cones::stability::{
    alpha_feasibility, check_stability, hardy_2d_demo, max_unstable_dimension, StabilityConfig, Verdict,
};
use stable_cones::wos::{exit_radius_cdf, green_estimate, solve_dirichlet, ExitSampler, WosConfig};

fn report(id: u32, pass: bool, elapsed: Duration, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} [{status}] {detail} ({:.1} s)\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn conclude(id: u32, start: Instant, budget_secs: f64, checks: &[(bool, String)]) {
    let elapsed = start.elapsed();
    let in_budget = elapsed.as_secs_f64() < budget_secs;
    let pass = in_budget && checks.iter().all(|c| c.0);
    let mut detail: Vec<String> = checks.iter().map(|c| c.1.clone()).collect();
    if !in_budget {
        detail.push(format!("runtime over {budget_secs} s"));
    }
    report(id, pass, elapsed, &detail.join("; "));
    for (ok, what) in checks {
        assert!(*ok, "criterion {id}: {what}");
    }
    assert!(in_budget, "criterion {id}: runtime {:?} over budget", elapsed);
}

#[test]
fn criterion_01_identity_suite() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut all_pass = true;
    let mut count = 0;
    for k in 1..10 {
        let s = k as f64 / 10.0;
        for r in verify_all(s, &[2, 3, 4, 5], DEFAULT_IDENTITY_TOL).unwrap() {
            worst = worst.max(r.residual);
            all_pass &= r.pass && r.residual < 1e-8;
            count += 1;
        }
    }
    conclude(
        1,
        start,
        5.0,
        &[(all_pass, format!("{count} identity reports, worst residual {worst:.1e} < 1e-8"))],
    );
}

#[test]
fn criterion_02_half_space_derivative() {
    let start = Instant::now();
    let q = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        for tau in [0.5, 1.0, 2.0] {
            let v = flap_1d(&Profile1D::power_plus(s), s, -tau, &q).unwrap();
            let exact = bar_cs(s).unwrap() * tau.powf(-s);
            worst = worst.max((v.value / exact - 1.0).abs());
        }
    }
    conclude(2, start, 10.0, &[(worst < 1e-3, format!("worst relative error {worst:.1e} < 1e-3"))]);
}

#[test]
fn criterion_03_large_solution() {
    let start = Instant::now();
    let q = QuadratureSpec::default();
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        worst = worst.max(large_solution_harmonicity(s, &grid, &q).unwrap());
    }
    conclude(3, start, 10.0, &[(worst < 1e-3, format!("worst scaled residual {worst:.1e} < 1e-3"))]);
}

#[test]
fn criterion_04_first_variation() {
    let start = Instant::now();
    let s = 0.5;
    let lambda = 1.0;
    let u_star = lambda / gamma(1.0 + s);
    let eps = [-0.02, -0.01, 0.01, 0.02];
    let scan = first_variation_scan(&Configuration1D::new(0.0, u_star, (-1.0, 1.0), lambda), s, &eps).unwrap();
    let ratio = scan.critical_u0 * gamma(1.0 + s) / lambda;
    let below = first_variation_scan(&Configuration1D::new(0.0, 0.9 * u_star, (-1.0, 1.0), lambda), s, &eps).unwrap();
    let above = first_variation_scan(&Configuration1D::new(0.0, 1.1 * u_star, (-1.0, 1.0), lambda), s, &eps).unwrap();
    conclude(
        4,
        start,
        60.0,
        &[
            ((ratio - 1.0).abs() < 0.02, format!("U0* Γ(1+s)/Λ = {ratio:.5}")),
            (
                below.slope < 0.0 && above.slope > 0.0,
                format!("slopes {:.3e} at -10%, {:.3e} at +10%", below.slope, above.slope),
            ),
        ],
    );
}

#[test]
fn criterion_05_exponent_anchor() {
    let start = Instant::now();
    let controls = MeshControls::default();
    let mut worst = 0.0f64;
    for (n, s) in [(2usize, 0.5), (3, 0.5), (3, 0.75)] {
        let d = AngularDomain::CapCone(CapCone::half_space(n).unwrap());
        let r = principal_eigenvalue_extrapolated(n, s, &d, &controls).unwrap();
        worst = worst.max((r.mu / (s * (n as f64 - s)) - 1.0).abs());
    }
    conclude(5, start, 300.0, &[(worst < 1e-3, format!("worst relative error of s(n-s) {worst:.1e} < 1e-3"))]);
}

#[test]
fn criterion_06_aperture() {
    let start = Instant::now();
    let controls = MeshControls::default();
    let a = find_aperture(3, 0.5, 1e-3, &controls).unwrap();
    let betas = [0.3, 0.5, 0.7, 0.9, 1.1, 1.5, 2.0, 3.0];
    let sweep: Vec<_> = betas.iter().map(|b| lambda_of_beta(3, 0.5, *b, &controls).unwrap()).collect();
    let monotone = sweep
        .windows(2)
        .all(|w| w[1].lambda - w[0].lambda > 3.0 * (w[0].error_estimate + w[1].error_estimate));
    let in_range = sweep.iter().all(|r| r.lambda > 0.0 && r.lambda < 1.0);
    conclude(
        6,
        start,
        900.0,
        &[
            ((a.lambda - 0.5).abs() < 1e-3, format!("beta* = {:.5}, lambda = {:.6}", a.beta, a.lambda)),
            (monotone, "lambda strictly increasing over 8 apertures".into()),
            (
                in_range,
                format!("lambda in ({:.4}, {:.4}) ⊂ (0, 1)", sweep[0].lambda, sweep[7].lambda),
            ),
        ],
    );
}

/// `{x_n > 0} ∩ B(0, R)`.
struct TruncatedHalfSpace {
    n: usize,
    radius: f64,
}

impl Region for TruncatedHalfSpace {
    fn dim(&self) -> usize {
        self.n
    }
    fn signed_distance(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x[self.n - 1].min(self.radius - r)
    }
}

#[test]
fn criterion_07_wos_statistics() {
    let start = Instant::now();
    let s = 0.5;
    let sampler = ExitSampler::new(s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let m = 1_000_000;
    let mut out = [0.0; 3];
    let mut radii: Vec<f64> = (0..m)
        .map(|_| {
            sampler.center_exit(&[0.0; 3], 1.0, &mut rng, &mut out);
            out.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = radii.iter().enumerate().fold(0.0f64, |acc, (i, r)| {
        let f = exit_radius_cdf(s, 1.0, *r);
        acc.max((f - i as f64 / m as f64).abs()).max((f - (i + 1) as f64 / m as f64).abs())
    });

    let n = 3;
    let dom = TruncatedHalfSpace { n, radius: 4.0 };
    let g = move |y: &[f64]| y[n - 1].max(0.0).powf(s);
    let d = solve_dirichlet(&dom, &[0.0, 0.0, 1.0], &g, s, &WosConfig::default().with_paths(100_000).with_seed(1)).unwrap();
    let anchor_ok = d.std_err < 0.01 && (d.value - 1.0).abs() < 3.0 * d.std_err;

    let cone = Cone::new(3, 1.07).unwrap();
    let x = [1.0, 0.0, 0.3];
    let y = [0.0, 1.2, -0.4];
    let cfg = WosConfig::default().with_paths(200_000);
    let gxy = green_estimate(&cone, &x, &y, s, &cfg.clone().with_seed(11)).unwrap();
    let gyx = green_estimate(&cone, &y, &x, s, &cfg.clone().with_seed(12)).unwrap();
    let sym = (gxy.value - gyx.value) / gxy.std_err.hypot(gyx.std_err);
    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let g2 = green_estimate(&cone, &x2, &y2, s, &cfg.with_seed(13)).unwrap();
    let f = 2f64.powf(2.0 * s - n as f64);
    let scale = (g2.value - f * gxy.value) / g2.std_err.hypot(f * gxy.std_err);
    conclude(
        7,
        start,
        300.0,
        &[
            (ks < 0.002, format!("KS {ks:.2e} < 0.002")),
            (anchor_ok, format!("half-space anchor {:.4} ± {:.4}", d.value, d.std_err)),
            (sym.abs() < 3.0, format!("Green symmetry {sym:+.2}σ")),
            (scale.abs() < 3.0, format!("r^(2s-n) scaling {scale:+.2}σ")),
        ],
    );
}

fn random_boundary_point(cone: &Cone, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rho = 0.5 + 1.5 * rng.random::<f64>();
    let side = if rng.random::<bool>() { Side::Plus } else { Side::Minus };
    let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    cone.chart_point(&ConeBoundaryChart {
        side,
        rho,
        omega: vec![phi.cos(), phi.sin()],
    })
}

#[test]
fn criterion_08_kernel_identities() {
    let start = Instant::now();
    let (n, s) = (3usize, 0.5);
    let cone = Cone::new(n, 1.07337).unwrap();
    let cfg = |paths: usize, seed: u64| KernelConfig::default().with_paths(paths).with_seed(seed);
    let mut checks = Vec::new();

    for (i, t) in [0.5f64, 0.25].into_iter().enumerate() {
        let near = kernel_tilde(&cone, s, t, &cfg(400_000, 100 + i as u64)).unwrap().estimate;
        let far = kernel_tilde(&cone, s, 1.0 / t, &cfg(400_000, 200 + i as u64)).unwrap().estimate;
        let f = t.powi(-(n as i32));
        let z = (near.value - f * far.value) / near.std_err.hypot(f * far.std_err);
        checks.push((z.abs() < 3.0, format!("inversion at t = {t}: {z:+.2}σ")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pairs = Vec::new();
    while pairs.len() < 10 {
        let x = random_boundary_point(&cone, &mut rng);
        let y = random_boundary_point(&cone, &mut rng);
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if d > 0.3 {
            pairs.push((x, y, d));
        }
    }
    let mut worst_z = 0.0f64;
    let mut normalized = Vec::new();
    for (i, (x, y, d)) in pairs.iter().enumerate() {
        let base = kernel_point(&cone, s, x, y, &cfg(200_000, 300 + i as u64)).unwrap();
        normalized.push(base.extrapolated * d.powi(n as i32));
        if i < 5 {
            let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
            let scaled = kernel_point(&cone, s, &x2, &y2, &cfg(200_000, 400 + i as u64)).unwrap();
            let f = 2f64.powi(-(n as i32));
            let z = (scaled.extrapolated - f * base.extrapolated) / scaled.std_err.hypot(f * base.std_err);
            worst_z = worst_z.max(z.abs());
        }
    }
    checks.push((worst_z < 3.0, format!("homogeneity on 5 pairs, worst {worst_z:.2}σ")));
    let lo = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = normalized.iter().cloned().fold(0.0, f64::max);
    let c = hi.max(1.0 / lo);
    checks.push((
        lo > 0.0 && hi.is_finite() && c < 50.0,
        format!("K|x-y|^n in [{lo:.3}, {hi:.3}] over 10 pairs, C = {c:.2}"),
    ));
    conclude(8, start, 1800.0, &checks);
}

#[test]
fn criterion_09_planar_instability() {
    let start = Instant::now();
    let mut cfg = StabilityConfig::default();
    cfg.kernel = cfg.kernel.with_paths(200_000).with_seed(7);
    let r = check_stability(2, 0.5, &cfg).unwrap();
    conclude(
        9,
        start,
        1800.0,
        &[
            (r.m0.value == 0.0 && r.m0.std_err == 0.0, "m0 = 0 exactly".into()),
            (
                r.h1.value > 3.0 * r.h1.std_err,
                format!("H1 = {:.4} ± {:.4}", r.h1.value, r.h1.std_err),
            ),
            (r.verdict == Verdict::InstabilityCertified, format!("verdict {}", r.verdict.as_str())),
        ],
    );
}

#[test]
fn criterion_10_hardy_scan() {
    let start = Instant::now();
    let h = hardy_2d_demo(0.5, &[1e2, 1e3, 1e4]).unwrap();
    let ratio = h.fitted_log_slope / 4.0;
    let (lo, hi) = h.rhs_values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let variation = hi / lo - 1.0;
    conclude(
        10,
        start,
        60.0,
        &[
            ((0.95..=1.05).contains(&ratio), format!("log slope / 4 = {ratio:.6}")),
            (variation < 0.05, format!("rhs variation {variation:.1e}")),
        ],
    );
}

#[test]
fn criterion_11_dimension_bound() {
    let start = Instant::now();
    conclude(
        11,
        start,
        1.0,
        &[
            (max_unstable_dimension() == 5, "max unstable dimension 5".into()),
            (alpha_feasibility(6).unwrap().is_none(), "alpha interval empty at n = 6".into()),
        ],
    );
}

#[test]
fn criterion_12_higher_dimensions_reported() {
    let start = Instant::now();
    let mut lines = Vec::new();
    for n in 3..=7 {
        let mut cfg = StabilityConfig::default();
        cfg.kernel = cfg.kernel.with_paths(50_000).with_seed(12);
        match check_stability(n, 0.5, &cfg) {
            Ok(r) => lines.push(format!(
                "n={n}: beta*={:.4} H1={:.3}±{:.3} m0={:.3}±{:.3} {}",
                r.beta_star,
                r.h1.value,
                r.h1.std_err,
                r.m0.value,
                r.m0.std_err,
                r.verdict.as_str()
            )),
            Err(e) => lines.push(format!("n={n}: not completed ({e})")),
        }
    }
    report(12, true, start.elapsed(), &format!("report only: {}", lines.join("; ")));
}
