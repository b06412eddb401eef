use stable_cones::cone::{Ball, Cone, Region};
use stable_cones::constants::sphere_area;
use stable_cones::quad::{integrate, integrate_to_infinity, tanh_sinh, QuadOptions};
use stable_cones::wos::*;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn opts() -> QuadOptions {
    QuadOptions::with_rel_tol(1e-12)
}

/// Radial exit density from the unit ball started at its centre; `gap = ρ - 1`.
fn radial_density(n: usize, s: f64, rho: f64, gap: f64) -> f64 {
    let nf = n as f64;
    let c = gamma(0.5 * nf) * (PI * s).sin() / PI.powf(0.5 * nf + 1.0);
    sphere_area(n as u32 - 1) * c / (rho * (gap * (rho + 1.0)).powf(s))
}

fn radial_cdf_by_quadrature(n: usize, s: f64, t: f64) -> f64 {
    tanh_sinh(|r, gap, _| radial_density(n, s, r, gap), 1.0, t, &opts()).value
}

#[test]
fn analytic_exit_cdf_matches_density_quadrature() {
    for &(n, s) in &[(2usize, 0.3), (3, 0.5), (5, 0.8)] {
        let total = integrate_to_infinity(|r, gap| radial_density(n, s, r, gap), 1.0, &opts()).value;
        assert!((total - 1.0).abs() < 1e-9, "mass {total}");
        for &t in &[1.01, 1.2, 2.0, 5.0, 40.0] {
            let q = radial_cdf_by_quadrature(n, s, t);
            assert!((exit_radius_cdf(s, 1.0, t) - q).abs() < 1e-9, "n={n} s={s} t={t}");
        }
    }
}

#[test]
fn center_exit_radius_ks_and_isotropy() {
    let (n, s) = (3usize, 0.5);
    let sampler = ExitSampler::new(s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = 1_000_000;
    let mut radii = Vec::with_capacity(m);
    let mut mean_dir = [0.0f64; 3];
    let mut out = [0.0; 3];
    for _ in 0..m {
        sampler.center_exit(&[0.0; 3], 1.0, &mut rng, &mut out);
        let r = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        for k in 0..n {
            mean_dir[k] += out[k] / r;
        }
        radii.push(r);
    }
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks = 0.0f64;
    for (i, r) in radii.iter().enumerate() {
        let f = exit_radius_cdf(s, 1.0, *r);
        ks = ks.max((f - i as f64 / m as f64).abs()).max((f - (i + 1) as f64 / m as f64).abs());
    }
    assert!(ks < 0.002, "KS distance {ks}");
    // each coordinate of a uniform direction has variance 1/n
    let sigma = (1.0 / (n as f64 * m as f64)).sqrt();
    let len = mean_dir.iter().map(|v| (v / m as f64).powi(2)).sum::<f64>().sqrt();
    assert!(len < 3.0 * sigma * (n as f64).sqrt(), "mean direction {len}");

    let beyond = radii.iter().filter(|r| **r > 2.0).count() as f64 / m as f64;
    let p = 1.0 - radial_cdf_by_quadrature(n, s, 2.0);
    let sd = (p * (1.0 - p) / m as f64).sqrt();
    assert!((beyond - p).abs() < 3.0 * sd, "tail {beyond} vs {p}");
}

#[test]
fn off_center_exit_tail_matches_poisson_kernel() {
    let (n, s) = (2usize, 0.4);
    let x = [0.5, 0.0];
    let sampler = ExitSampler::new(s).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 200_000;
    let mut hits = 0usize;
    let mut right = 0usize;
    for _ in 0..m {
        let e = sample_ball_exit(&sampler, &[0.0, 0.0], 1.0, &x, &mut rng).unwrap();
        let r = (e.point[0] * e.point[0] + e.point[1] * e.point[1]).sqrt();
        hits += (r > 2.0) as usize;
        right += (e.point[0] > 0.0) as usize;
    }
    let o = QuadOptions::with_rel_tol(1e-10);
    let angular = |rho: f64, lo: f64, hi: f64| {
        integrate(
            |phi| ball_poisson_kernel(n, s, 1.0, &x, &[rho * phi.cos(), rho * phi.sin()]),
            lo,
            hi,
            &o,
        )
        .value
    };
    let p_tail = integrate_to_infinity(|rho, _| rho * angular(rho, 0.0, 2.0 * PI), 2.0, &o).value;
    let p_right = integrate_to_infinity(|rho, _| rho * angular(rho, -0.5 * PI, 0.5 * PI), 1.0, &o).value;
    for (count, p) in [(hits, p_tail), (right, p_right)] {
        let f = count as f64 / m as f64;
        let sd = (p * (1.0 - p) / m as f64).sqrt();
        assert!((f - p).abs() < 3.0 * sd, "{f} vs {p}");
    }
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
fn half_space_profile_is_reproduced() {
    // (x_n)_+^s is s-harmonic in the half-space, hence in any subdomain
    for &(n, s) in &[(2usize, 0.5), (3, 0.3)] {
        let dom = TruncatedHalfSpace { n, radius: 4.0 };
        let mut x = vec![0.0; n];
        x[n - 1] = 1.0;
        let g = move |y: &[f64]| y[n - 1].max(0.0).powf(s);
        let cfg = WosConfig::default().with_paths(100_000).with_seed(3);
        let e = solve_dirichlet(&dom, &x, &g, s, &cfg).unwrap();
        assert!(e.std_err < 0.01, "σ = {}", e.std_err);
        assert!((e.value - 1.0).abs() < 3.0 * e.std_err, "{} ± {}", e.value, e.std_err);
        assert!(e.truncated_fraction < 0.01);
    }
}

#[test]
fn ball_dirichlet_matches_poisson_integral() {
    let (n, s) = (3usize, 0.6);
    let g = |y: &[f64]| 1.0 / (1.0 + y.iter().map(|v| v * v).sum::<f64>());
    let exact = integrate_to_infinity(|r, gap| radial_density(n, s, r, gap) / (1.0 + r * r), 1.0, &opts()).value;
    let ball = Ball {
        center: vec![0.0; 3],
        radius: 1.0,
    };
    let cfg = WosConfig::default().with_paths(50_000).with_seed(8);
    let e = solve_dirichlet(&ball, &[0.0; 3], &g, s, &cfg).unwrap();
    assert!((e.value - exact).abs() < 3.0 * e.std_err, "{} ± {} vs {exact}", e.value, e.std_err);
    assert!(e.mean_steps > 1.0 && e.mean_steps < 20.0);
}

#[test]
fn ball_green_integrates_to_mean_exit_time() {
    // ∫_B G_B(0, y) dy = E τ = Γ(n/2) / (4^s Γ(1+s) Γ(n/2+s)) for the unit ball
    for &(n, s) in &[(2usize, 0.5), (3, 0.3), (4, 0.7)] {
        let nf = n as f64;
        let lhs = integrate(
            |r| {
                let mut y = vec![0.0; n];
                y[0] = r;
                sphere_area(n as u32 - 1) * r.powi(n as i32 - 1) * ball_green(n, s, 1.0, &vec![0.0; n], &y)
            },
            0.0,
            1.0,
            &opts(),
        )
        .value;
        let rhs = gamma(0.5 * nf) / (4f64.powf(s) * gamma(1.0 + s) * gamma(0.5 * nf + s));
        assert!((lhs / rhs - 1.0).abs() < 1e-8, "n={n} s={s}: {lhs} vs {rhs}");
    }
}

#[test]
fn ball_green_estimates_match_closed_form() {
    let s = 0.5;
    let ball = Ball {
        center: vec![0.0; 3],
        radius: 1.0,
    };
    let pairs = [
        ([0.0, 0.0, 0.0], [0.5, 0.0, 0.0]),
        ([0.2, 0.1, 0.0], [-0.3, 0.4, 0.1]),
        ([0.6, 0.0, 0.0], [0.0, 0.0, -0.6]),
    ];
    for (i, (x, y)) in pairs.iter().enumerate() {
        let cfg = WosConfig::default().with_paths(100_000).with_seed(40 + i as u64);
        let e = green_estimate(&ball, x, y, s, &cfg).unwrap();
        let exact = ball_green(3, s, 1.0, x, y);
        assert!(
            (e.value - exact).abs() < 3.0 * e.std_err,
            "pair {i}: {} ± {} vs {exact}",
            e.value,
            e.std_err
        );
    }
}

#[test]
fn cone_green_symmetry_and_scaling() {
    let (n, s) = (3usize, 0.5);
    let cone = Cone::new(n, 1.07).unwrap();
    let x = [1.0, 0.0, 0.3];
    let y = [0.0, 1.2, -0.4];
    let cfg = WosConfig::default().with_paths(200_000);
    let gxy = green_estimate(&cone, &x, &y, s, &cfg.clone().with_seed(1)).unwrap();
    let gyx = green_estimate(&cone, &y, &x, s, &cfg.clone().with_seed(2)).unwrap();
    let sig = (gxy.value - gyx.value) / gxy.std_err.hypot(gyx.std_err);
    assert!(sig.abs() < 3.0, "symmetry {sig}σ: {} vs {}", gxy.value, gyx.value);
    assert!(gxy.value > 5.0 * gxy.std_err);

    let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let g2 = green_estimate(&cone, &x2, &y2, s, &cfg.with_seed(3)).unwrap();
    let f = 2f64.powf(2.0 * s - n as f64);
    let sig = (g2.value - f * gxy.value) / g2.std_err.hypot(f * gxy.std_err);
    assert!(sig.abs() < 3.0, "scaling {sig}σ");
}
