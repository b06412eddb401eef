//! Walk-on-spheres for the isotropic `2s`-stable process.
//!
//! From the centre of a ball of radius `r` the process leaves the ball at
//! `r·θ/√u` with `θ` uniform on the sphere and `u ~ Beta(s, 1 - s)`. A walk
//! repeatedly jumps from the centre of the ball `B(X_k, ball_fraction·d(X_k))`
//! until it lands outside the domain, which it does in finitely many steps
//! because the exit law charges the complement; there is no boundary shell.
//!
//! Every path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! and batch sums are reduced in index order, so results do not depend on
//! thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::cone::{norm, Region};
use crate::error::{check_order, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub seed: u64,
    pub paths: usize,
    /// Radius of each WoS ball as a fraction of the distance to the boundary.
    pub ball_fraction: f64,
    pub max_steps: usize,
    pub batch_size: usize,
    /// Paths that come closer than this to the origin are counted in
    /// [`McEstimate::vertex_fraction`]. Zero disables the count.
    pub vertex_radius: f64,
}

impl Default for WosConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: 100_000,
            ball_fraction: 0.5,
            max_steps: 10_000,
            batch_size: 4096,
            vertex_radius: 0.0,
        }
    }
}

impl WosConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidInput("paths must be at least 1".into()));
        }
        if !(self.ball_fraction > 0.0 && self.ball_fraction < 1.0) {
            return Err(Error::Domain {
                name: "ball_fraction",
                value: self.ball_fraction,
                range: "(0, 1)",
            });
        }
        if self.max_steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidInput("max_steps and batch_size must be positive".into()));
        }
        if !(self.vertex_radius >= 0.0) {
            return Err(Error::InvalidInput("vertex_radius must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    /// Fraction of paths stopped by `max_steps`.
    pub truncated_fraction: f64,
    pub vertex_fraction: f64,
    /// Mean number of WoS jumps per path.
    pub mean_steps: f64,
    pub warnings: Vec<String>,
}

impl McEstimate {
    /// A deterministic value.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
            n_samples: 0,
            truncated_fraction: 0.0,
            vertex_fraction: 0.0,
            mean_steps: 0.0,
            warnings: Vec::new(),
        }
    }

    /// `(self - other) / σ` with independent errors.
    pub fn sigmas_from(&self, other: &McEstimate) -> f64 {
        let sigma = self.std_err.hypot(other.std_err);
        (self.value - other.value) / sigma
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.value *= factor;
        self.std_err *= factor.abs();
        self
    }
}

/// Estimate of `G_Ω(x, y)` for the fractional Laplacian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub truncated_fraction: f64,
    pub warnings: Vec<String>,
}

/// `|S^{n-1}|`-normalised Riesz potential `Φ(r) = κ r^{2s-n}`, the
/// fundamental solution of `(-Δ)^s` in `R^n` (requires `n > 2s`).
pub fn riesz_potential(n: usize, s: f64, r: f64) -> f64 {
    let nf = n as f64;
    let kappa = gamma(0.5 * nf - s) / (4f64.powf(s) * PI.powf(0.5 * nf) * gamma(s));
    kappa * r.powf(2.0 * s - nf)
}

/// Green function of the ball `B(0, radius)`:
/// `κ |x-y|^{2s-n} ∫_0^w t^{s-1}(1+t)^{-n/2} dt` with
/// `w = (R²-|x|²)(R²-|y|²)/(R²|x-y|²)`.
pub fn ball_green(n: usize, s: f64, radius: f64, x: &[f64], y: &[f64]) -> f64 {
    let nf = n as f64;
    let r2 = radius * radius;
    let ax = r2 - dot(x, x);
    let ay = r2 - dot(y, y);
    if ax <= 0.0 || ay <= 0.0 {
        return 0.0;
    }
    let dxy = dist(x, y);
    // ∫_0^w = B(s, n/2-s) I_{w/(1+w)}(s, n/2-s)
    let v = ax * ay / (ax * ay + r2 * dxy * dxy);
    let reg = beta_reg(s, 0.5 * nf - s, v.min(1.0));
    riesz_potential(n, s, dxy) * reg
}

/// Exit density from `B(0, radius)` started at `x`, at the exterior point `y`.
pub fn ball_poisson_kernel(n: usize, s: f64, radius: f64, x: &[f64], y: &[f64]) -> f64 {
    let nf = n as f64;
    let r2 = radius * radius;
    let ey = dot(y, y) - r2;
    let ix = r2 - dot(x, x);
    if ey <= 0.0 || ix <= 0.0 {
        return 0.0;
    }
    let c = gamma(0.5 * nf) * (PI * s).sin() / PI.powf(0.5 * nf + 1.0);
    c * (ix / ey).powf(s) * dist(x, y).powf(-nf)
}

/// `P(|Y - c| ≤ ρ)` for the exit point `Y` of `B(c, radius)` started at `c`.
pub fn exit_radius_cdf(s: f64, radius: f64, rho: f64) -> f64 {
    if rho <= radius {
        return 0.0;
    }
    1.0 - beta_reg(s, 1.0 - s, (radius / rho).powi(2))
}

/// Exit-point sampler for a fixed order `s`.
#[derive(Debug, Clone)]
pub struct ExitSampler {
    s: f64,
    radial: Beta<f64>,
}

impl ExitSampler {
    pub fn new(s: f64) -> Result<Self> {
        check_order(s)?;
        let radial = Beta::new(s, 1.0 - s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self { s, radial })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Exit point of `B(center, radius)` started at the centre, written to `out`.
    pub fn center_exit<R: Rng + ?Sized>(&self, center: &[f64], radius: f64, rng: &mut R, out: &mut [f64]) {
        let u = loop {
            let u: f64 = self.radial.sample(rng);
            if u > 0.0 {
                break u;
            }
        };
        let rho = radius / u.sqrt();
        let mut nrm = 0.0;
        for o in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = z;
            nrm += z * z;
        }
        let f = rho / nrm.sqrt();
        for (o, c) in out.iter_mut().zip(center) {
            *o = c + f * *o;
        }
    }
}

/// Exit point of a ball together with the number of rejection-loop restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct BallExit {
    pub point: Vec<f64>,
    pub restarts: usize,
}

const REJECTION_CAP: usize = 10_000;

/// Exit point of `B(center, radius)` for the process started at `start`.
///
/// Off-centre starts use rejection against the centre-start law: the density
/// ratio is bounded by `((R²-d²)/R²)^s (R/(R-d))^n` where `d = |start - center|`.
pub fn sample_ball_exit<R: Rng + ?Sized>(
    sampler: &ExitSampler,
    center: &[f64],
    radius: f64,
    start: &[f64],
    rng: &mut R,
) -> Result<BallExit> {
    if center.len() != start.len() {
        return Err(Error::InvalidInput("centre and start have different dimensions".into()));
    }
    let d = dist(center, start);
    if !(radius > 0.0) || d >= radius {
        return Err(Error::InvalidInput("start point must lie strictly inside the ball".into()));
    }
    let n = center.len() as i32;
    let mut point = vec![0.0; center.len()];
    let mut restarts = 0;
    loop {
        for _ in 0..REJECTION_CAP {
            sampler.center_exit(center, radius, rng, &mut point);
            if d == 0.0 {
                return Ok(BallExit { point, restarts });
            }
            let accept = ((radius - d) * dist(&point, center) / (radius * dist(&point, start))).powi(n);
            if rng.random::<f64>() < accept {
                return Ok(BallExit { point, restarts });
            }
        }
        restarts += 1;
    }
}

/// End state of one walk.
#[derive(Debug, Clone)]
pub(crate) struct WalkEnd {
    pub steps: usize,
    pub truncated: bool,
    pub min_norm: f64,
}

/// Runs one walk from `x`; on return `pos` holds the exit point (or the last
/// position if truncated).
pub(crate) fn walk<R: Rng + ?Sized>(
    domain: &dyn Region,
    sampler: &ExitSampler,
    x: &[f64],
    cfg: &WosConfig,
    rng: &mut R,
    pos: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
) -> WalkEnd {
    pos.clear();
    pos.extend_from_slice(x);
    scratch.resize(x.len(), 0.0);
    let mut min_norm = norm(x);
    for steps in 0..cfg.max_steps {
        let d = domain.signed_distance(pos);
        if d <= 0.0 {
            return WalkEnd {
                steps,
                truncated: false,
                min_norm,
            };
        }
        sampler.center_exit(pos, cfg.ball_fraction * d, rng, scratch);
        std::mem::swap(pos, scratch);
        min_norm = min_norm.min(norm(pos));
    }
    let truncated = domain.signed_distance(pos) > 0.0;
    WalkEnd {
        steps: cfg.max_steps,
        truncated,
        min_norm,
    }
}

pub(crate) fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-path flags reported by a payoff closure.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PathFlags {
    pub truncated: bool,
    pub vertex: bool,
    pub steps: usize,
}

impl From<&WalkEnd> for PathFlags {
    fn from(end: &WalkEnd) -> Self {
        Self {
            truncated: end.truncated,
            vertex: false,
            steps: end.steps,
        }
    }
}

/// Sums of vector payoffs and their cross products.
#[derive(Debug, Clone)]
pub(crate) struct PathSums {
    pub dim: usize,
    pub count: usize,
    pub sum: Vec<f64>,
    pub cross: Vec<f64>,
    pub truncated: usize,
    pub vertex: usize,
    pub steps: usize,
}

impl PathSums {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            sum: vec![0.0; dim],
            cross: vec![0.0; dim * dim],
            truncated: 0,
            vertex: 0,
            steps: 0,
        }
    }

    fn push(&mut self, v: &[f64], flags: PathFlags) {
        self.count += 1;
        for i in 0..self.dim {
            self.sum[i] += v[i];
            for j in 0..self.dim {
                self.cross[i * self.dim + j] += v[i] * v[j];
            }
        }
        self.truncated += flags.truncated as usize;
        self.vertex += flags.vertex as usize;
        self.steps += flags.steps;
    }

    fn merge(&mut self, other: &PathSums) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
        self.truncated += other.truncated;
        self.vertex += other.vertex;
        self.steps += other.steps;
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|v| v / self.count as f64).collect()
    }

    /// Sample covariance of the payoff vector.
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.count as f64;
        let m = self.mean();
        let mut c = vec![0.0; self.dim * self.dim];
        if self.count < 2 {
            return c;
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                c[i * self.dim + j] = (self.cross[i * self.dim + j] - n * m[i] * m[j]) / (n - 1.0);
            }
        }
        c
    }

    /// Mean and standard error of `w · payoff`.
    pub fn linear(&self, w: &[f64]) -> (f64, f64) {
        let m = self.mean();
        let c = self.covariance();
        let value: f64 = w.iter().zip(&m).map(|(a, b)| a * b).sum();
        let mut var = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                var += w[i] * w[j] * c[i * self.dim + j];
            }
        }
        (value, (var.max(0.0) / self.count as f64).sqrt())
    }

    pub fn estimate(&self, w: &[f64]) -> McEstimate {
        let (value, std_err) = self.linear(w);
        let truncated_fraction = self.truncated as f64 / self.count as f64;
        let mut warnings = Vec::new();
        if truncated_fraction > 0.01 {
            warnings.push(format!(
                "{:.2}% of paths hit max_steps",
                100.0 * truncated_fraction
            ));
        }
        McEstimate {
            value,
            std_err,
            n_samples: self.count,
            truncated_fraction,
            vertex_fraction: self.vertex as f64 / self.count as f64,
            mean_steps: self.steps as f64 / self.count as f64,
            warnings,
        }
    }
}

/// Runs `cfg.paths` independent paths; `payoff(index, out)` fills a vector of
/// length `dim`. Batches are evaluated in parallel and reduced in order.
pub(crate) fn run_paths<F>(cfg: &WosConfig, dim: usize, payoff: F) -> PathSums
where
    F: Fn(u64, &mut [f64]) -> PathFlags + Sync,
{
    let batches = cfg.paths.div_ceil(cfg.batch_size);
    let parts: Vec<PathSums> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * cfg.batch_size;
            let hi = (lo + cfg.batch_size).min(cfg.paths);
            let mut acc = PathSums::new(dim);
            let mut v = vec![0.0; dim];
            for i in lo..hi {
                v.iter_mut().for_each(|x| *x = 0.0);
                let flags = payoff(i as u64, &mut v);
                acc.push(&v, flags);
            }
            acc
        })
        .collect();
    let mut total = PathSums::new(dim);
    for p in &parts {
        total.merge(p);
    }
    total
}

fn check_start(domain: &dyn Region, x: &[f64]) -> Result<()> {
    if x.len() != domain.dim() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {} but the domain lives in R^{}",
            x.len(),
            domain.dim()
        )));
    }
    if domain.signed_distance(x) <= 0.0 {
        return Err(Error::InvalidInput("start point must be interior".into()));
    }
    Ok(())
}

/// `u(x)` for the `s`-harmonic function in `domain` with exterior data `g`.
pub fn solve_dirichlet(
    domain: &dyn Region,
    x: &[f64],
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    s: f64,
    cfg: &WosConfig,
) -> Result<McEstimate> {
    cfg.validate()?;
    check_start(domain, x)?;
    let sampler = ExitSampler::new(s)?;
    let sums = run_paths(cfg, 1, |i, out| {
        let mut rng = path_rng(cfg.seed, i);
        let (mut pos, mut scratch) = (Vec::new(), Vec::new());
        let end = walk(domain, &sampler, x, cfg, &mut rng, &mut pos, &mut scratch);
        // truncated paths have no exterior value and contribute zero
        out[0] = if end.truncated { 0.0 } else { g(&pos) };
        PathFlags {
            vertex: end.min_norm < cfg.vertex_radius,
            ..PathFlags::from(&end)
        }
    });
    Ok(sums.estimate(&[1.0]))
}

/// `G_Ω(x, y)` by Hunt's formula `Φ(x-y) - E_x Φ(X_τ - y)`, where `X_τ` is the
/// exit point of the walk.
pub fn green_estimate(domain: &dyn Region, x: &[f64], y: &[f64], s: f64, cfg: &WosConfig) -> Result<GreenEstimate> {
    cfg.validate()?;
    check_start(domain, x)?;
    check_start(domain, y)?;
    let n = x.len();
    if (n as f64) <= 2.0 * s {
        return Err(Error::InvalidInput(format!("the Riesz potential needs n > 2s (n = {n}, s = {s})")));
    }
    let dxy = dist(x, y);
    if dxy == 0.0 {
        return Err(Error::InvalidInput("source and target coincide".into()));
    }
    let sampler = ExitSampler::new(s)?;
    let phi0 = riesz_potential(n, s, dxy);
    let sums = run_paths(cfg, 1, |i, out| {
        let mut rng = path_rng(cfg.seed, i);
        let (mut pos, mut scratch) = (Vec::new(), Vec::new());
        let end = walk(domain, &sampler, x, cfg, &mut rng, &mut pos, &mut scratch);
        out[0] = phi0 - riesz_potential(n, s, dist(&pos, y));
        PathFlags {
            vertex: end.min_norm < cfg.vertex_radius,
            ..PathFlags::from(&end)
        }
    });
    let est = sums.estimate(&[1.0]);
    let mut warnings = est.warnings;
    if dxy < cfg.ball_fraction * domain.signed_distance(x) {
        warnings.push("target lies inside the first WoS ball; variance is large".into());
    }
    Ok(GreenEstimate {
        source: x.to_vec(),
        target: y.to_vec(),
        value: est.value,
        std_err: est.std_err,
        n_samples: est.n_samples,
        truncated_fraction: est.truncated_fraction,
        warnings,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
