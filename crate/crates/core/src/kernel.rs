//! Boundary kernel of a cone, its radial reduction and the mass `H₁`.
//!
//! All estimates are surface integrals `∫_{∂Ω} w(y) 𝒦(x, y) dσ(y)` obtained
//! from the exit point of a walk started at `x̄ = x + δ ν(x)`. Near a boundary
//! point `y` the exit law of the walk has density
//!
//! ```text
//! p(y - η ν(y)) ≈ d(x̄)^s 𝒦(x, y) · A η^{-s},   A = Γ(1+s)/Γ(1-s),
//! ```
//!
//! (the half-space value of `∫ d(w)^s J(w, z) dw`), so the payoff
//! `w(y) (1-s) / (A η₀^{1-s} d(x̄)^s)` for exits at depth `η < η₀` has mean
//! `∫ w 𝒦 dσ + O(δ + η₀)`. Offsets and layer thickness are proportional to a
//! level `e`; a few levels are simulated with common random numbers and
//! extrapolated to `e → 0` with a fitted power law.
//!
//! Payoffs are bounded and nonnegative, unlike estimators built from the
//! Green function at two interior points, whose variance grows like a
//! negative power of the offset.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::cone::{norm, Cone, HalfSpace, Region, Side};
use crate::constants::sphere_area;
use crate::error::{check_order, Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::wos::{dist, path_rng, run_paths, walk, ExitSampler, McEstimate, PathFlags, PathSums, WosConfig};

/// A domain whose boundary supports nearest-point projection.
pub trait LayerDomain: Region {
    /// Nearest boundary point, `None` where it is not unique.
    fn project(&self, z: &[f64]) -> Option<Vec<f64>>;
    fn inward_normal(&self, y: &[f64]) -> Result<Vec<f64>>;
    /// Distance from a boundary point to the nearest singular boundary point.
    fn feature_length(&self, y: &[f64]) -> f64;
    /// `σ({y' ∈ ∂Ω : |y' - y| < r})` for `r` small against the feature length.
    fn window_measure(&self, y: &[f64], r: f64) -> f64;
    /// Whether two boundary points lie on the same smooth sheet.
    fn same_sheet(&self, a: &[f64], b: &[f64]) -> bool;
}

impl LayerDomain for Cone {
    fn project(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.nearest_boundary_point(z).ok()
    }

    fn inward_normal(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.boundary_normal(y)
    }

    fn feature_length(&self, y: &[f64]) -> f64 {
        norm(y)
    }

    fn window_measure(&self, y: &[f64], r: f64) -> f64 {
        let n = self.n;
        let rho = norm(y);
        let (a, b) = (self.ring_radius(), self.ring_height());
        if n == 2 {
            return 2.0 * r;
        }
        // |y' - y|² = ρ² + ρ'² - 2ρρ'(a² cos ψ + b²)
        let opts = QuadOptions::with_rel_tol(1e-10);
        let inner = |psi_max: f64| {
            if n == 3 {
                2.0 * psi_max
            } else {
                sphere_area(n as u32 - 3)
                    * integrate(|p| p.sin().powi(n as i32 - 3), 0.0, psi_max, &opts).value
            }
        };
        integrate(
            |rp| {
                let c = (rho * rho + rp * rp - r * r - 2.0 * rho * rp * b * b) / (2.0 * rho * rp * a * a);
                if c >= 1.0 {
                    return 0.0;
                }
                (a * rp).powi(n as i32 - 2) * inner(c.max(-1.0).acos())
            },
            (rho - r).max(0.0),
            rho + r,
            &opts,
        )
        .value
    }

    fn same_sheet(&self, a: &[f64], b: &[f64]) -> bool {
        (a[self.n - 1] >= 0.0) == (b[self.n - 1] >= 0.0)
    }
}

impl LayerDomain for HalfSpace {
    fn project(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut y = z.to_vec();
        y[self.n - 1] = 0.0;
        Some(y)
    }

    fn inward_normal(&self, _y: &[f64]) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.n];
        e[self.n - 1] = 1.0;
        Ok(e)
    }

    fn feature_length(&self, _y: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn window_measure(&self, _y: &[f64], r: f64) -> f64 {
        let k = (self.n - 1) as f64;
        PI.powf(0.5 * k) / gamma(0.5 * k + 1.0) * r.powf(k)
    }

    fn same_sheet(&self, _a: &[f64], _b: &[f64]) -> bool {
        true
    }
}

/// Boundary kernel of the half-space, `Γ(n/2) / (π^{n/2} Γ(s) Γ(1+s)) |x-y|^{-n}`.
pub fn half_space_kernel(n: usize, s: f64, x: &[f64], y: &[f64]) -> f64 {
    let nf = n as f64;
    gamma(0.5 * nf) / (PI.powf(0.5 * nf) * gamma(s) * gamma(1.0 + s)) * dist(x, y).powf(-nf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub wos: WosConfig,
    /// Offset levels `e`, geometric and decreasing. The source offset is
    /// `e·ℓ(x)` and the layer thickness `e·ℓ(y)`.
    pub eps_levels: Vec<f64>,
    /// Window radius for point values, relative to `min(|y|, |x - y|)`.
    pub window: f64,
    /// Half-width in `ln ρ` of the shells used for ring integrals.
    pub shell_half_width: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            wos: WosConfig {
                vertex_radius: 1e-3,
                ..WosConfig::default()
            },
            eps_levels: vec![0.08, 0.04, 0.02],
            window: 0.2,
            shell_half_width: 0.1,
        }
    }
}

impl KernelConfig {
    pub fn with_paths(mut self, paths: usize) -> Self {
        self.wos.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.wos.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.wos.validate()?;
        let e = &self.eps_levels;
        if e.is_empty() || e.iter().any(|v| !(*v > 0.0 && *v < 0.5)) {
            return Err(Error::InvalidInput("eps levels must lie in (0, 0.5)".into()));
        }
        if e.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("eps levels must be decreasing".into()));
        }
        if e.len() >= 3 {
            let q0 = e[0] / e[1];
            if e.windows(2).any(|w| ((w[0] / w[1]) / q0 - 1.0).abs() > 1e-9) {
                return Err(Error::InvalidInput("eps levels must be geometric".into()));
            }
        }
        if !(self.window > 0.0 && self.window <= 0.3) {
            return Err(Error::Domain {
                name: "window",
                value: self.window,
                range: "(0, 0.3]",
            });
        }
        if !(self.shell_half_width > 0.0 && self.shell_half_width <= 0.5) {
            return Err(Error::Domain {
                name: "shell_half_width",
                value: self.shell_half_width,
                range: "(0, 0.5]",
            });
        }
        Ok(())
    }
}

/// Level values and their extrapolation to zero offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub estimate: McEstimate,
    pub eps_levels: Vec<f64>,
    pub levels: Vec<McEstimate>,
    /// Fitted exponent of `raw(e) = K + c e^γ`; `None` when the level
    /// differences are not resolved.
    pub gamma: Option<f64>,
    /// Levels were non-monotone beyond their error bars.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPointEstimate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps: Vec<f64>,
    pub raw: Vec<f64>,
    pub raw_std_err: Vec<f64>,
    pub extrapolated: f64,
    pub std_err: f64,
    pub gamma: Option<f64>,
    pub degraded: bool,
    pub window_radius: f64,
}

const GAMMA_RANGE: (f64, f64) = (0.25, 4.0);

/// Extrapolates level means `raw(e_k) = K + c e_k^γ` from the last three
/// levels. Differences below two standard errors leave the finest level in
/// place with the last difference added to its error.
pub(crate) fn extrapolate(sums: &PathSums, eps: &[f64]) -> KernelEstimate {
    let l = eps.len();
    let unit = |k: usize| {
        let mut w = vec![0.0; l];
        w[k] = 1.0;
        w
    };
    let levels: Vec<McEstimate> = (0..l).map(|k| sums.estimate(&unit(k))).collect();
    let finest = levels[l - 1].clone();
    let plain = |mut est: McEstimate, extra: f64, gamma: Option<f64>, degraded: bool| {
        est.std_err = est.std_err.hypot(extra);
        KernelEstimate {
            estimate: est,
            eps_levels: eps.to_vec(),
            levels: levels.clone(),
            gamma,
            degraded,
        }
    };
    if l < 3 {
        return plain(finest, 0.0, None, false);
    }
    let (i1, i2, i3) = (l - 3, l - 2, l - 1);
    let diff = |a: usize, b: usize| {
        let mut w = vec![0.0; l];
        w[a] = 1.0;
        w[b] = -1.0;
        sums.linear(&w)
    };
    let (d12, s12) = diff(i1, i2);
    let (d23, s23) = diff(i2, i3);
    let resolved12 = d12.abs() > 2.0 * s12;
    let resolved23 = d23.abs() > 2.0 * s23;
    if resolved12 && resolved23 && d12.signum() != d23.signum() {
        let mut est = finest;
        est.warnings.push("levels are non-monotone; extrapolation refused".into());
        return plain(est, 0.0, None, true);
    }
    if !resolved12 {
        return plain(finest, d23.abs(), None, false);
    }
    let q = eps[i1] / eps[i2];
    let mut second = vec![0.0; l];
    second[i1] = 1.0;
    second[i2] = -2.0;
    second[i3] = 1.0;
    let (d, sd) = sums.linear(&second);
    let raw_gamma = (d12 / d23).ln() / q.ln();
    let curvature_resolved = d.abs() > 2.0 * sd && d12 / d23 > 0.0;
    let gamma = if curvature_resolved {
        raw_gamma.clamp(GAMMA_RANGE.0, GAMMA_RANGE.1)
    } else {
        // a resolved first difference with unresolved curvature: assume a linear bias
        1.0
    };
    let c = 1.0 / (q.powf(gamma) - 1.0);
    let (value, std_err) = if curvature_resolved && gamma == raw_gamma {
        // Aitken form K = r3 - (r2 - r3)² / (r1 - 2 r2 + r3) with its gradient
        let a = d23;
        let mut w = vec![0.0; l];
        w[i1] = a * a / (d * d);
        w[i2] = -2.0 * a / d - 2.0 * a * a / (d * d);
        w[i3] = 1.0 + 2.0 * a / d + a * a / (d * d);
        let (_, se) = sums.linear(&w);
        (finest.value - c * d23, se)
    } else {
        let mut w = vec![0.0; l];
        w[i2] = -c;
        w[i3] = 1.0 + c;
        sums.linear(&w)
    };
    let mut est = finest;
    est.value = value;
    est.std_err = std_err;
    KernelEstimate {
        estimate: est,
        eps_levels: eps.to_vec(),
        levels,
        gamma: Some(gamma),
        degraded: false,
    }
}

/// Runs the layer functional for weight `w` and local length `ell` on the
/// boundary, from the boundary point `x` with source length `source_len`.
#[allow(clippy::too_many_arguments)]
pub fn layer_functional(
    domain: &dyn LayerDomain,
    s: f64,
    x: &[f64],
    source_len: f64,
    weight: &(dyn Fn(&[f64]) -> f64 + Sync),
    ell: &(dyn Fn(&[f64]) -> f64 + Sync),
    cfg: &KernelConfig,
) -> Result<KernelEstimate> {
    check_order(s)?;
    cfg.validate()?;
    let sampler = ExitSampler::new(s)?;
    let nu = domain.inward_normal(x)?;
    let a = gamma(1.0 + s) / gamma(1.0 - s);
    let eps = cfg.eps_levels.clone();
    let mut starts = Vec::with_capacity(eps.len());
    let mut norms = Vec::with_capacity(eps.len());
    for e in &eps {
        let xb: Vec<f64> = x.iter().zip(&nu).map(|(p, v)| p + e * source_len * v).collect();
        let d = domain.signed_distance(&xb);
        if !(d > 0.0) {
            return Err(Error::InvalidInput("offset source point left the domain".into()));
        }
        starts.push(xb);
        norms.push(d.powf(-s));
    }
    let wos = &cfg.wos;
    let sums = run_paths(wos, eps.len(), |i, out| {
        let (mut pos, mut scratch) = (Vec::new(), Vec::new());
        let mut flags = PathFlags::default();
        for (k, xb) in starts.iter().enumerate() {
            let mut rng = path_rng(wos.seed, i);
            let end = walk(domain, &sampler, xb, wos, &mut rng, &mut pos, &mut scratch);
            flags.truncated |= end.truncated;
            flags.vertex |= end.min_norm < wos.vertex_radius;
            flags.steps = end.steps;
            if end.truncated {
                continue;
            }
            let eta = -domain.signed_distance(&pos);
            let Some(y) = domain.project(&pos) else { continue };
            let thick = eps[k] * ell(&y);
            if eta < thick {
                let w = weight(&y);
                if w != 0.0 {
                    out[k] = w * (1.0 - s) / (a * thick.powf(1.0 - s)) * norms[k];
                }
            }
        }
        flags
    });
    Ok(extrapolate(&sums, &eps))
}

fn check_boundary_point(domain: &dyn LayerDomain, x: &[f64], what: &str) -> Result<()> {
    if x.len() != domain.dim() {
        return Err(Error::InvalidInput(format!("{what} has the wrong dimension")));
    }
    let scale = norm(x).max(1.0);
    if domain.signed_distance(x).abs() > 1e-9 * scale {
        return Err(Error::InvalidInput(format!("{what} is not on the boundary")));
    }
    if domain.feature_length(x) < 1e-12 {
        return Err(Error::InvalidInput(format!("{what} is at the vertex")));
    }
    Ok(())
}

/// `𝒦(x, y)` averaged over the window `|y' - y| < window·min(|y|, |x-y|)`
/// and extrapolated to zero offset.
pub fn kernel_point(
    domain: &dyn LayerDomain,
    s: f64,
    x: &[f64],
    y: &[f64],
    cfg: &KernelConfig,
) -> Result<KernelPointEstimate> {
    check_boundary_point(domain, x, "source")?;
    check_boundary_point(domain, y, "target")?;
    let dxy = dist(x, y);
    if dxy == 0.0 {
        return Err(Error::InvalidInput("source and target coincide".into()));
    }
    let radius = cfg.window * domain.feature_length(y).min(dxy);
    let measure = domain.window_measure(y, radius);
    let weight = |p: &[f64]| {
        if dist(p, y) < radius && domain.same_sheet(p, y) {
            1.0 / measure
        } else {
            0.0
        }
    };
    let ell = |p: &[f64]| domain.feature_length(p).min(dist(p, x));
    let source_len = domain.feature_length(x).min(dxy);
    let k = layer_functional(domain, s, x, source_len, &weight, &ell, cfg)?;
    Ok(KernelPointEstimate {
        x: x.to_vec(),
        y: y.to_vec(),
        eps: k.eps_levels.clone(),
        raw: k.levels.iter().map(|l| l.value).collect(),
        raw_std_err: k.levels.iter().map(|l| l.std_err).collect(),
        extrapolated: k.estimate.value,
        std_err: k.estimate.std_err,
        gamma: k.gamma,
        degraded: k.degraded,
        window_radius: radius,
    })
}

/// Reference point of `∂𝒞 ∩ ∂B_r` on the given side, along `e₁`.
pub fn reference_point(cone: &Cone, side: Side, r: f64) -> Vec<f64> {
    let mut x = vec![0.0; cone.n];
    x[0] = r * cone.ring_radius();
    x[cone.n - 1] = side.sign() * r * cone.ring_height();
    x
}

/// `𝒦̃(|x|, t)`-type ring integral from the boundary point `x`, smoothed over
/// the shell `|ln(ρ/t)| < h` with weight `e^{nu/2}` so that the inversion
/// identity `𝒦̃(1,t) = t^{-n} 𝒦̃(1,1/t)` holds exactly for the smoothed
/// quantity. The smoothing error is `O(h²)`.
pub fn kernel_tilde_from(cone: &Cone, s: f64, x: &[f64], t: f64, cfg: &KernelConfig) -> Result<KernelEstimate> {
    check_boundary_point(cone, x, "reference point")?;
    let r = norm(x);
    let h = cfg.shell_half_width;
    let tr = t / r;
    if !(tr > 0.0) || tr.ln().abs() < 2.0 * h {
        return Err(Error::InvalidInput(format!(
            "t/|x| = {tr} must lie outside the guard band exp(±2h) around 1"
        )));
    }
    let n = cone.n as f64;
    // ∫ w 𝒦 dσ = (1/2h) ∫ e^{nu/2} 𝒦̃(r, t e^u) du, using dσ = dρ × ring measure
    let weight = move |y: &[f64]| {
        let rho = norm(y);
        if (rho / t).ln().abs() < h {
            (rho / t).powf(0.5 * n) * rho.powf(1.0 - n) / (2.0 * h)
        } else {
            0.0
        }
    };
    let ell = |p: &[f64]| norm(p).min(dist(p, x));
    let source_len = r * (1.0f64).min((1.0 - tr).abs());
    let k = layer_functional(cone, s, x, source_len, &weight, &ell, cfg)?;
    Ok(k)
}

/// `𝒦̃(1, t)` from the reference point on the `+` side of `∂𝒞 ∩ ∂B₁`.
pub fn kernel_tilde(cone: &Cone, s: f64, t: f64, cfg: &KernelConfig) -> Result<KernelEstimate> {
    kernel_tilde_from(cone, s, &reference_point(cone, Side::Plus, 1.0), t, cfg)
}

/// `ℋ(x) = ∫ |ν(x) - ν(y)|² 𝒦(x, y) dσ(y)`, restricted to `ρ ∈ rho_range`.
pub fn curvature_mass_in(
    cone: &Cone,
    s: f64,
    x: &[f64],
    rho_range: (f64, f64),
    same_side_only: bool,
    cfg: &KernelConfig,
) -> Result<KernelEstimate> {
    check_boundary_point(cone, x, "reference point")?;
    let nx = cone.boundary_normal(x)?;
    let weight = |y: &[f64]| {
        let rho = norm(y);
        if rho <= rho_range.0 || rho >= rho_range.1 {
            return 0.0;
        }
        if same_side_only && !cone.same_sheet(x, y) {
            return 0.0;
        }
        match cone.boundary_normal(y) {
            Ok(ny) => nx.iter().zip(&ny).map(|(a, b)| (a - b) * (a - b)).sum(),
            Err(_) => 0.0,
        }
    };
    let ell = |p: &[f64]| norm(p).min(dist(p, x));
    layer_functional(cone, s, x, norm(x), &weight, &ell, cfg)
}

/// `ℋ(x)`; on a cone `ℋ(x) = H₁/|x|`.
pub fn curvature_mass(cone: &Cone, s: f64, x: &[f64], cfg: &KernelConfig) -> Result<KernelEstimate> {
    curvature_mass_in(cone, s, x, (0.0, f64::INFINITY), false, cfg)
}

/// `H₁ = ℋ(x₁)` for `x₁ ∈ ∂𝒞 ∩ ∂B₁`.
pub fn h1(cone: &Cone, s: f64, cfg: &KernelConfig) -> Result<KernelEstimate> {
    curvature_mass(cone, s, &reference_point(cone, Side::Plus, 1.0), cfg)
}

/// `2 ∫_a^1 (1 - t^{(n-2)/2})² 𝒦̃(1, t) dt` as one surface integral over
/// `a < |y| < 1`, so that the `(1-t)²` factor multiplies every sample.
pub fn paired_near_one(cone: &Cone, s: f64, a: f64, cfg: &KernelConfig) -> Result<KernelEstimate> {
    let x = reference_point(cone, Side::Plus, 1.0);
    let n = cone.n as i32;
    let p = 0.5 * (n - 2) as f64;
    let weight = move |y: &[f64]| {
        let rho = norm(y);
        if rho <= a || rho >= 1.0 {
            return 0.0;
        }
        2.0 * (1.0 - rho.powf(p)).powi(2) * rho.powi(2 - n)
    };
    let ell = |q: &[f64]| norm(q).min(dist(q, &x));
    layer_functional(cone, s, &x, 1.0, &weight, &ell, cfg)
}

/// Tabulated `𝒦̃(1, t)` on `(0, t_split)` plus the paired integral over
/// `(t_split, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub n: usize,
    pub s: f64,
    pub beta: f64,
    /// Cell midpoints of a uniform partition of `(0, t_split)`.
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub t_split: f64,
    pub near_one: McEstimate,
    pub eps_levels: Vec<f64>,
    /// Number of offset levels used in each extrapolation.
    pub extrapolation_order: usize,
    pub gammas: Vec<Option<f64>>,
    pub degraded: bool,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub cells: usize,
    pub t_split: f64,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            cells: 8,
            t_split: 0.5,
        }
    }
}

impl KernelTable {
    /// Values for `t < 1` come from shells at `1/t` through the inversion
    /// identity: the far shell is reached by more paths than the one near
    /// the vertex.
    pub fn build(cone: &Cone, s: f64, spec: &TableSpec, cfg: &KernelConfig) -> Result<Self> {
        if spec.cells == 0 || !(spec.t_split > 0.0 && spec.t_split < 1.0) {
            return Err(Error::InvalidInput("table needs cells ≥ 1 and t_split in (0, 1)".into()));
        }
        let n = cone.n;
        let width = spec.t_split / spec.cells as f64;
        let mut t_grid = Vec::new();
        let mut values = Vec::new();
        let mut std_errs = Vec::new();
        let mut gammas = Vec::new();
        let mut seeds = Vec::new();
        let mut degraded = false;
        for i in 0..spec.cells {
            let t = (i as f64 + 0.5) * width;
            let seed = cfg.wos.seed.wrapping_add(1 + i as u64);
            let c = cfg.clone().with_seed(seed);
            let k = kernel_tilde(cone, s, 1.0 / t, &c)?;
            let f = t.powi(-(n as i32));
            t_grid.push(t);
            values.push(f * k.estimate.value);
            std_errs.push(f * k.estimate.std_err);
            gammas.push(k.gamma);
            seeds.push(seed);
            degraded |= k.degraded;
        }
        let seed = cfg.wos.seed.wrapping_add(1 + spec.cells as u64);
        let near = paired_near_one(cone, s, spec.t_split, &cfg.clone().with_seed(seed))?;
        gammas.push(near.gamma);
        seeds.push(seed);
        degraded |= near.degraded;
        Ok(Self {
            n,
            s,
            beta: cone.beta,
            t_grid,
            values,
            std_errs,
            t_split: spec.t_split,
            near_one: near.estimate,
            eps_levels: cfg.eps_levels.clone(),
            extrapolation_order: cfg.eps_levels.len(),
            gammas,
            degraded,
            seeds,
        })
    }
}

/// `m(0) = 2 ∫_0^1 (1 - t^{(n-2)/2})² 𝒦̃(1, t) dt`: midpoint rule on the table
/// plus the paired integral near `t = 1`. Zero exactly for `n = 2`.
pub fn mellin_m0(table: &KernelTable, n: usize) -> Result<McEstimate> {
    if n == 2 {
        return Ok(McEstimate::exact(0.0));
    }
    if n != table.n {
        return Err(Error::InvalidInput(format!("table is for n = {}, not {n}", table.n)));
    }
    let p = 0.5 * (n as f64 - 2.0);
    let width = table.t_split / table.t_grid.len() as f64;
    let mut value = table.near_one.value;
    let mut var = table.near_one.std_err.powi(2);
    for ((t, v), e) in table.t_grid.iter().zip(&table.values).zip(&table.std_errs) {
        let w = 2.0 * width * (1.0 - t.powf(p)).powi(2);
        value += w * v;
        var += (w * e).powi(2);
    }
    let mut est = McEstimate::exact(value);
    est.std_err = var.sqrt();
    est.n_samples = table.near_one.n_samples;
    if table.degraded {
        est.warnings.push("table contains degraded extrapolations".into());
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wos::WosConfig;

    fn synthetic(levels: &[f64], bias: impl Fn(f64) -> f64 + Sync, noise: f64) -> KernelEstimate {
        let cfg = WosConfig::default().with_paths(4000);
        let sums = run_paths(&cfg, levels.len(), |i, out| {
            let u = ((i % 97) as f64 / 96.0 - 0.5) * noise;
            for (k, e) in levels.iter().enumerate() {
                out[k] = 1.0 + bias(*e) + u;
            }
            PathFlags::default()
        });
        extrapolate(&sums, levels)
    }

    #[test]
    fn extrapolation_removes_power_law_bias() {
        let eps = [0.08, 0.04, 0.02];
        let k = synthetic(&eps, |e| 3.0 * e.powf(1.5), 0.01);
        assert!((k.gamma.unwrap() - 1.5).abs() < 1e-9);
        let unbiased = k.levels[2].value - 3.0 * 0.02f64.powf(1.5);
        assert!((k.estimate.value - unbiased).abs() < 1e-9);
        assert!(!k.degraded);
        // common noise cancels in the differences
        let flat = synthetic(&eps, |_| 0.0, 0.5);
        assert!(flat.gamma.is_none());
        assert_eq!(flat.estimate.value, flat.levels[2].value);
    }

    #[test]
    fn non_monotone_levels_are_refused() {
        let eps = [0.08, 0.04, 0.02];
        let k = synthetic(&eps, |e| if e > 0.05 { 0.1 } else if e > 0.03 { 0.0 } else { 0.1 }, 0.01);
        assert!(k.degraded);
        assert_eq!(k.estimate.value, k.levels[2].value);
    }

    #[test]
    fn half_space_window_measure_is_a_disc() {
        let h = HalfSpace { n: 3 };
        assert!((h.window_measure(&[0.0, 0.0, 0.0], 0.5) - PI * 0.25).abs() < 1e-14);
    }

    #[test]
    fn cone_window_measure_small_radius_is_flat() {
        for n in [3usize, 4] {
            let c = Cone::new(n, 1.1).unwrap();
            let y = reference_point(&c, Side::Minus, 2.0);
            let r = 1e-3;
            let flat = HalfSpace { n }.window_measure(&y, r);
            let m = c.window_measure(&y, r);
            assert!((m / flat - 1.0).abs() < 1e-5, "n={n}: {m} vs {flat}");
        }
        let c = Cone::new(2, 0.7).unwrap();
        assert_eq!(c.window_measure(&reference_point(&c, Side::Plus, 1.0), 0.1), 0.2);
    }

    #[test]
    fn config_validation() {
        assert!(KernelConfig::default().validate().is_ok());
        let mut c = KernelConfig::default();
        c.eps_levels = vec![0.02, 0.04];
        assert!(c.validate().is_err());
        c.eps_levels = vec![0.08, 0.04, 0.01];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_points_off_the_boundary() {
        let c = Cone::new(3, 1.0).unwrap();
        let cfg = KernelConfig::default().with_paths(10);
        let x = reference_point(&c, Side::Plus, 1.0);
        assert!(kernel_point(&c, 0.5, &[1.0, 0.0, 0.0], &x, &cfg).is_err());
        assert!(kernel_point(&c, 0.5, &x, &x, &cfg).is_err());
        assert!(kernel_tilde(&c, 0.5, 1.05, &cfg).is_err());
    }

    #[test]
    fn m0_vanishes_for_two_dimensions() {
        let table = KernelTable {
            n: 2,
            s: 0.5,
            beta: 1.0,
            t_grid: vec![0.25],
            values: vec![1.0],
            std_errs: vec![0.1],
            t_split: 0.5,
            near_one: McEstimate::exact(1.0),
            eps_levels: vec![0.02],
            extrapolation_order: 1,
            gammas: vec![None],
            degraded: false,
            seeds: vec![0],
        };
        let m = mellin_m0(&table, 2).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.std_err, 0.0);
    }
}
