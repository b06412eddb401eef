//! Principal-value evaluation of the one-dimensional fractional Laplacian
//!
//! ```text
//! (-Δ)^s f(x) = c_{1,s} PV ∫ (f(x) - f(y)) / |x - y|^{1+2s} dy
//! ```
//!
//! The integral is split into three parts:
//!
//! * a symmetric window `|y - x| < h` integrated as a second difference
//!   `2f(x) - f(x+r) - f(x-r)`, with the innermost `r < r_c` replaced by its
//!   Taylor term `-f''(x) r^{1-2s}` (f'' by central differences);
//! * graded panels out to a cutoff, split at every kink of the profile;
//! * tails beyond the cutoff in closed form: the `f(x)` part exactly, the
//!   profile part by a convergent binomial series for power-law tails.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::{sphere_area, Params};
use crate::error::{check_order, Error, Result};
use crate::quad::{tanh_sinh, QuadOptions, QuadResult};

/// Far-field model `coeff · |y - origin|^exponent`, exact beyond the profile's
/// tail start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub origin: f64,
    pub coeff: f64,
    pub exponent: f64,
}

impl Tail {
    pub const ZERO: Tail = Tail {
        origin: 0.0,
        coeff: 0.0,
        exponent: 0.0,
    };

    pub fn eval(&self, y: f64) -> f64 {
        if self.coeff == 0.0 {
            0.0
        } else {
            self.coeff * (y - self.origin).abs().powf(self.exponent)
        }
    }
}

/// Tabulated profile: C¹ cubic Hermite interpolation with centred slopes,
/// power-law tails outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub left: Tail,
    pub right: Tail,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl Tabulated {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, left: Tail, right: Tail) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidInput(
                "tabulated profile needs at least two (grid, value) pairs".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("tabulated grid must be strictly increasing".into()));
        }
        let m = grid.len();
        let slopes = (0..m)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(m - 1));
                (values[hi] - values[lo]) / (grid[hi] - grid[lo])
            })
            .collect();
        Ok(Self {
            grid,
            values,
            left,
            right,
            slopes,
        })
    }

    fn eval(&self, y: f64) -> f64 {
        let g = &self.grid;
        if y <= g[0] {
            return if y == g[0] { self.values[0] } else { self.left.eval(y) };
        }
        let last = g.len() - 1;
        if y >= g[last] {
            return if y == g[last] { self.values[last] } else { self.right.eval(y) };
        }
        let i = g.partition_point(|&v| v <= y) - 1;
        let h = g[i + 1] - g[i];
        let t = (y - g[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// `α·self + β·other` on a shared grid.
    pub fn combine(&self, alpha: f64, other: &Tabulated, beta: f64) -> Result<Tabulated> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("tabulated profiles live on different grids".into()));
        }
        let tail = |a: Tail, b: Tail| -> Result<Tail> {
            if a.coeff == 0.0 {
                return Ok(Tail { coeff: beta * b.coeff, ..b });
            }
            if b.coeff == 0.0 {
                return Ok(Tail { coeff: alpha * a.coeff, ..a });
            }
            if a.origin != b.origin || a.exponent != b.exponent {
                return Err(Error::InvalidInput("tails with different shapes cannot be combined".into()));
            }
            Ok(Tail {
                coeff: alpha * a.coeff + beta * b.coeff,
                ..a
            })
        };
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Tabulated::new(
            self.grid.clone(),
            values,
            tail(self.left, other.left)?,
            tail(self.right, other.right)?,
        )
    }
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A closure-defined profile with declared kinks and exact tails
/// (`f = left` on `(-∞, left_start]`, `f = right` on `[right_start, ∞)`).
#[derive(Clone)]
pub struct FunctionProfile {
    pub f: ProfileFn,
    pub kinks: Vec<f64>,
    pub left_start: f64,
    pub left: Tail,
    pub right_start: f64,
    pub right: Tail,
}

impl std::fmt::Debug for FunctionProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionProfile")
            .field("kinks", &self.kinks)
            .field("left_start", &self.left_start)
            .field("left", &self.left)
            .field("right_start", &self.right_start)
            .field("right", &self.right)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Profile1D {
    /// `t^γ` for `t > 0`, zero for `t ≤ 0`.
    PowerPlus { gamma: f64 },
    Constant { value: f64 },
    Tabulated(Tabulated),
    Function(FunctionProfile),
}

impl Profile1D {
    pub fn power_plus(gamma: f64) -> Self {
        Profile1D::PowerPlus { gamma }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Profile1D::PowerPlus { gamma } => {
                if y > 0.0 {
                    y.powf(*gamma)
                } else {
                    0.0
                }
            }
            Profile1D::Constant { value } => *value,
            Profile1D::Tabulated(t) => t.eval(y),
            Profile1D::Function(p) => {
                if y <= p.left_start {
                    p.left.eval(y)
                } else if y >= p.right_start {
                    p.right.eval(y)
                } else {
                    (p.f)(y)
                }
            }
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Profile1D::PowerPlus { .. } => vec![0.0],
            Profile1D::Constant { .. } => Vec::new(),
            Profile1D::Tabulated(_) => Vec::new(),
            Profile1D::Function(p) => p.kinks.clone(),
        }
    }

    /// Points where the profile is only piecewise smooth but evaluation is
    /// still fine (interpolation nodes).
    fn breaks(&self) -> Vec<f64> {
        match self {
            Profile1D::Tabulated(t) => t.grid.clone(),
            _ => self.kinks(),
        }
    }

    fn left_tail(&self) -> (f64, Tail) {
        match self {
            Profile1D::PowerPlus { .. } => (0.0, Tail::ZERO),
            Profile1D::Constant { value } => (
                f64::NEG_INFINITY,
                Tail {
                    coeff: *value,
                    ..Tail::ZERO
                },
            ),
            Profile1D::Tabulated(t) => (t.grid[0], t.left),
            Profile1D::Function(p) => (p.left_start, p.left),
        }
    }

    fn right_tail(&self) -> (f64, Tail) {
        match self {
            Profile1D::PowerPlus { gamma } => (
                0.0,
                Tail {
                    origin: 0.0,
                    coeff: 1.0,
                    exponent: *gamma,
                },
            ),
            Profile1D::Constant { value } => (
                f64::INFINITY,
                Tail {
                    coeff: *value,
                    ..Tail::ZERO
                },
            ),
            Profile1D::Tabulated(t) => (t.grid[t.grid.len() - 1], t.right),
            Profile1D::Function(p) => (p.right_start, p.right),
        }
    }
}

/// Controls for [`flap_1d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half-width of the symmetric second-difference window.
    pub inner_radius: f64,
    /// Number of graded panels on each side of the window.
    pub panels: usize,
    /// Distance from `x` beyond which tails are integrated in closed form.
    pub tail_cutoff: f64,
    pub target_rel_err: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            inner_radius: 0.25,
            panels: 16,
            tail_cutoff: 20.0,
            target_rel_err: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius > 0.0) {
            return Err(Error::InvalidInput("inner_radius must be positive".into()));
        }
        if self.panels < 16 {
            return Err(Error::InvalidInput("at least 16 panels are required".into()));
        }
        if !(self.tail_cutoff > self.inner_radius) {
            return Err(Error::InvalidInput("tail_cutoff must exceed inner_radius".into()));
        }
        if !(self.target_rel_err > 0.0) {
            return Err(Error::InvalidInput("target_rel_err must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlapValue {
    pub x: f64,
    pub value: f64,
    pub error_estimate: f64,
}

/// `∫_M^∞ z^γ (z - ξ)^{-1-2s} dz` for `|ξ| ≤ M/2`, `γ < 2s`, by the binomial
/// series in `ξ/z`. Returns (value, truncation bound).
fn power_tail_series(gamma: f64, s: f64, m: f64, xi: f64) -> (f64, f64) {
    let ratio = xi / m;
    let mut coef = 1.0; // (1+2s)_k / k!
    let mut power = 1.0; // ratio^k
    let mut sum = 0.0;
    let lead = m.powf(gamma - 2.0 * s);
    for k in 0..200 {
        let kf = k as f64;
        let term = coef * power / (2.0 * s + kf - gamma);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coef *= (1.0 + 2.0 * s + kf) / (kf + 1.0);
        power *= ratio;
    }
    let value = lead * sum;
    (value, 1e-16 * value.abs())
}

/// Closed-form tail `∫ (f(x) - T(y)) / |x - y|^{1+2s} dy` over `y ≥ edge`
/// (`right = true`) or `y ≤ edge`.
fn tail_integral(fx: f64, x: f64, s: f64, edge: f64, tail: Tail, right: bool) -> Result<(f64, f64)> {
    let gap = (edge - x).abs();
    let mut value = fx * gap.powf(-2.0 * s) / (2.0 * s);
    let mut err = 1e-16 * value.abs();
    if tail.coeff != 0.0 {
        if tail.exponent >= 2.0 * s {
            return Err(Error::InvalidInput(format!(
                "tail exponent {} is not below 2s = {}; the fractional Laplacian diverges",
                tail.exponent,
                2.0 * s
            )));
        }
        // z = distance from the tail origin, measured into the tail
        let (m, xi) = if right {
            (edge - tail.origin, x - tail.origin)
        } else {
            (tail.origin - edge, tail.origin - x)
        };
        debug_assert!(m > 0.0 && xi.abs() <= 0.5 * m + 1e-12);
        let (series, series_err) = power_tail_series(tail.exponent, s, m, xi);
        value -= tail.coeff * series;
        err += tail.coeff.abs() * series_err;
    }
    Ok((value, err))
}

fn panel_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-17,
        rel_tol: 1e-11,
        min_level: 3,
        max_level: 9,
    }
}

/// Outer panels on one side: geometric boundaries from `x ± h` to the cutoff,
/// merged with kinks/breaks.
fn outer_panels(x: f64, h: f64, far: f64, panels: usize, breaks: &[f64], right: bool) -> Vec<(f64, f64)> {
    let span = far / h;
    let ratio = span.powf(1.0 / panels as f64);
    let mut pts: Vec<f64> = (0..=panels).map(|k| h * ratio.powi(k as i32)).collect();
    *pts.last_mut().unwrap() = far;
    for &b in breaks {
        let d = if right { b - x } else { x - b };
        if d > h && d < far {
            pts.push(d);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    pts.windows(2)
        .map(|w| {
            if right {
                (x + w[0], x + w[1])
            } else {
                (x - w[1], x - w[0])
            }
        })
        .collect()
}

/// `f''(x)` by a central difference with two Richardson steps; returns the
/// value and the change between the last two extrapolants.
fn second_derivative(f: &Profile1D, x: f64, fx: f64, step: f64) -> (f64, f64) {
    let d = |h: f64| (f.eval(x + h) + f.eval(x - h) - 2.0 * fx) / (h * h);
    let (d1, d2, d3) = (d(step), d(0.5 * step), d(0.25 * step));
    let (r1, r2) = ((4.0 * d2 - d1) / 3.0, (4.0 * d3 - d2) / 3.0);
    ((16.0 * r2 - r1) / 15.0, (r2 - r1).abs() / 15.0)
}

/// `(-Δ)^s f(x)` by principal-value quadrature.
pub fn flap_1d(f: &Profile1D, s: f64, x: f64, q: &QuadratureSpec) -> Result<FlapValue> {
    check_order(s)?;
    q.validate()?;
    let kinks = f.kinks();
    let scale = 1.0f64.max(x.abs());
    if kinks.iter().any(|&k| (x - k).abs() <= 1e-13 * scale) {
        return Err(Error::EvaluationAtKink(x));
    }
    let breaks = f.breaks();
    let (left_start, left_tail) = f.left_tail();
    let (right_start, right_tail) = f.right_tail();

    // window: stay clear of kinks and keep interpolation breaks as splits
    let nearest_kink = kinks
        .iter()
        .map(|&k| (x - k).abs())
        .fold(f64::INFINITY, f64::min);
    let h = q.inner_radius.min(0.5 * nearest_kink);
    let fx = f.eval(x);
    let exponent = 1.0 + 2.0 * s;
    let opts = panel_opts();

    // Taylor core r < r_c
    let r_c = 1e-3 * h;
    let (second, second_err) = second_derivative(f, x, fx, 0.05 * h);
    let weight = r_c.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let core = -second * weight;
    // dropped quartic Taylor term, relative size (r_c/h)²/12
    let core_err = core.abs() * (r_c / h).powi(2) / 12.0 + weight * second_err;

    let mut window_splits = vec![r_c, h];
    for &b in &breaks {
        let d = (b - x).abs();
        if d > r_c && d < h {
            window_splits.push(d);
        }
    }
    window_splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let window: QuadResult = window_splits
        .windows(2)
        .map(|w| {
            tanh_sinh(
                |r, _, _| (2.0 * fx - f.eval(x + r) - f.eval(x - r)) / r.powf(exponent),
                w[0],
                w[1],
                &opts,
            )
        })
        .sum();

    // cutoffs where the tail model becomes exact and the series converges
    let far_right = q
        .tail_cutoff
        .max(right_start - x)
        .max(right_tail.origin + 2.0 * (x - right_tail.origin).abs() - x)
        .max(2.0 * h);
    let far_left = q
        .tail_cutoff
        .max(x - left_start)
        .max(x - left_tail.origin + 2.0 * (left_tail.origin - x).abs())
        .max(2.0 * h);
    let far_right_finite = far_right.is_finite();
    let far_left_finite = far_left.is_finite();
    let fr = if far_right_finite { far_right } else { q.tail_cutoff.max(2.0 * h) };
    let fl = if far_left_finite { far_left } else { q.tail_cutoff.max(2.0 * h) };
    let half_panels = q.panels / 2;

    let outer = |lo: f64, hi: f64| {
        tanh_sinh(
            |y, _, _| (fx - f.eval(y)) / (y - x).abs().powf(exponent),
            lo,
            hi,
            &opts,
        )
    };
    let right_pieces: QuadResult = outer_panels(x, h, fr, half_panels, &breaks, true)
        .into_iter()
        .map(|(a, b)| outer(a, b))
        .sum();
    let left_pieces: QuadResult = outer_panels(x, h, fl, half_panels, &breaks, false)
        .into_iter()
        .map(|(a, b)| outer(a, b))
        .sum();

    let (rt, rt_err) = tail_integral(fx, x, s, x + fr, right_tail, true)?;
    let (lt, lt_err) = tail_integral(fx, x, s, x - fl, left_tail, false)?;

    let pieces = [core, window.value, right_pieces.value, left_pieces.value, rt, lt];
    let far_scale = fx.abs() * (fr.powf(-2.0 * s) + fl.powf(-2.0 * s)) / (2.0 * s);
    let magnitude: f64 = pieces.iter().map(|v| v.abs()).sum::<f64>() + far_scale;
    let raw: f64 = pieces.iter().sum();
    let raw_err = core_err + window.error + right_pieces.error + left_pieces.error + rt_err + lt_err;
    let c1s = Params::new(1, s)?.c_ns();
    let value = c1s * raw;
    let error_estimate = c1s * raw_err;
    let target = q.target_rel_err * c1s * magnitude.max(f64::MIN_POSITIVE);
    if !value.is_finite() || !(error_estimate <= target) {
        return Err(Error::NotConverged {
            what: format!("fractional Laplacian at x = {x}"),
            estimate: error_estimate,
            target,
        });
    }
    Ok(FlapValue {
        x,
        value,
        error_estimate,
    })
}

/// Largest scaled residual `|(-Δ)^s t₊^{s-1}|(t) · t^{1+s}` over the grid.
/// The exact value is zero: `t₊^{s-1}` is s-harmonic on the half-line.
pub fn large_solution_harmonicity(s: f64, t_grid: &[f64], q: &QuadratureSpec) -> Result<f64> {
    check_order(s)?;
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("large-solution grid points must be positive".into()));
    }
    let profile = Profile1D::power_plus(s - 1.0);
    t_grid.iter().try_fold(0.0f64, |acc, &t| {
        let v = flap_1d(&profile, s, t, q)?;
        Ok(acc.max(v.value.abs() * t.powf(1.0 + s)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionReduction {
    pub nd_value: f64,
    pub nd_std_err: f64,
    pub one_d_value: f64,
    pub discrepancy: f64,
}

impl DimensionReduction {
    /// Discrepancy in units of the Monte Carlo standard error.
    pub fn sigmas(&self) -> f64 {
        self.discrepancy / self.nd_std_err.max(f64::MIN_POSITIVE)
    }
}

/// Compare the n-dimensional fractional Laplacian of `v(x) = (x_n)₊^s` at a
/// point with `x_n < 0` against the 1D value from [`flap_1d`].
///
/// The n-dimensional value uses polar coordinates around `x`: Monte Carlo over
/// directions `θ ∈ S^{n-1}`, and the radial integral reduced by scaling
/// `r = |x_n| ρ / θ_n` to one fixed quadrature.
pub fn dimension_reduction_check(
    s: f64,
    n: u32,
    x_n: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<DimensionReduction> {
    check_order(s)?;
    if !(x_n < 0.0) {
        return Err(Error::InvalidInput(
            "dimension reduction is checked off the free boundary only (x_n < 0)".into(),
        ));
    }
    if mc_samples < 2 {
        return Err(Error::InvalidInput("need at least two Monte Carlo samples".into()));
    }
    let params = Params::new(n, s)?;
    // ∫_1^∞ (ρ-1)^s ρ^{-1-2s} dρ
    let radial = crate::quad::integrate_to_infinity(
        |rho, off| off.powf(s) * rho.powf(-1.0 - 2.0 * s),
        1.0,
        &QuadOptions::default(),
    );
    if !radial.converged {
        return Err(Error::NotConverged {
            what: "radial integral".into(),
            estimate: radial.error,
            target: 1e-11,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut dir = vec![0.0f64; n as usize];
    for k in 0..mc_samples {
        for c in dir.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        let theta_n = dir[n as usize - 1] / norm;
        let sample = if theta_n > 0.0 { theta_n.powf(2.0 * s) } else { 0.0 };
        let delta = sample - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (sample - mean);
    }
    let var = m2 / (mc_samples - 1) as f64;
    let factor = -params.c_ns() * sphere_area(n - 1) * radial.value * (-x_n).powf(-s);
    let nd_value = factor * mean;
    let nd_std_err = factor.abs() * (var / mc_samples as f64).sqrt();
    let one_d = flap_1d(&Profile1D::power_plus(s), s, x_n, &QuadratureSpec::default())?;
    Ok(DimensionReduction {
        nd_value,
        nd_std_err,
        one_d_value: one_d.value,
        discrepancy: (nd_value - one_d.value).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::bar_cs;

    #[test]
    fn half_space_profile_at_minus_one() {
        let v = flap_1d(&Profile1D::power_plus(0.5), 0.5, -1.0, &QuadratureSpec::default()).unwrap();
        assert!((v.value + 0.5).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn scaling_law_outside_the_half_line() {
        for s in [0.2, 0.5, 0.8] {
            let cs = bar_cs(s).unwrap();
            for tau in [0.5, 1.0, 2.0] {
                let v = flap_1d(&Profile1D::power_plus(s), s, -tau, &QuadratureSpec::default()).unwrap();
                let want = cs * tau.powf(-s);
                assert!((v.value / want - 1.0).abs() < 1e-7, "s={s} tau={tau}: {} vs {want}", v.value);
            }
        }
    }

    #[test]
    fn constant_profile_is_annihilated() {
        for s in [0.1, 0.5, 0.9] {
            for x in [-3.0, 0.0, 2.5] {
                let v = flap_1d(&Profile1D::Constant { value: 2.0 }, s, x, &QuadratureSpec::default()).unwrap();
                assert!(v.value.abs() < 1e-12, "s={s} x={x}: {}", v.value);
            }
        }
    }

    #[test]
    fn half_line_profile_is_harmonic_inside() {
        let v = flap_1d(&Profile1D::power_plus(0.5), 0.5, 1.0, &QuadratureSpec::default()).unwrap();
        assert!(v.value.abs() < 1e-3, "{v:?}");
        let v = flap_1d(&Profile1D::power_plus(0.3), 0.3, 0.2, &QuadratureSpec::default()).unwrap();
        assert!(v.value.abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn kink_is_rejected() {
        let err = flap_1d(&Profile1D::power_plus(0.5), 0.5, 0.0, &QuadratureSpec::default());
        assert!(matches!(err, Err(Error::EvaluationAtKink(_))));
    }

    #[test]
    fn divergent_tail_is_rejected() {
        let err = flap_1d(&Profile1D::power_plus(1.2), 0.5, -1.0, &QuadratureSpec::default());
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn spec_validation() {
        let mut q = QuadratureSpec::default();
        q.panels = 8;
        assert!(q.validate().is_err());
        let q = QuadratureSpec {
            inner_radius: 1.0,
            tail_cutoff: 0.5,
            ..QuadratureSpec::default()
        };
        assert!(q.validate().is_err());
    }

    #[test]
    fn large_solution_small_residual() {
        let r = large_solution_harmonicity(0.5, &[0.5, 1.0, 2.0], &QuadratureSpec::default()).unwrap();
        assert!(r < 1e-6, "{r}");
        assert!(large_solution_harmonicity(0.5, &[0.0], &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn tail_series_matches_quadrature() {
        let (s, gamma, m, xi) = (0.4, 0.3, 5.0, 1.7);
        let (series, _) = power_tail_series(gamma, s, m, xi);
        let q = crate::quad::integrate_to_infinity(
            |z, _| z.powf(gamma) * (z - xi).powf(-1.0 - 2.0 * s),
            m,
            &QuadOptions::default(),
        );
        assert!((series - q.value).abs() < 1e-11 * q.value.abs(), "{series} vs {}", q.value);
    }

    #[test]
    fn tabulated_interpolation_reproduces_cubic_free_line() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = grid.iter().map(|x| 2.0 * x + 1.0).collect();
        let t = Tabulated::new(grid, values, Tail::ZERO, Tail::ZERO).unwrap();
        for y in [0.05, 0.33, 0.91] {
            assert!((t.eval(y) - (2.0 * y + 1.0)).abs() < 1e-14);
        }
    }
}
