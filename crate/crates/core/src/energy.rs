//! Localized energy
//!
//! ```text
//! J_B(v) = c_{1,s}/2 ∬_{R²∖(B^c)²} (v(x) - v(y))² / |x - y|^{1+2s} dx dy + Λ² |{v > 0} ∩ B|
//! ```
//!
//! for one-dimensional profiles `u(t) = U₀ (t - p)₊^s` and perturbations of
//! them that are supported inside the window `B`.
//!
//! Energies of the growing profile are infinite (the far field contributes a
//! logarithm), so absolute energies need [`FarField::Clamped`]. Energy
//! *differences* never do: they are computed from the single integrand
//! `[(v(x)-v(y))² - (u(x)-u(y))²] / |x-y|^{1+2s}`, which vanishes unless `x`
//! or `y` lies in the support of `v - u`.
//!
//! Nested integrals use a fixed tanh-sinh level (the "mesh"), split at every
//! kink and breakpoint; nodes then cluster doubly exponentially at the `d^s`
//! cusps. The error estimate is the change from the next coarser level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::sync::Arc;

use crate::constants::Params;
use crate::error::{check_order, Error, Result};
use crate::fraclap::{flap_1d, FunctionProfile, Profile1D, QuadratureSpec, Tail};
use crate::quad::FixedTanhSinh;

/// Behaviour of the base profile far to the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FarField {
    /// `U₀ (t - p)^s` for all `t > p`.
    Growing,
    /// Frozen at its value at `t = R` for `t > R` (`R` beyond the window).
    Clamped(f64),
}

/// Perturbations supported inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    None,
    /// Domain variation `v(t) = U₀ (t - p - ε η(t))₊^s` with a flat-top bump
    /// `η` equal to 1 on `|t - p| ≤ w/2` and vanishing for `|t - p| ≥ w`.
    /// The free boundary moves to `p + ε` exactly.
    DomainShift { eps: f64, half_width: f64 },
    /// `v = u + A·η((t - c)/w)`.
    AdditiveBump {
        amplitude: f64,
        center: f64,
        half_width: f64,
    },
}

/// Quadrature resolution: fixed tanh-sinh level, step `2^-level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyMesh {
    pub level: usize,
}

impl Default for EnergyMesh {
    fn default() -> Self {
        Self { level: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration1D {
    pub free_boundary_point: f64,
    /// `U₀`, the coefficient of `d^s`.
    pub slope_coefficient: f64,
    pub window: (f64, f64),
    pub lambda_param: f64,
    pub far_field: FarField,
    pub perturbation: Perturbation,
    pub mesh: EnergyMesh,
}

impl Configuration1D {
    pub fn new(free_boundary_point: f64, slope_coefficient: f64, window: (f64, f64), lambda_param: f64) -> Self {
        Self {
            free_boundary_point,
            slope_coefficient,
            window,
            lambda_param,
            far_field: FarField::Growing,
            perturbation: Perturbation::None,
            mesh: EnergyMesh::default(),
        }
    }

    pub fn with_far_field(mut self, far_field: FarField) -> Self {
        self.far_field = far_field;
        self
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn with_mesh(mut self, mesh: EnergyMesh) -> Self {
        self.mesh = mesh;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.window;
        let p = self.free_boundary_point;
        if !(a < p && p < b) {
            return Err(Error::InvalidInput(format!(
                "window ({a}, {b}) must strictly contain the free boundary point {p}"
            )));
        }
        if !(self.slope_coefficient >= 0.0) {
            return Err(Error::InvalidInput("slope coefficient must be nonnegative".into()));
        }
        if self.mesh.level < 2 {
            return Err(Error::InvalidInput("energy mesh level must be at least 2".into()));
        }
        if let FarField::Clamped(r) = self.far_field {
            if !(r >= b) {
                return Err(Error::InvalidInput("clamp radius must lie beyond the window".into()));
            }
        }
        match self.perturbation {
            Perturbation::None => {}
            Perturbation::DomainShift { eps, half_width } => {
                if !(half_width > 0.0) || p - half_width < a || p + half_width > b {
                    return Err(Error::InvalidInput("domain-variation bump must fit inside the window".into()));
                }
                if !(eps.abs() < 0.5 * half_width) {
                    return Err(Error::InvalidInput(
                        "shift must stay inside the flat part of the bump (|eps| < w/2)".into(),
                    ));
                }
            }
            Perturbation::AdditiveBump {
                center, half_width, ..
            } => {
                if !(half_width > 0.0) || center - half_width <= p || center + half_width > b {
                    return Err(Error::InvalidInput(
                        "additive bump must be supported inside the positivity set and the window".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn base_value(&self, s: f64, t: f64) -> f64 {
        let p = self.free_boundary_point;
        let t = match self.far_field {
            FarField::Clamped(r) => t.min(r),
            FarField::Growing => t,
        };
        if t > p {
            self.slope_coefficient * (t - p).powf(s)
        } else {
            0.0
        }
    }

    /// Profile value, perturbation included.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        let p = self.free_boundary_point;
        match self.perturbation {
            Perturbation::None => self.base_value(s, t),
            Perturbation::DomainShift { eps, half_width } => {
                let shifted = t - eps * flat_top((t - p) / half_width);
                let d = shifted - p;
                if d > 0.0 {
                    self.slope_coefficient * d.powf(s)
                } else {
                    0.0
                }
            }
            Perturbation::AdditiveBump {
                amplitude,
                center,
                half_width,
            } => self.base_value(s, t) + amplitude * flat_top((t - center) / half_width),
        }
    }

    /// Free boundary point of the (possibly perturbed) profile.
    pub fn perturbed_free_boundary(&self) -> f64 {
        match self.perturbation {
            Perturbation::DomainShift { eps, .. } => self.free_boundary_point + eps,
            _ => self.free_boundary_point,
        }
    }

    /// Interval outside which the profile equals the base profile.
    fn perturbation_support(&self) -> Option<(f64, f64)> {
        let p = self.free_boundary_point;
        match self.perturbation {
            Perturbation::None => None,
            Perturbation::DomainShift { half_width, .. } => Some((p - half_width, p + half_width)),
            Perturbation::AdditiveBump {
                center, half_width, ..
            } => Some((center - half_width, center + half_width)),
        }
    }

    /// Kinks and smoothness breaks of the profile.
    fn breaks(&self) -> Vec<f64> {
        let p = self.free_boundary_point;
        let mut out = vec![p];
        if let FarField::Clamped(r) = self.far_field {
            out.push(r);
        }
        match self.perturbation {
            Perturbation::None => {}
            Perturbation::DomainShift { eps, half_width } => {
                out.push(p + eps);
                for k in [-1.0, -0.5, 0.5, 1.0] {
                    out.push(p + k * half_width);
                }
            }
            Perturbation::AdditiveBump {
                center, half_width, ..
            } => {
                for k in [-1.0, -0.5, 0.5, 1.0] {
                    out.push(center + k * half_width);
                }
            }
        }
        out
    }

    fn kinks(&self) -> Vec<f64> {
        let mut out = vec![self.free_boundary_point];
        if let Perturbation::DomainShift { eps, .. } = self.perturbation {
            out.push(self.free_boundary_point + eps);
        }
        if let FarField::Clamped(r) = self.far_field {
            out.push(r);
        }
        out
    }

    fn positivity_measure_in_window(&self) -> f64 {
        if self.slope_coefficient == 0.0 {
            return 0.0;
        }
        let (_, b) = self.window;
        let mut measure = b - self.perturbed_free_boundary();
        if let Perturbation::AdditiveBump { amplitude, .. } = self.perturbation {
            // a negative bump larger than u could open a gap; not supported
            debug_assert!(amplitude >= 0.0 || measure > 0.0);
        }
        measure = measure.max(0.0);
        measure
    }
}

/// Flat-top bump: 1 on `|z| ≤ 1/2`, 0 on `|z| ≥ 1`, quintic smoothstep (C²)
/// in between.
fn flat_top(z: f64) -> f64 {
    let a = z.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let t = 2.0 * (1.0 - a);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    /// `c_{1,s}/2 ∬ ...`
    pub seminorm: f64,
    /// `Λ² |{u>0} ∩ B|`
    pub measure: f64,
    pub error_estimate: f64,
}

const MESH_REL_TOL: f64 = 1e-6;

/// Absolute localized energy; needs a clamped far field.
pub fn energy_local(c: &Configuration1D, s: f64) -> Result<EnergyValue> {
    check_order(s)?;
    c.validate()?;
    if c.far_field == FarField::Growing && c.slope_coefficient != 0.0 {
        return Err(Error::InvalidInput(
            "localized energy of a growing profile diverges logarithmically; use FarField::Clamped".into(),
        ));
    }
    let fine = raw_seminorm(c, s, &FixedTanhSinh::new(c.mesh.level));
    let coarse = raw_seminorm(c, s, &FixedTanhSinh::new(c.mesh.level - 1));
    let c1s = Params::new(1, s)?.c_ns();
    let seminorm = 0.5 * c1s * fine;
    let error_estimate = 0.5 * c1s * (fine - coarse).abs();
    let measure = c.lambda_param.powi(2) * c.positivity_measure_in_window();
    if error_estimate > MESH_REL_TOL * seminorm.abs().max(1e-300) && seminorm != 0.0 {
        return Err(Error::NotConverged {
            what: "localized energy (two-mesh estimate)".into(),
            estimate: error_estimate,
            target: MESH_REL_TOL * seminorm.abs(),
        });
    }
    Ok(EnergyValue {
        value: seminorm + measure,
        seminorm,
        measure,
        error_estimate,
    })
}

/// `∬_{R²∖(B^c)²} (u(x)-u(y))²/|x-y|^{1+2s}` for a clamped profile:
/// `∬_{B×B} + 2∬_{B×B^c}`.
fn raw_seminorm(c: &Configuration1D, s: f64, rule: &FixedTanhSinh) -> f64 {
    if c.slope_coefficient == 0.0 {
        return 0.0;
    }
    let (a, b) = c.window;
    let r = match c.far_field {
        FarField::Clamped(r) => r,
        FarField::Growing => unreachable!("checked by caller"),
    };
    let e = 1.0 + 2.0 * s;
    let u = |t: f64| c.value(s, t);
    let far_value = u(r);
    // left of the window the profile vanishes (also for perturbed profiles,
    // whose support lies inside the window)
    let zero_left = sorted_unique(c.kinks()).into_iter().fold(f64::INFINITY, f64::min).min(b);
    let outer_pts = sorted_unique(
        c.breaks()
            .into_iter()
            .filter(|&t| t > a && t < b)
            .chain([a, b])
            .collect(),
    );

    let mut total = 0.0;
    for seg in outer_pts.windows(2) {
        total += rule.apply(
            |x, _, to_b_seg| {
                let ux = u(x);
                let to_b = if seg[1] == b { to_b_seg } else { b - x };
                // B × B, both orders
                let mut inner_pts: Vec<f64> = c
                    .breaks()
                    .into_iter()
                    .filter(|&t| t > a && t < b && t != x)
                    .chain([a, b, x])
                    .collect();
                inner_pts = sorted_unique(inner_pts);
                let mut bb = 0.0;
                for w in inner_pts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if hi <= zero_left && ux == 0.0 {
                        continue;
                    }
                    bb += rule.apply(
                        |y, dlo, dhi| {
                            let dist = if hi == x {
                                dhi
                            } else if lo == x {
                                dlo
                            } else {
                                (x - y).abs()
                            };
                            let diff = ux - u(y);
                            diff * diff / dist.powf(e)
                        },
                        lo,
                        hi,
                    );
                }
                // y < a: profile vanishes there
                let left = ux * ux * (x - a).powf(-2.0 * s) / (2.0 * s);
                // a < y: y in [b, R] then the frozen tail
                let mid = if r > b {
                    rule.apply(
                        |y, dlo, _| {
                            let diff = ux - u(y);
                            diff * diff / (dlo + to_b).powf(e)
                        },
                        b,
                        r,
                    )
                } else {
                    0.0
                };
                let tail = (ux - far_value).powi(2) * (r - x).powf(-2.0 * s) / (2.0 * s);
                bb + 2.0 * (left + mid + tail)
            },
            seg[0],
            seg[1],
        );
    }
    total
}

/// Description of a pair `(u, v)` that differ only on `support`.
struct Pair<'a> {
    u: &'a Configuration1D,
    v: &'a Configuration1D,
    support: (f64, f64),
    breaks: Vec<f64>,
}

fn pair<'a>(u: &'a Configuration1D, v: &'a Configuration1D) -> Result<Pair<'a>> {
    u.validate()?;
    v.validate()?;
    if u.free_boundary_point != v.free_boundary_point
        || u.slope_coefficient != v.slope_coefficient
        || u.window != v.window
        || u.far_field != v.far_field
    {
        return Err(Error::InvalidInput(
            "u and v must share the base profile and window (u ≡ v outside B)".into(),
        ));
    }
    let support = match (u.perturbation_support(), v.perturbation_support()) {
        (None, None) => None,
        (Some(a), None) | (None, Some(a)) => Some(a),
        (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
    };
    let support = support.unwrap_or((u.free_boundary_point, u.free_boundary_point));
    let mut breaks = u.breaks();
    breaks.extend(v.breaks());
    Ok(Pair {
        u,
        v,
        support,
        breaks: sorted_unique(breaks),
    })
}

/// `∬_{R²∖(B^c)²} [(v(x)-v(y))² - (u(x)-u(y))²] / |x-y|^{1+2s}` as
/// `∫_S dx ∫ ω(y) D(x, y) dy` with `ω = 1` on the support `S` and 2 off it.
fn raw_seminorm_difference(pr: &Pair, s: f64, rule: &FixedTanhSinh) -> f64 {
    let (lo, hi) = pr.support;
    if lo == hi {
        return 0.0;
    }
    let e = 1.0 + 2.0 * s;
    let u = |t: f64| pr.u.value(s, t);
    let v = |t: f64| pr.v.value(s, t);
    let inside: Vec<f64> = sorted_unique(
        pr.breaks
            .iter()
            .copied()
            .filter(|&t| t > lo && t < hi)
            .chain([lo, hi])
            .collect(),
    );
    let left_breaks: Vec<f64> = pr.breaks.iter().copied().filter(|&t| t < lo).collect();
    let right_breaks: Vec<f64> = pr.breaks.iter().copied().filter(|&t| t > hi).collect();

    let mut total = 0.0;
    for seg in inside.windows(2) {
        total += rule.apply(
            |x, _, _| {
                let (ux, vx) = (u(x), v(x));
                let (wx, zx) = (vx - ux, vx + ux);
                let mut inner_pts: Vec<f64> = inside.iter().copied().filter(|&t| t != x).collect();
                inner_pts.push(x);
                let inner_pts = sorted_unique(inner_pts);
                let mut acc = 0.0;
                for w in inner_pts.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    acc += rule.apply(
                        |y, dlo, dhi| {
                            let dist = if b == x {
                                dhi
                            } else if a == x {
                                dlo
                            } else {
                                (x - y).abs()
                            };
                            let dv = vx - v(y);
                            let du = ux - u(y);
                            (dv - du) * (dv + du) / dist.powf(e)
                        },
                        a,
                        b,
                    );
                }
                // off the support u = v =: g
                let off = |y: f64, dist: f64| wx * (zx - 2.0 * u(y)) / dist.powf(e);
                let mut pts = left_breaks.clone();
                pts.push(lo);
                let mut outside = rule.apply_to_infinity(|y, _| off(2.0 * pts[0] - y, x - (2.0 * pts[0] - y)), pts[0]);
                for w in pts.windows(2) {
                    outside += rule.apply(|y, _, _| off(y, x - y), w[0], w[1]);
                }
                let mut pts = vec![hi];
                pts.extend(right_breaks.iter().copied());
                for w in pts.windows(2) {
                    outside += rule.apply(|y, _, _| off(y, y - x), w[0], w[1]);
                }
                let last = *pts.last().unwrap();
                outside += rule.apply_to_infinity(|y, _| off(y, y - x), last);
                acc + 2.0 * outside
            },
            seg[0],
            seg[1],
        );
    }
    total
}

/// Difference of the localized seminorm terms `[v]² - [u]²` (with the
/// `c_{1,s}/2` normalization) and its two-mesh error estimate.
fn seminorm_difference(pr: &Pair, s: f64, level: usize) -> Result<(f64, f64)> {
    let c1s = Params::new(1, s)?.c_ns();
    let fine = raw_seminorm_difference(pr, s, &FixedTanhSinh::new(level));
    let coarse = raw_seminorm_difference(pr, s, &FixedTanhSinh::new(level - 1));
    Ok((0.5 * c1s * fine, 0.5 * c1s * (fine - coarse).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
}

impl SeminormIdentity {
    pub fn relative_residual(&self) -> f64 {
        let scale = self.lhs.abs().max(self.rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.residual / scale
        }
    }
}

/// `[v]²_B - [u]²_B` against `∫_B (v - u)(-Δ)^s (v + u)`.
pub fn seminorm_identity_check(u: &Configuration1D, v: &Configuration1D, s: f64) -> Result<SeminormIdentity> {
    check_order(s)?;
    let pr = pair(u, v)?;
    let (lo, hi) = pr.support;
    if lo == hi {
        return Ok(SeminormIdentity {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
            lhs_error: 0.0,
            rhs_error: 0.0,
        });
    }
    let level = u.mesh.level.max(v.mesh.level);
    let (lhs, lhs_error) = seminorm_difference(&pr, s, level)?;

    // (−Δ)^s (v + u) pointwise through the 1D quadrature
    let (uc, vc) = (*u, *v);
    // smoothness breaks are declared as kinks so panels split there
    let kinks = pr.breaks.clone();
    let left_start = kinks[0].min(lo);
    let (right_start, right_tail) = match u.far_field {
        FarField::Growing => (
            hi.max(*kinks.last().unwrap()),
            Tail {
                origin: u.free_boundary_point,
                coeff: 2.0 * u.slope_coefficient,
                exponent: s,
            },
        ),
        FarField::Clamped(r) => (
            r.max(hi),
            Tail {
                origin: 0.0,
                coeff: 2.0 * u.value(s, r),
                exponent: 0.0,
            },
        ),
    };
    let sum_profile = Profile1D::Function(FunctionProfile {
        f: Arc::new(move |t| uc.value(s, t) + vc.value(s, t)),
        kinks: kinks.clone(),
        left_start,
        left: Tail::ZERO,
        right_start,
        right: right_tail,
    });
    let q = QuadratureSpec::default();
    let mut pts: Vec<f64> = pr.breaks.iter().copied().filter(|&t| t > lo && t < hi).collect();
    pts.extend([lo, hi]);
    let pts = sorted_unique(pts);
    let rule = FixedTanhSinh::new(level.min(5));
    let mut rhs = 0.0;
    let mut failure = None;
    let mut rhs_error = 0.0;
    for w in pts.windows(2) {
        rhs += rule.apply(
            |x, dlo, dhi| {
                // nodes closer than this to a kink are dropped; the integrand
                // is O(d^{-s}) there
                if dlo.min(dhi) < 1e-10 * (1.0 + x.abs()) && kinks.iter().any(|&k| (k - x).abs() < 1e-9) {
                    return 0.0;
                }
                let w = v.value(s, x) - u.value(s, x);
                if w == 0.0 {
                    return 0.0;
                }
                match flap_1d(&sum_profile, s, x, &q) {
                    Ok(fv) => {
                        rhs_error += (w * fv.error_estimate).abs() * dlo.min(dhi).min(1.0);
                        w * fv.value
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            w[0],
            w[1],
        );
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SeminormIdentity {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        lhs_error,
        rhs_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstVariationScan {
    pub eps: Vec<f64>,
    pub delta_energy: Vec<f64>,
    /// Linear coefficient of `J(v_ε) - J(u) ≈ a₁ε + a₂ε²`.
    pub slope: f64,
    pub quadratic: f64,
    pub fit_rms: f64,
    /// `Γ(1+s)² U₀² - Λ²`.
    pub expected_slope: f64,
    /// Zero of the fitted slope as a function of `U₀`.
    pub critical_u0: f64,
    pub error_estimate: f64,
}

/// Default half-width of the domain-variation bump.
fn default_half_width(c: &Configuration1D) -> f64 {
    let (a, b) = c.window;
    let p = c.free_boundary_point;
    0.5 * (p - a).min(b - p)
}

/// Energy change under the domain variation that moves the free boundary by
/// `ε`, for every `ε` in the list, with the linear+quadratic fit.
///
/// The seminorm change is exactly quadratic in `U₀` and the measure change is
/// `-Λ²ε`, so the slope at any `U₀` follows from one scan; `critical_u0` is
/// the root of `U₀² a₁(1) - Λ²`.
pub fn first_variation_scan(c: &Configuration1D, s: f64, eps_list: &[f64]) -> Result<FirstVariationScan> {
    check_order(s)?;
    c.validate()?;
    if c.perturbation != Perturbation::None {
        return Err(Error::InvalidInput("first-variation scan starts from an unperturbed profile".into()));
    }
    if eps_list.len() < 3 || eps_list.iter().any(|&e| e == 0.0) {
        return Err(Error::InvalidInput("need at least three nonzero epsilon values".into()));
    }
    let w = default_half_width(c);
    let unit = Configuration1D {
        slope_coefficient: 1.0,
        ..*c
    };
    let mut sem = Vec::with_capacity(eps_list.len());
    let mut err = 0.0f64;
    for &eps in eps_list {
        let v = unit.with_perturbation(Perturbation::DomainShift { eps, half_width: w });
        let pr = pair(&unit, &v)?;
        let (d, e) = seminorm_difference(&pr, s, c.mesh.level)?;
        sem.push(d);
        err = err.max(e);
    }
    let u0_sq = c.slope_coefficient.powi(2);
    let lam_sq = c.lambda_param.powi(2);
    let delta: Vec<f64> = eps_list
        .iter()
        .zip(&sem)
        .map(|(&e, &d)| u0_sq * d - lam_sq * e)
        .collect();
    let (a1, a2, rms) = fit_linear_quadratic(eps_list, &delta);
    let (unit_a1, _, _) = fit_linear_quadratic(eps_list, &sem);
    let max_quad = eps_list.iter().map(|e| (a2 * e * e).abs()).fold(0.0, f64::max);
    let floor = 1e-9 * eps_list.iter().zip(&delta).map(|(_, d)| d.abs()).fold(0.0, f64::max);
    if rms > 0.1 * max_quad + floor {
        return Err(Error::FitRejected(format!(
            "residual {rms:e} of the linear+quadratic model exceeds 10% of the quadratic term {max_quad:e}"
        )));
    }
    let gamma1s = gamma(1.0 + s);
    Ok(FirstVariationScan {
        eps: eps_list.to_vec(),
        delta_energy: delta,
        slope: a1,
        quadratic: a2,
        fit_rms: rms,
        expected_slope: gamma1s * gamma1s * u0_sq - lam_sq,
        critical_u0: if unit_a1 > 0.0 {
            c.lambda_param / unit_a1.sqrt()
        } else {
            f64::NAN
        },
        error_estimate: err * u0_sq,
    })
}

/// Least squares for `y ≈ a₁x + a₂x²`; returns `(a₁, a₂, rms residual)`.
fn fit_linear_quadratic(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut s2, mut s3, mut s4, mut sy1, mut sy2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let x2 = xi * xi;
        s2 += x2;
        s3 += x2 * xi;
        s4 += x2 * x2;
        sy1 += yi * xi;
        sy2 += yi * x2;
    }
    let det = s2 * s4 - s3 * s3;
    let a1 = (sy1 * s4 - sy2 * s3) / det;
    let a2 = (s2 * sy2 - s3 * sy1) / det;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - a1 * xi - a2 * xi * xi).powi(2))
        .sum();
    (a1, a2, (ss / x.len() as f64).sqrt())
}

/// Independent Monte Carlo estimate of the seminorm term of
/// [`energy_local`] (clamped far field only). Returns (value, std_err).
pub fn energy_seminorm_monte_carlo(c: &Configuration1D, s: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_order(s)?;
    c.validate()?;
    let r = match c.far_field {
        FarField::Clamped(r) => r,
        FarField::Growing => {
            return Err(Error::InvalidInput("Monte Carlo energy needs a clamped far field".into()));
        }
    };
    let (a, b) = c.window;
    let p = c.free_boundary_point;
    let e = 1.0 + 2.0 * s;
    let u = |t: f64| c.value(s, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    // x = p ± L ξ² and y = x ± D η²: the squares absorb the cusp at p and
    // the diagonal singularity
    let far = r - a;
    for k in 0..samples {
        let xi: f64 = rng.random();
        let (x, jac_x) = if rng.random::<bool>() {
            (p + (b - p) * xi * xi, 4.0 * (b - p) * xi)
        } else {
            (p - (p - a) * xi * xi, 4.0 * (p - a) * xi)
        };
        let eta: f64 = rng.random();
        let d = far * eta * eta;
        let jac_d = 4.0 * far * eta;
        let y = if rng.random::<bool>() { x + d } else { x - d };
        let ux = u(x);
        let mut val = 0.0;
        if y >= a && y <= r && d > 0.0 {
            let diff = ux - u(y);
            let weight = if y <= b { 1.0 } else { 2.0 };
            val = weight * diff * diff / d.powf(e) * jac_d;
        }
        // y < a and y > R in closed form
        val += 2.0 * (ux * ux * (x - a).powf(-2.0 * s) + (ux - u(r)).powi(2) * (r - x).powf(-2.0 * s)) / (2.0 * s);
        val *= jac_x;
        let delta = val - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (val - mean);
    }
    let c1s = Params::new(1, s)?.c_ns();
    let std_err = (m2 / (samples - 1) as f64 / samples as f64).sqrt();
    Ok((0.5 * c1s * mean, 0.5 * c1s * std_err))
}
