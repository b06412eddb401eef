//! Closed-form constants of the fractional one-phase problem and the integral
//! identities they rest on.
//!
//! Every identity is checked the same way: the integral side is computed by
//! adaptive double-exponential quadrature, the closed-form side through Γ, and
//! the absolute residual is reported next to the quadrature's own error
//! estimate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{check_order, Error, Result};
use crate::quad::{integrate_to_infinity, tanh_sinh, QuadOptions, QuadResult};

/// Dimension and order of the problem together with the derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub s: f64,
    /// Extension weight exponent `a = 1 - 2s`.
    pub a: f64,
    /// Critical free-boundary constant `Λ = Γ(1+s)`.
    pub lambda_const: f64,
}

impl Params {
    pub fn new(n: u32, s: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain {
                name: "n",
                value: n as f64,
                range: "n >= 1",
            });
        }
        check_order(s)?;
        Ok(Self {
            n,
            s,
            a: 1.0 - 2.0 * s,
            lambda_const: gamma(1.0 + s),
        })
    }

    pub fn c_ns(&self) -> f64 {
        c_ns_raw(self.n, self.s)
    }

    pub fn bar_cs(&self) -> f64 {
        bar_cs_raw(self.s)
    }

    pub fn expansion_constants(&self) -> ExpansionConstants {
        expansion_raw(self.s)
    }

    pub fn d_s(&self) -> f64 {
        d_s_raw(self.s)
    }
}

/// Surface measure `|S^k|` of the unit `k`-sphere in `R^(k+1)`.
/// `|S^0| = 2` counts the two points `±1`.
pub fn sphere_area(k: u32) -> f64 {
    let half = 0.5 * (k as f64 + 1.0);
    2.0 * PI.powf(half) / gamma(half)
}

/// The constant of the fractional Laplacian,
/// `c_{n,s} = s 2^{2s} Γ((n+2s)/2) / (π^{n/2} Γ(1-s))`.
pub fn c_ns(p: &Params) -> f64 {
    p.c_ns()
}

fn c_ns_raw(n: u32, s: f64) -> f64 {
    let nf = n as f64;
    s * 4f64.powf(s) * gamma(0.5 * nf + s) / (PI.powf(0.5 * nf) * gamma(1.0 - s))
}

/// `c̄_s = -Γ(1+s)/Γ(1-s)`, the coefficient of `(x₁)₋^{-s}` in `(-Δ)^s (x₁)₊^s`.
pub fn bar_cs(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(bar_cs_raw(s))
}

fn bar_cs_raw(s: f64) -> f64 {
    -gamma(1.0 + s) / gamma(1.0 - s)
}

/// Constants of the second-order expansion of `(-Δ)^s u` outside a curved
/// domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub bar_cs: f64,
    /// `c̄_* = s Γ(1+s)/Γ(2-s)` (mean curvature term).
    pub bar_cstar: f64,
    /// `c̄_{1+s} = Γ(2+s)/Γ(2-s)` (normal derivative term).
    pub bar_c1s: f64,
}

pub fn expansion_constants(s: f64) -> Result<ExpansionConstants> {
    check_order(s)?;
    Ok(expansion_raw(s))
}

fn expansion_raw(s: f64) -> ExpansionConstants {
    let g2ms = gamma(2.0 - s);
    ExpansionConstants {
        bar_cs: bar_cs_raw(s),
        bar_cstar: s * gamma(1.0 + s) / g2ms,
        bar_c1s: gamma(2.0 + s) / g2ms,
    }
}

/// `d_s = 2^{2s-1} Γ(s)/Γ(1-s)`, the Dirichlet-to-Neumann constant of the
/// extension.
pub fn d_s(s: f64) -> Result<f64> {
    check_order(s)?;
    Ok(d_s_raw(s))
}

fn d_s_raw(s: f64) -> f64 {
    2f64.powf(2.0 * s - 1.0) * gamma(s) / gamma(1.0 - s)
}

/// The integral identities that can be checked against quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    /// `∫₀¹ t^s (1-t)^{-s} dt = Γ(1+s)Γ(1-s)`
    Beta1,
    /// `∫₀¹ (t/(1-t))^s dt = s Γ(s) Γ(1-s)`
    Beta2,
    /// `∫₀¹ (t/(1-t))^s t dt = Γ(2+s)Γ(1-s)/2`
    Beta3,
    /// `∫₀¹ (t/(1-t))^s (1-t) dt = Γ(1+s)Γ(2-s)/2`
    Beta4,
    /// `∫_{S^{n-1}} |θ_n|^{2s} dθ = |S^{n-2}| Γ((n-1)/2) Γ(s+1/2) / Γ(n/2+s)`
    Sphere,
    /// `∫₀^π (1+cosθ)^{2s}(cosθ-1)(sinθ)^{1-2s} dθ = -2πs(1-s)/sin(πs)`
    TrigA,
    /// `∫₀^π cosθ (1+cosθ)^{2s}(sinθ)^{1-2s} dθ = 2πs²/sin(πs)`
    TrigB,
    /// `s³ = d_s/(Γ(1+s)Γ(s)) · 2^{-2s} · 2πs⁴/sin(πs)`
    GammaS3,
    /// `Γ(2s) = Γ(s)Γ(s+1/2) 2^{2s-1}/√π`, with `Γ(2s)` from Euler's integral.
    Duplication,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::Beta1,
        IdentityId::Beta2,
        IdentityId::Beta3,
        IdentityId::Beta4,
        IdentityId::Sphere,
        IdentityId::TrigA,
        IdentityId::TrigB,
        IdentityId::GammaS3,
        IdentityId::Duplication,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::Beta1 => "beta1",
            IdentityId::Beta2 => "beta2",
            IdentityId::Beta3 => "beta3",
            IdentityId::Beta4 => "beta4",
            IdentityId::Sphere => "sphere",
            IdentityId::TrigA => "trigA",
            IdentityId::TrigB => "trigB",
            IdentityId::GammaS3 => "gamma_s3",
            IdentityId::Duplication => "duplication",
        }
    }

    pub fn needs_dimension(self) -> bool {
        self == IdentityId::Sphere
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub s: f64,
    pub n: Option<u32>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub quadrature_error_estimate: f64,
    pub converged: bool,
    pub pass: bool,
}

pub const DEFAULT_IDENTITY_TOL: f64 = 1e-8;

fn identity_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-10,
        min_level: 3,
        max_level: 10,
    }
}

/// Evaluate one identity at order `s` (and dimension `n` for the sphere integral).
///
/// Quadrature that fails to converge yields `pass = false` whatever the residual.
pub fn verify_identity(id: IdentityId, s: f64, n: Option<u32>, tol: f64) -> Result<IdentityReport> {
    check_order(s)?;
    let opts = identity_quad_options();
    let (lhs, rhs): (QuadResult, f64) = match id {
        IdentityId::Beta1 | IdentityId::Beta2 => {
            let q = tanh_sinh(|_, t, one_minus| t.powf(s) * one_minus.powf(-s), 0.0, 1.0, &opts);
            let rhs = if id == IdentityId::Beta1 {
                gamma(1.0 + s) * gamma(1.0 - s)
            } else {
                s * gamma(s) * gamma(1.0 - s)
            };
            (q, rhs)
        }
        IdentityId::Beta3 => {
            let q = tanh_sinh(|_, t, one_minus| t.powf(1.0 + s) * one_minus.powf(-s), 0.0, 1.0, &opts);
            (q, 0.5 * gamma(2.0 + s) * gamma(1.0 - s))
        }
        IdentityId::Beta4 => {
            let q = tanh_sinh(|_, t, one_minus| t.powf(s) * one_minus.powf(1.0 - s), 0.0, 1.0, &opts);
            (q, 0.5 * gamma(1.0 + s) * gamma(2.0 - s))
        }
        IdentityId::Sphere => {
            let n = n.ok_or_else(|| Error::InvalidInput("identity `sphere` needs a dimension n".into()))?;
            if n < 2 {
                return Err(Error::Domain {
                    name: "n",
                    value: n as f64,
                    range: "n >= 2 for the sphere identity",
                });
            }
            let lower = sphere_area(n - 2);
            // polar angle from the equator: |θ_n| = sin θ, density cos^{n-2} θ
            let q = tanh_sinh(
                |_, theta, to_pole| theta.sin().powf(2.0 * s) * to_pole.sin().powi(n as i32 - 2),
                0.0,
                0.5 * PI,
                &opts,
            )
            .scale(2.0 * lower);
            let nf = n as f64;
            let rhs = lower * gamma(0.5 * (nf - 1.0)) * gamma(s + 0.5) / gamma(0.5 * nf + s);
            (q, rhs)
        }
        IdentityId::TrigA => {
            let q = tanh_sinh(
                |_, from0, fromp| {
                    let one_plus_cos = 2.0 * (0.5 * fromp).sin().powi(2);
                    let cos_minus_one = -2.0 * (0.5 * from0).sin().powi(2);
                    let sin = from0.min(fromp).sin();
                    one_plus_cos.powf(2.0 * s) * cos_minus_one * sin.powf(1.0 - 2.0 * s)
                },
                0.0,
                PI,
                &opts,
            );
            (q, -2.0 * PI * s * (1.0 - s) / (PI * s).sin())
        }
        IdentityId::TrigB => {
            let q = tanh_sinh(
                |theta, from0, fromp| {
                    let one_plus_cos = 2.0 * (0.5 * fromp).sin().powi(2);
                    let sin = from0.min(fromp).sin();
                    theta.cos() * one_plus_cos.powf(2.0 * s) * sin.powf(1.0 - 2.0 * s)
                },
                0.0,
                PI,
                &opts,
            );
            (q, 2.0 * PI * s * s / (PI * s).sin())
        }
        IdentityId::GammaS3 => {
            let exact = QuadResult {
                value: s * s * s,
                error: 0.0,
                evals: 0,
                converged: true,
            };
            let rhs = d_s_raw(s) / (gamma(1.0 + s) * gamma(s)) * 4f64.powf(-s) * 2.0 * PI * s.powi(4)
                / (PI * s).sin();
            (exact, rhs)
        }
        IdentityId::Duplication => {
            let z = s;
            let near = tanh_sinh(|_, t, _| t.powf(2.0 * z - 1.0) * (-t).exp(), 0.0, 1.0, &opts);
            let far = integrate_to_infinity(|t, _| t.powf(2.0 * z - 1.0) * (-t).exp(), 1.0, &opts);
            let rhs = gamma(z) * gamma(z + 0.5) * 2f64.powf(2.0 * z - 1.0) / PI.sqrt();
            (near.combine(far), rhs)
        }
    };
    let residual = (lhs.value - rhs).abs();
    Ok(IdentityReport {
        identity_id: id,
        s,
        n: if id.needs_dimension() { n } else { None },
        lhs: lhs.value,
        rhs,
        residual,
        quadrature_error_estimate: lhs.error,
        converged: lhs.converged,
        pass: lhs.converged && residual.is_finite() && residual <= tol,
    })
}

/// Every identity at order `s`; the sphere identity once per dimension in `dims`.
pub fn verify_all(s: f64, dims: &[u32], tol: f64) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for id in IdentityId::ALL {
        if id.needs_dimension() {
            for &n in dims {
                out.push(verify_identity(id, s, Some(n), tol)?);
            }
        } else {
            out.push(verify_identity(id, s, None, tol)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Γ by Stirling's series after upward recurrence; shares no code with the
    /// Lanczos route used by the library.
    fn gamma_series(x: f64) -> f64 {
        let mut shift = 1.0;
        let mut z = x;
        while z < 20.0 {
            shift *= z;
            z += 1.0;
        }
        let inv = 1.0 / z;
        let inv2 = inv * inv;
        // Bernoulli terms B_{2k}/(2k(2k-1) z^{2k-1})
        let series = inv
            * (1.0 / 12.0
                + inv2
                    * (-1.0 / 360.0
                        + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
        let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
        ln.exp() / shift
    }

    #[test]
    fn series_gamma_agrees_with_library_gamma() {
        for x in [0.1, 0.5, 1.0, 1.3, 2.7, 5.5] {
            let rel = (gamma_series(x) / gamma(x) - 1.0).abs();
            assert!(rel < 1e-13, "x = {x}: rel {rel:e}");
        }
    }

    #[test]
    fn c_ns_closed_values() {
        let p = Params::new(1, 0.5).unwrap();
        assert!((c_ns(&p) - 1.0 / PI).abs() < 1e-15);
        let p = Params::new(3, 0.5).unwrap();
        assert!((c_ns(&p) - 1.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn c_ns_positive_and_continuous() {
        for n in 1..=7 {
            let mut prev: Option<f64> = None;
            for k in 0..=180 {
                let s = 0.05 + 0.005 * k as f64;
                let v = c_ns(&Params::new(n, s).unwrap());
                assert!(v.is_finite() && v > 0.0);
                if let Some(p) = prev {
                    assert!((v - p).abs() < 0.1 * p.max(v), "jump at n={n} s={s}");
                }
                prev = Some(v);
            }
        }
    }

    #[test]
    fn bar_cs_values_and_limit() {
        assert!((bar_cs(0.5).unwrap() + 0.5).abs() < 1e-15);
        // the small-s limit is Γ(1)/Γ(1) = 1, approached linearly
        for s in [1e-3, 1e-4, 1e-6] {
            let v = bar_cs(s).unwrap();
            assert!(v < 0.0);
            assert!((v + 1.0).abs() <= 10.0 * s, "s = {s}: {v}");
        }
        assert!(bar_cs(0.0).is_err());
        assert!(bar_cs(1.0).is_err());
        assert!(bar_cs(-0.2).is_err());
    }

    #[test]
    fn expansion_constants_half() {
        let e = expansion_constants(0.5).unwrap();
        assert!((e.bar_cs + 0.5).abs() < 1e-14);
        assert!((e.bar_cstar - 0.5).abs() < 1e-14);
        assert!((e.bar_c1s - 1.5).abs() < 1e-14);
    }

    #[test]
    fn expansion_constants_against_series_gamma() {
        let s = 0.3;
        let e = expansion_constants(s).unwrap();
        let g = gamma_series;
        let want = (
            -g(1.0 + s) / g(1.0 - s),
            s * g(1.0 + s) / g(2.0 - s),
            g(2.0 + s) / g(2.0 - s),
        );
        assert!((e.bar_cs - want.0).abs() < 1e-12);
        assert!((e.bar_cstar - want.1).abs() < 1e-12);
        assert!((e.bar_c1s - want.2).abs() < 1e-12);
    }

    #[test]
    fn expansion_relation_holds_identically() {
        for k in 1..100 {
            let s = k as f64 / 100.0;
            let e = expansion_constants(s).unwrap();
            let rebuilt = -s * e.bar_cs * gamma(1.0 - s) / gamma(2.0 - s);
            assert!((e.bar_cstar - rebuilt).abs() < 1e-12 * e.bar_cstar.abs().max(1.0));
            assert!(e.bar_cs < 0.0 && e.bar_cstar > 0.0 && e.bar_c1s > 0.0);
            assert!(d_s(s).unwrap() > 0.0);
        }
    }

    #[test]
    fn d_s_values() {
        assert!((d_s(0.5).unwrap() - 1.0).abs() < 1e-15);
        let prod = d_s(0.25).unwrap() * d_s(0.75).unwrap();
        assert!((prod - 1.0).abs() < 1e-13, "{prod}");
        assert!(d_s(1.5).is_err());
    }

    #[test]
    fn d_s_via_gamma_s3_identity() {
        let r = verify_identity(IdentityId::GammaS3, 0.6, None, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn beta1_at_half() {
        let r = verify_identity(IdentityId::Beta1, 0.5, None, 1e-10).unwrap();
        assert!((r.lhs - PI / 2.0).abs() < 1e-10);
        assert!(r.pass);
    }

    #[test]
    fn trig_b_at_half() {
        let r = verify_identity(IdentityId::TrigB, 0.5, None, 1e-10).unwrap();
        assert!((r.rhs - PI / 2.0).abs() < 1e-14);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn gamma_s3_exact() {
        let r = verify_identity(IdentityId::GammaS3, 0.37, None, 1e-12).unwrap();
        assert!(r.residual < 1e-12);
        for k in 1..10 {
            let r = verify_identity(IdentityId::GammaS3, k as f64 / 10.0, None, 1e-12).unwrap();
            assert!(r.residual < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn sphere_identity_needs_dimension() {
        assert!(verify_identity(IdentityId::Sphere, 0.5, None, 1e-8).is_err());
        let r = verify_identity(IdentityId::Sphere, 0.5, Some(3), 1e-8).unwrap();
        // ∫_{S^2} |θ_3| = 2π
        assert!((r.lhs - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn sphere_integral_matches_dimension_reduction_ratio() {
        for n in 2..=6 {
            for s in [0.2, 0.5, 0.8] {
                let r = verify_identity(IdentityId::Sphere, s, Some(n), 1e-8).unwrap();
                let ratio = c_ns_raw(n, s) / (2.0 * c_ns_raw(1, s)) * r.lhs;
                assert!((ratio - 1.0).abs() < 1e-10, "n={n} s={s}: {ratio}");
            }
        }
    }

    #[test]
    fn identity_names_round_trip() {
        for id in IdentityId::ALL {
            assert_eq!(id.as_str().parse::<IdentityId>().unwrap(), id);
        }
        assert!("nope".parse::<IdentityId>().is_err());
    }

    #[test]
    fn sphere_area_small_cases() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-15);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
    }
}
