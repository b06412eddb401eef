//! The radial stability test `H₁ ≤ m(0)`, the two-dimensional Hardy scan and
//! the dimension bound for the stability argument.

use serde::{Deserialize, Serialize};

use crate::cone::Cone;
use crate::error::{check_order, Error, Result};
use crate::exponent::{find_aperture, ApertureResult, MeshControls};
use crate::kernel::{h1, mellin_m0, KernelConfig, KernelTable, TableSpec};
use crate::quad::{integrate, integrate_to_infinity, QuadOptions};
use crate::wos::McEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InstabilityCertified,
    ConsistentWithStability,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::InstabilityCertified => "instability_certified",
            Verdict::ConsistentWithStability => "consistent_with_stability",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Three-valued comparison of `H₁` and `m(0)` with 3σ gates.
pub fn verdict(h1: f64, h1_err: f64, m0: f64, m0_err: f64, degraded: bool) -> Verdict {
    let sigma = h1_err.hypot(m0_err);
    let diff = h1 - m0;
    if degraded || !diff.is_finite() || !sigma.is_finite() {
        Verdict::Inconclusive
    } else if diff > 3.0 * sigma {
        Verdict::InstabilityCertified
    } else if -diff > 3.0 * sigma {
        Verdict::ConsistentWithStability
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub kernel: KernelConfig,
    pub table: TableSpec,
    pub mesh: MeshControls,
    pub aperture_tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::default(),
            table: TableSpec::default(),
            mesh: MeshControls::default(),
            aperture_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    pub s: f64,
    pub beta_star: f64,
    pub lambda: f64,
    pub aperture_error: f64,
    pub mesh_signature: String,
    pub h1: McEstimate,
    pub h1_gamma: Option<f64>,
    pub m0: McEstimate,
    /// `m0 - h1`.
    pub margin: f64,
    pub combined_sigma: f64,
    pub verdict: Verdict,
    pub degraded: bool,
    pub h1_seed: u64,
    pub table_seeds: Vec<u64>,
    pub note: String,
}

const RADIAL_NOTE: &str = "radial perturbations at zero frequency only; \
consistent_with_stability is not a proof of stability";

/// Runs the aperture search and then [`check_stability_at`].
pub fn check_stability(n: usize, s: f64, cfg: &StabilityConfig) -> Result<StabilityReport> {
    check_order(s)?;
    if n < 2 {
        return Err(Error::InvalidInput("n must be at least 2".into()));
    }
    let aperture = find_aperture(n, s, cfg.aperture_tol, &cfg.mesh)?;
    check_stability_at(&aperture, cfg)
}

/// `H₁` against `m(0)` on the cone of a known aperture. For `n = 2` the
/// multiplier vanishes identically and no table is built.
pub fn check_stability_at(aperture: &ApertureResult, cfg: &StabilityConfig) -> Result<StabilityReport> {
    let (n, s) = (aperture.n, aperture.s);
    let cone = Cone::new(n, aperture.beta)?;
    let h = h1(&cone, s, &cfg.kernel)?;
    let (m0, table_degraded, table_seeds) = if n == 2 {
        (McEstimate::exact(0.0), false, Vec::new())
    } else {
        let kc = cfg.kernel.clone().with_seed(cfg.kernel.wos.seed.wrapping_add(1000));
        let table = KernelTable::build(&cone, s, &cfg.table, &kc)?;
        (mellin_m0(&table, n)?, table.degraded, table.seeds.clone())
    };
    let degraded = h.degraded || table_degraded;
    let v = verdict(h.estimate.value, h.estimate.std_err, m0.value, m0.std_err, degraded);
    let mut note = RADIAL_NOTE.to_string();
    if n >= 6 {
        note.push_str("; n >= 6 is outside the dimension range of the instability argument, report is descriptive");
    }
    Ok(StabilityReport {
        n,
        s,
        beta_star: aperture.beta,
        lambda: aperture.lambda,
        aperture_error: aperture.error_estimate,
        mesh_signature: aperture.mesh_signature.clone(),
        margin: m0.value - h.estimate.value,
        combined_sigma: m0.std_err.hypot(h.estimate.std_err),
        h1_gamma: h.gamma,
        h1: h.estimate,
        m0,
        verdict: v,
        degraded,
        h1_seed: cfg.kernel.wos.seed,
        table_seeds,
        note,
    })
}

/// Admissible `α` with `n - 2α - 2 < 0` and `n > 2 + α²`, or `None`.
pub fn alpha_feasibility(n: usize) -> Result<Option<(f64, f64)>> {
    if n < 3 {
        return Err(Error::InvalidInput("alpha feasibility needs n >= 3".into()));
    }
    let lo = 0.5 * (n as f64 - 2.0);
    let hi = (n as f64 - 2.0).sqrt();
    Ok((lo < hi).then_some((lo, hi)))
}

/// Largest dimension with a nonempty feasibility interval.
pub fn max_unstable_dimension() -> usize {
    // the interval is empty once (n-2)/4 ≥ 1, so the scan is finite
    (3..=64).filter(|n| matches!(alpha_feasibility(*n), Ok(Some(_)))).max().unwrap_or(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyScanResult {
    pub s: f64,
    pub r_grid: Vec<f64>,
    pub lhs_values: Vec<f64>,
    pub rhs_values: Vec<f64>,
    pub fitted_log_slope: f64,
    /// `|∂𝒞 ∩ S¹|`, the number of boundary rays.
    pub cap_measure: f64,
}

/// Smoothstep cut-off rising from 0 at `r = 1/2` to 1 at `r = 1`.
pub fn hardy_phi(r: f64) -> f64 {
    let u = ((r - 0.5) / 0.5).clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Plateau of height 1 on `(0, R)` with a linear ramp to zero on `(R, 2R)`.
pub fn hardy_zeta(r_scale: f64, t: f64) -> f64 {
    if t < r_scale {
        1.0
    } else if t < 2.0 * r_scale {
        (2.0 * r_scale - t) / r_scale
    } else {
        0.0
    }
}

const HARDY_RAYS: f64 = 4.0;

/// `∫_{∂𝒞∖B_{1/2}} f_R²/|x| dσ` with `f_R = φ ζ_R` on the four boundary
/// rays of a planar cone.
pub fn hardy_lhs(r_scale: f64) -> Result<f64> {
    if !(r_scale >= 1.0) {
        return Err(Error::InvalidInput("R must be at least 1".into()));
    }
    let opts = QuadOptions::with_rel_tol(1e-12);
    let inner = integrate(|r| hardy_phi(r).powi(2) / r, 0.5, 1.0, &opts).value;
    // ∫_R^{2R} ((2R - t)/R)² dt/t = 4 ln 2 - 5/2
    let ramp = 4.0 * std::f64::consts::LN_2 - 2.5;
    Ok(HARDY_RAYS * (inner + r_scale.ln() + ramp))
}

/// `∫∫_{(0,∞)²} (ζ_R(t) - ζ_R(τ))² / (t - τ)² dt dτ`, split at `R` and `2R`.
pub fn hardy_rhs(r_scale: f64) -> Result<f64> {
    if !(r_scale > 0.0) {
        return Err(Error::InvalidInput("R must be positive".into()));
    }
    let opts = QuadOptions::with_rel_tol(1e-10);
    let breaks = [0.0, r_scale, 2.0 * r_scale];
    let line = |t: f64| {
        let zt = hardy_zeta(r_scale, t);
        let f = |tau: f64| {
            let d = t - tau;
            if d == 0.0 {
                // the difference quotient on the ramp
                if t > r_scale && t < 2.0 * r_scale {
                    1.0 / (r_scale * r_scale)
                } else {
                    0.0
                }
            } else {
                (zt - hardy_zeta(r_scale, tau)).powi(2) / (d * d)
            }
        };
        integrate(f, breaks[0], breaks[1], &opts).value
            + integrate(f, breaks[1], breaks[2], &opts).value
            + integrate_to_infinity(|tau, _| f(tau), breaks[2], &opts).value
    };
    Ok(integrate(line, breaks[0], breaks[1], &opts).value
        + integrate(line, breaks[1], breaks[2], &opts).value
        + integrate_to_infinity(|t, _| line(t), breaks[2], &opts).value)
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Logarithmic growth of the Hardy term against the bounded seminorm of the
/// plateau cut-off, on the planar cone.
pub fn hardy_2d_demo(s: f64, r_list: &[f64]) -> Result<HardyScanResult> {
    check_order(s)?;
    if r_list.len() < 2 {
        return Err(Error::InvalidInput("need at least two values of R".into()));
    }
    let lhs = r_list.iter().map(|r| hardy_lhs(*r)).collect::<Result<Vec<_>>>()?;
    let rhs = r_list.iter().map(|r| hardy_rhs(*r)).collect::<Result<Vec<_>>>()?;
    let logs: Vec<f64> = r_list.iter().map(|r| r.ln()).collect();
    Ok(HardyScanResult {
        s,
        r_grid: r_list.to_vec(),
        fitted_log_slope: slope(&logs, &lhs),
        lhs_values: lhs,
        rhs_values: rhs,
        cap_measure: HARDY_RAYS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn feasibility_intervals() {
        let (lo, hi) = alpha_feasibility(3).unwrap().unwrap();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        let (lo, hi) = alpha_feasibility(5).unwrap().unwrap();
        assert!((lo - 1.5).abs() < 1e-15 && (hi - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(alpha_feasibility(6).unwrap(), None);
        assert!(alpha_feasibility(2).is_err());
        assert_eq!(max_unstable_dimension(), 5);
        let len = |n| alpha_feasibility(n).unwrap().map(|(a, b)| b - a).unwrap();
        assert!(len(3) > len(4) && len(4) > len(5));
    }

    #[test]
    fn verdict_gates() {
        assert_eq!(verdict(1.0, 0.1, 0.0, 0.0, false), Verdict::InstabilityCertified);
        assert_eq!(verdict(1.0, 0.1, 0.0, 0.0, true), Verdict::Inconclusive);
        assert_eq!(verdict(0.0, 0.1, 1.0, 0.1, false), Verdict::ConsistentWithStability);
        assert_eq!(verdict(0.2, 0.1, 0.0, 0.0, false), Verdict::Inconclusive);
        assert_eq!(Verdict::InstabilityCertified.as_str(), "instability_certified");
    }

    proptest! {
        #[test]
        fn verdict_matches_its_definition(h in -10.0..10.0f64, m in -10.0..10.0f64, sh in 0.0..3.0f64, sm in 0.0..3.0f64, deg: bool) {
            let v = verdict(h, sh, m, sm, deg);
            let sigma = sh.hypot(sm);
            prop_assert_eq!(v == Verdict::InstabilityCertified, !deg && h - m > 3.0 * sigma);
            prop_assert_eq!(v == Verdict::ConsistentWithStability, !deg && m - h > 3.0 * sigma);
        }
    }

    #[test]
    fn hardy_lhs_grows_by_four_per_log_unit() {
        let a = hardy_lhs(100.0).unwrap();
        let b = hardy_lhs(1000.0).unwrap();
        assert!(((b - a) / (4.0 * 10f64.ln()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hardy_rhs_is_scale_invariant() {
        let one = hardy_rhs(1.0).unwrap();
        for r in [10.0, 1e3] {
            assert!((hardy_rhs(r).unwrap() / one - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn hardy_rhs_closed_form() {
        // ramp × ramp 1, plateau × far 2 ln 2, plateau × ramp 2(1 - ln 2), ramp × far 1
        assert!((hardy_rhs(1.0).unwrap() - 4.0).abs() < 1e-8);
    }
}
