//! Geometry of axially symmetric cones.
//!
//! All queries reduce to the half-plane `(ζ, τ) = (|x'|, x_n)` where the cone
//! `𝒞(β) = {|x'| > β|x_n|}` is bounded by the rays through `(β, ±1)`.

use serde::{Deserialize, Serialize};

use crate::constants::sphere_area;
use crate::error::{Error, Result};

/// A region with a signed distance: positive inside, negative outside,
/// absolute value the Euclidean distance to the boundary.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    fn signed_distance(&self, x: &[f64]) -> f64;
    fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(|x'|, x_n)`.
pub(crate) fn reduced(x: &[f64]) -> (f64, f64) {
    let (head, last) = x.split_at(x.len() - 1);
    (norm(head), last[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// The cone `{|x'| > β|x_n|}` in `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub n: usize,
    pub beta: f64,
}

/// Point of `∂𝒞` given as `ρ (ω β/√(1+β²), ±1/√(1+β²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBoundaryChart {
    pub side: Side,
    pub rho: f64,
    /// Unit vector in `R^{n-1}`.
    pub omega: Vec<f64>,
}

impl Cone {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("cone dimension must be at least 2, got {n}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain {
                name: "beta",
                value: beta,
                range: "(0, inf)",
            });
        }
        Ok(Self { n, beta })
    }

    fn hyp(&self) -> f64 {
        (1.0 + self.beta * self.beta).sqrt()
    }

    /// `β/√(1+β²)`: the radius of `∂𝒞 ∩ S^{n-1}` rings.
    pub fn ring_radius(&self) -> f64 {
        self.beta / self.hyp()
    }

    /// `1/√(1+β²)`: height of the rings.
    pub fn ring_height(&self) -> f64 {
        1.0 / self.hyp()
    }

    /// Half-aperture of each complementary solid cone, `arctan β`.
    pub fn complement_half_angle(&self) -> f64 {
        self.beta.atan()
    }

    /// Signed distance in the reduced half-plane, point-to-ray with vertex
    /// fallback.
    pub fn signed_distance_reduced(&self, zeta: f64, tau: f64) -> f64 {
        let h = self.hyp();
        let (ex, ey) = (self.beta / h, 1.0 / h);
        let (px, py) = (zeta, tau.abs());
        let along = px * ex + py * ey;
        let dist = if along >= 0.0 {
            (px * ey - py * ex).abs()
        } else {
            px.hypot(py)
        };
        let gap = zeta - self.beta * tau.abs();
        if gap > 0.0 {
            dist
        } else if gap < 0.0 {
            -dist
        } else {
            0.0
        }
    }

    /// Nearest point of `∂𝒞`; undefined on the axis `x' = 0`.
    pub fn nearest_boundary_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let (zeta, tau) = reduced(x);
        if zeta == 0.0 {
            return Err(Error::InvalidInput("nearest boundary point is not unique on the axis".into()));
        }
        let h = self.hyp();
        let along = ((zeta * self.beta + tau.abs()) / h).max(0.0);
        let scale = along * self.beta / h / zeta;
        let mut out: Vec<f64> = x[..self.n - 1].iter().map(|v| v * scale).collect();
        out.push(tau.signum() * along / h);
        Ok(out)
    }

    /// Unit inward normal at a boundary point; 0-homogeneous.
    pub fn boundary_normal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let (zeta, tau) = reduced(x);
        let r = zeta.hypot(tau);
        if r < 1e-300 {
            return Err(Error::InvalidInput("the normal is undefined at the vertex".into()));
        }
        if (zeta - self.beta * tau.abs()).abs() > 1e-9 * r * (1.0 + self.beta) {
            return Err(Error::InvalidInput("point is not on the cone surface".into()));
        }
        let h = self.hyp();
        let mut out: Vec<f64> = x[..self.n - 1].iter().map(|v| v / zeta / h).collect();
        out.push(-self.beta * tau.signum() / h);
        Ok(out)
    }

    /// `(n-2)`-measure of `∂𝒞 ∩ S^{n-1}` (counting measure for `n = 2`).
    pub fn cap_measure(&self) -> f64 {
        2.0 * sphere_area(self.n as u32 - 2) * self.ring_radius().powi(self.n as i32 - 2)
    }

    pub fn chart_point(&self, chart: &ConeBoundaryChart) -> Vec<f64> {
        let r = chart.rho * self.ring_radius();
        let mut out: Vec<f64> = chart.omega.iter().map(|w| w * r).collect();
        out.push(chart.side.sign() * chart.rho * self.ring_height());
        out
    }

    /// Surface density with respect to `dρ dω`.
    pub fn chart_area_density(&self, rho: f64) -> f64 {
        (rho * self.ring_radius()).powi(self.n as i32 - 2)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "point has dimension {} but the cone lives in R^{}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

impl Region for Cone {
    fn dim(&self) -> usize {
        self.n
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        let (zeta, tau) = reduced(x);
        self.signed_distance_reduced(zeta, tau)
    }
}

/// Cone over the spherical cap `{x/|x| · e_n > cos θ₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapCone {
    pub n: usize,
    pub theta0: f64,
}

impl CapCone {
    pub fn new(n: usize, theta0: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("cap cone dimension must be at least 2, got {n}")));
        }
        if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
            return Err(Error::Domain {
                name: "theta0",
                value: theta0,
                range: "(0, pi)",
            });
        }
        Ok(Self { n, theta0 })
    }

    pub fn half_space(n: usize) -> Result<Self> {
        Self::new(n, std::f64::consts::FRAC_PI_2)
    }
}

impl Region for CapCone {
    fn dim(&self) -> usize {
        self.n
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        let (zeta, tau) = reduced(x);
        let r = zeta.hypot(tau);
        let theta = zeta.atan2(tau);
        let gap = self.theta0 - theta;
        if gap.abs() >= std::f64::consts::FRAC_PI_2 {
            r * gap.signum()
        } else {
            r * gap.sin()
        }
    }
}

/// `{x_n > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub n: usize,
}

impl Region for HalfSpace {
    fn dim(&self) -> usize {
        self.n
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        x[self.n - 1]
    }
}

/// Open ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Region for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn signed_distance(&self, x: &[f64]) -> f64 {
        let d: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        self.radius - d
    }
}
