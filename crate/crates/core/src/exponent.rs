//! Homogeneity exponent of the positive s-harmonic function of a cone.
//!
//! A `λ`-homogeneous solution extends to an `a`-harmonic function
//! `ρ^λ Φ(σ)` on `R^{n+1}_+` (`a = 1 - 2s`), and `Φ` solves the weighted
//! spherical eigenproblem
//!
//! ```text
//! -div_S((sin φ)^a ∇_S Φ) = μ (sin φ)^a Φ,    μ = λ(λ + n - 2s),
//! ```
//!
//! with `Φ = 0` on the trace of the cone's complement. For axially symmetric
//! cones `Φ = Φ(θ, φ)` where `x_n = ρ cos φ cos θ`, `|x'| = ρ cos φ sin θ`,
//! `y = ρ sin φ`. The quadratic forms carry the Jacobian
//! `A(φ) B(θ) = cos^{n-1}φ sin^aφ · sin^{n-2}θ`:
//!
//! ```text
//! K(Φ) = ∫∫ A B (Φ_φ² + Φ_θ² / cos²φ),    M(Φ) = ∫∫ A B Φ².
//! ```
//!
//! Discretization: bilinear elements on a tensor grid graded toward the
//! corner `(θ_c, 0)` of the Dirichlet set. Element matrices are tensor
//! products of exact one-dimensional weighted moments. The row `φ = π/2` is a
//! single point (the pole) and is one unknown.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::cone::{CapCone, Cone};
use crate::error::{check_order, Error, Result};
use crate::linalg::{dot, BandMatrix};
use crate::quad::{tanh_sinh, QuadOptions};

/// Domains for the angular problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngularDomain {
    /// `{|x'| > β|x_n|}`; symmetric in `x_n`, so `θ ∈ [0, π/2]` with a natural
    /// condition on the equator.
    Cone(Cone),
    /// Cone over the cap `θ < θ₀`; `θ ∈ [0, π]`.
    CapCone(CapCone),
}

impl AngularDomain {
    fn n(&self) -> usize {
        match self {
            AngularDomain::Cone(c) => c.n,
            AngularDomain::CapCone(c) => c.n,
        }
    }

    fn theta_range(&self) -> f64 {
        match self {
            AngularDomain::Cone(_) => FRAC_PI_2,
            AngularDomain::CapCone(_) => PI,
        }
    }

    /// Edge of the Dirichlet set on `φ = 0`.
    fn corner(&self) -> f64 {
        match self {
            AngularDomain::Cone(c) => c.complement_half_angle(),
            AngularDomain::CapCone(c) => c.theta0,
        }
    }

    fn is_dirichlet(&self, theta: f64) -> bool {
        match self {
            AngularDomain::Cone(c) => theta <= c.complement_half_angle(),
            AngularDomain::CapCone(c) => theta >= c.theta0,
        }
    }
}

/// Tensor grid on `[0, θ_max] × [0, π/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMesh {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Per node of the `φ = 0` row: Dirichlet or natural.
    pub dirichlet: Vec<bool>,
    /// Nominal size `1/cells` in index space.
    pub h: f64,
}

impl AngularMesh {
    /// `cells` cells in each direction; power grading `(k/K)^grading` toward
    /// the corner (from both sides in `θ`) and toward `φ = 0`.
    pub fn build(domain: &AngularDomain, cells: usize, grading: f64) -> Result<Self> {
        if cells < 4 || cells % 2 != 0 {
            return Err(Error::InvalidInput("angular mesh needs an even number (≥ 4) of cells".into()));
        }
        if !(grading >= 1.0) {
            return Err(Error::InvalidInput("mesh grading exponent must be at least 1".into()));
        }
        let tc = domain.corner();
        let tmax = domain.theta_range();
        if !(tc > 0.0 && tc < tmax) {
            return Err(Error::InvalidInput("Dirichlet edge must lie strictly inside the θ range".into()));
        }
        let half = cells / 2;
        let mut theta = Vec::with_capacity(cells + 1);
        for k in 0..half {
            let r = ((half - k) as f64 / half as f64).powf(grading);
            theta.push(tc - tc * r);
        }
        theta[0] = 0.0;
        for k in 0..=half {
            let r = (k as f64 / half as f64).powf(grading);
            theta.push(tc + (tmax - tc) * r);
        }
        *theta.last_mut().unwrap() = tmax;
        let phi: Vec<f64> = (0..=cells)
            .map(|k| FRAC_PI_2 * (k as f64 / cells as f64).powf(grading))
            .collect();
        let dirichlet = theta.iter().map(|&t| domain.is_dirichlet(t)).collect();
        Ok(Self {
            theta,
            phi,
            dirichlet,
            h: 1.0 / cells as f64,
        })
    }
}

/// `(∫w(1-t)², ∫w t(1-t), ∫w t², ∫w)` over an interval with `t` the
/// normalized coordinate; integrand receives `(x, x - lo, hi - x)`.
fn moments<W: Fn(f64, f64, f64) -> f64>(w: W, lo: f64, hi: f64) -> Result<[f64; 4]> {
    let h = hi - lo;
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        min_level: 3,
        max_level: 10,
    };
    let mut out = [0.0; 4];
    let shapes: [&dyn Fn(f64, f64) -> f64; 4] = [
        &|_, b| (b / h) * (b / h),
        &|a, b| (a / h) * (b / h),
        &|a, _| (a / h) * (a / h),
        &|_, _| 1.0,
    ];
    for (k, shape) in shapes.iter().enumerate() {
        let r = tanh_sinh(|x, a, b| w(x, a, b) * shape(a, b), lo, hi, &opts);
        if !r.converged && r.error > 1e-9 * r.value.abs() {
            return Err(Error::NotConverged {
                what: "weighted element moment".into(),
                estimate: r.error,
                target: 1e-9 * r.value.abs(),
            });
        }
        out[k] = r.value;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSolution {
    pub mu: f64,
    /// `‖Kx - μMx‖ / ‖Kx‖`.
    pub residual: f64,
    pub iterations: usize,
    pub mesh_h: f64,
    /// Nodal values on the free nodes, normalized to max 1.
    pub eigenvector: Vec<f64>,
}

/// Smallest eigenvalue of the discretized weighted operator.
pub fn principal_eigenvalue(n: usize, s: f64, domain: &AngularDomain, mesh: &AngularMesh) -> Result<EigenSolution> {
    check_order(s)?;
    if n != domain.n() || n < 2 {
        return Err(Error::InvalidInput("dimension mismatch between n and the domain".into()));
    }
    let a = 1.0 - 2.0 * s;
    let nf = n as f64;
    let nt = mesh.theta.len() - 1;
    let np = mesh.phi.len() - 1;

    // node numbering: rows j < np of nt+1 nodes, then the pole; Dirichlet
    // nodes (row 0) are dropped
    let mut index = vec![usize::MAX; np * (nt + 1)];
    let mut next = 0;
    for j in 0..np {
        for i in 0..=nt {
            if j == 0 && mesh.dirichlet[i] {
                continue;
            }
            index[j * (nt + 1) + i] = next;
            next += 1;
        }
    }
    let pole = next;
    let dim = pole + 1;
    let node = |i: usize, j: usize| -> usize {
        if j == np {
            pole
        } else {
            index[j * (nt + 1) + i]
        }
    };

    // θ moments of B = sin^{n-2}θ
    let mut tb = Vec::with_capacity(nt);
    for i in 0..nt {
        let (lo, hi) = (mesh.theta[i], mesh.theta[i + 1]);
        let m = if n == 2 {
            let h = hi - lo;
            [h / 3.0, h / 6.0, h / 3.0, h]
        } else {
            moments(
                |x, dl, dh| {
                    let sx = if lo == 0.0 {
                        dl.sin()
                    } else if hi == PI {
                        dh.sin()
                    } else {
                        x.sin()
                    };
                    sx.powi(n as i32 - 2)
                },
                lo,
                hi,
            )?
        };
        tb.push(m);
    }
    // φ moments of A = cos^{n-1}φ sin^aφ and of A/cos²φ
    let mut pa = Vec::with_capacity(np);
    let mut pc = Vec::with_capacity(np);
    for j in 0..np {
        let (lo, hi) = (mesh.phi[j], mesh.phi[j + 1]);
        let sc = |x: f64, dl: f64, dh: f64| {
            let sn = if lo == 0.0 { dl.sin() } else { x.sin() };
            let cs = if hi == FRAC_PI_2 { dh.sin() } else { x.cos() };
            (sn, cs)
        };
        pa.push(moments(
            |x, dl, dh| {
                let (sn, cs) = sc(x, dl, dh);
                cs.powf(nf - 1.0) * sn.powf(a)
            },
            lo,
            hi,
        )?);
        if j + 1 == np {
            // only the (1-t)² moment is finite for n = 2 and the others
            // multiply zero θ-gradients of the collapsed pole row
            let h = hi - lo;
            let r = tanh_sinh(
                |x, dl, dh| {
                    let (sn, cs) = sc(x, dl, dh);
                    cs.powf(nf - 3.0) * sn.powf(a) * (dh / h) * (dh / h)
                },
                lo,
                hi,
                &QuadOptions {
                    abs_tol: 0.0,
                    rel_tol: 1e-12,
                    min_level: 3,
                    max_level: 10,
                },
            );
            pc.push([r.value, 0.0, 0.0, 0.0]);
        } else {
            pc.push(moments(
                |x, dl, dh| {
                    let (sn, cs) = sc(x, dl, dh);
                    cs.powf(nf - 3.0) * sn.powf(a)
                },
                lo,
                hi,
            )?);
        }
    }

    let bw = nt + 2;
    let mut k = BandMatrix::zeros(dim, bw);
    let mut m = BandMatrix::zeros(dim, bw);
    // local 2×2 factors: mass [[m00, m01], [m01, m11]], stiffness ∫w/h² [[1,-1],[-1,1]]
    let mass2 = |mm: &[f64; 4], p: usize, q: usize| match (p, q) {
        (0, 0) => mm[0],
        (1, 1) => mm[2],
        _ => mm[1],
    };
    let stiff2 = |mm: &[f64; 4], h: f64, p: usize, q: usize| {
        let v = mm[3] / (h * h);
        if p == q {
            v
        } else {
            -v
        }
    };
    for j in 0..np {
        let hp = mesh.phi[j + 1] - mesh.phi[j];
        for i in 0..nt {
            let ht = mesh.theta[i + 1] - mesh.theta[i];
            let local = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)];
            for &(a1, b1) in &local {
                // each global pair (r > c) once; both local orders when two
                // local nodes share the pole
                let r = node(i + a1, j + b1);
                if r == usize::MAX {
                    continue;
                }
                for &(a2, b2) in &local {
                    let c = node(i + a2, j + b2);
                    if c == usize::MAX || c > r {
                        continue;
                    }
                    let kk = mass2(&tb[i], a1, a2) * stiff2(&pa[j], hp, b1, b2)
                        + stiff2(&tb[i], ht, a1, a2) * mass2(&pc[j], b1, b2);
                    let mm = mass2(&tb[i], a1, a2) * mass2(&pa[j], b1, b2);
                    k.add(r, c, kk);
                    m.add(r, c, mm);
                }
            }
        }
    }
    let chol = k.clone().cholesky().ok_or_else(|| Error::NotConverged {
        what: "stiffness factorization (matrix not positive definite)".into(),
        estimate: f64::NAN,
        target: 0.0,
    })?;
    let mut x = vec![1.0; dim];
    let mut mu = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut history = Vec::new();
    // stop at the roundoff floor: no progress over the last ten sweeps
    while iterations < 5000 && residual > 1e-12 {
        if iterations >= 20 && residual > 0.9 * history[iterations - 10] {
            break;
        }
        let y = chol.solve(&m.mul(&x));
        let ky = k.mul(&y);
        let my = m.mul(&y);
        let norm = dot(&y, &my).sqrt();
        mu = dot(&y, &ky) / (norm * norm);
        let res: f64 = ky.iter().zip(&my).map(|(p, q)| (p - mu * q).powi(2)).sum::<f64>().sqrt();
        residual = res / dot(&ky, &ky).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        history.push(residual);
        iterations += 1;
    }
    // the Rayleigh quotient error is quadratic in the residual
    if residual > 1e-6 {
        return Err(Error::NotConverged {
            what: "inverse iteration".into(),
            estimate: residual,
            target: 1e-6,
        });
    }
    let max = x.iter().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { *v } else { acc });
    let x: Vec<f64> = x.iter().map(|v| v / max).collect();
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(Error::SignChangingEigenvector(min));
    }
    Ok(EigenSolution {
        mu,
        residual,
        iterations,
        mesh_h: mesh.h,
        eigenvector: x,
    })
}

/// Mesh controls shared by all exponent computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshControls {
    /// Cells per direction on the coarsest of three nested meshes.
    pub base_cells: usize,
    pub grading: f64,
}

impl Default for MeshControls {
    fn default() -> Self {
        Self {
            base_cells: 16,
            grading: 3.0,
        }
    }
}

impl MeshControls {
    pub fn signature(&self) -> String {
        format!("q1-tensor/cells={}x2^k/grading={}", self.base_cells, self.grading)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub mu: f64,
    pub error_estimate: f64,
    /// Observed convergence order in `h`.
    pub order: f64,
    /// Raw eigenvalues on meshes `N, 2N, 4N`.
    pub levels: [f64; 3],
    pub mesh_h: f64,
}

/// Richardson extrapolation over three nested meshes.
pub fn principal_eigenvalue_extrapolated(
    n: usize,
    s: f64,
    domain: &AngularDomain,
    controls: &MeshControls,
) -> Result<Extrapolated> {
    let mut levels = [0.0; 3];
    for (k, level) in levels.iter_mut().enumerate() {
        let mesh = AngularMesh::build(domain, controls.base_cells << k, controls.grading)?;
        *level = principal_eigenvalue(n, s, domain, &mesh)?.mu;
    }
    let (d1, d2) = (levels[0] - levels[1], levels[1] - levels[2]);
    let ratio = d1 / d2;
    let (mu, order, error_estimate) = if d2 != 0.0 && ratio > 1.0 {
        let order = ratio.log2();
        let mu = levels[2] - d2 / (ratio - 1.0);
        // spread between fitted-order and second-order extrapolation
        let second_order = levels[2] - d2 / 3.0;
        (mu, order, (mu - second_order).abs().max(1e-12 * mu.abs()))
    } else {
        // no asymptotic regime: report the finest value with the last change
        (levels[2], 0.0, d2.abs().max(d1.abs()))
    };
    Ok(Extrapolated {
        mu,
        error_estimate,
        order,
        levels,
        mesh_h: 1.0 / (controls.base_cells << 2) as f64,
    })
}

/// `λ ≥ 0` solving `λ(λ + n - 2s) = μ`.
pub fn lambda_from_mu(n: usize, s: f64, mu: f64) -> f64 {
    let b = n as f64 - 2.0 * s;
    // stable form of (-b + √(b² + 4μ))/2
    2.0 * mu / (b + (b * b + 4.0 * mu).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub beta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub mesh_h: f64,
    /// Richardson error estimate propagated to `λ`.
    pub error_estimate: f64,
    pub mu_error: f64,
    pub order: f64,
}

/// Homogeneity of the positive s-harmonic function of `𝒞(β)`.
pub fn lambda_of_beta(n: usize, s: f64, beta: f64, controls: &MeshControls) -> Result<ExponentResult> {
    check_order(s)?;
    let cone = Cone::new(n, beta)?;
    let ex = principal_eigenvalue_extrapolated(n, s, &AngularDomain::Cone(cone), controls)?;
    let lambda = lambda_from_mu(n, s, ex.mu);
    let dl = ex.error_estimate / (2.0 * lambda + n as f64 - 2.0 * s);
    if lambda + dl <= 0.0 || lambda - dl >= 2.0 * s {
        return Err(Error::BoundViolation(format!(
            "lambda = {lambda} ± {dl} outside (0, 2s) at beta = {beta}"
        )));
    }
    Ok(ExponentResult {
        beta,
        mu: ex.mu,
        lambda,
        mesh_h: ex.mesh_h,
        error_estimate: dl,
        mu_error: ex.error_estimate,
        order: ex.order,
    })
}

/// Result of the aperture search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApertureResult {
    pub n: usize,
    pub s: f64,
    pub beta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub error_estimate: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    /// `+1` if λ increases with β along the sweep, `-1` otherwise.
    pub direction: i8,
    pub mesh_signature: String,
}

const SWEEP_RANGE: (f64, f64) = (1e-3, 1e3);

/// Critical aperture `β_{n,s}` with `λ(β) = s`: geometric bracket sweep from
/// `β = 1` by factors of 4, bisection in `log β`, secant once the bracket is
/// narrow.
pub fn find_aperture(n: usize, s: f64, tol: f64, controls: &MeshControls) -> Result<ApertureResult> {
    check_order(s)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut evaluations = 0;
    let mut eval = |beta: f64| -> Result<ExponentResult> {
        evaluations += 1;
        lambda_of_beta(n, s, beta, controls)
    };
    let r1 = eval(1.0)?;
    let f1 = r1.lambda - s;
    if f1.abs() < tol {
        let direction = {
            let r2 = eval(1.05)?;
            if r2.lambda > r1.lambda {
                1
            } else {
                -1
            }
        };
        return Ok(ApertureResult {
            n,
            s,
            beta: 1.0,
            lambda: r1.lambda,
            mu: r1.mu,
            error_estimate: r1.error_estimate,
            bracket: (1.0, 1.0),
            evaluations,
            direction,
            mesh_signature: controls.signature(),
        });
    }
    // sweep both ways until the sign changes
    let mut found = None;
    let mut direction = 0i8;
    for factor in [4.0, 0.25] {
        let (mut b_prev, mut f_prev) = (1.0f64, f1);
        loop {
            let b = b_prev * factor;
            if b < SWEEP_RANGE.0 * 0.999 || b > SWEEP_RANGE.1 * 1.001 {
                break;
            }
            let r = eval(b)?;
            let f = r.lambda - s;
            if direction == 0 {
                direction = if (f > f_prev) == (factor > 1.0) { 1 } else { -1 };
            }
            if f.signum() != f_prev.signum() {
                found = Some(((b_prev, f_prev), (b, f)));
                break;
            }
            // moving away from the root: the other direction
            if f.abs() > f_prev.abs() {
                break;
            }
            b_prev = b;
            f_prev = f;
        }
        if found.is_some() {
            break;
        }
    }
    let ((mut lo, mut flo), (mut hi, mut fhi)) = found.ok_or(Error::BracketNotFound {
        lo: SWEEP_RANGE.0,
        hi: SWEEP_RANGE.1,
    })?;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
        std::mem::swap(&mut flo, &mut fhi);
    }
    let bracket = (lo, hi);
    let mut best: Option<ExponentResult> = None;
    for _ in 0..60 {
        let (llo, lhi) = (lo.ln(), hi.ln());
        let narrow = (fhi - flo).abs() < 10.0 * tol;
        let mut t = if narrow {
            llo - flo * (lhi - llo) / (fhi - flo)
        } else {
            0.5 * (llo + lhi)
        };
        if !(t > llo && t < lhi) {
            t = 0.5 * (llo + lhi);
        }
        let b = t.exp();
        let r = eval(b)?;
        let f = r.lambda - s;
        let done = f.abs() < tol;
        if best.as_ref().is_none_or(|bst| (bst.lambda - s).abs() > f.abs()) {
            best = Some(r);
        }
        if done {
            break;
        }
        if f.signum() == flo.signum() {
            lo = b;
            flo = f;
        } else {
            hi = b;
            fhi = f;
        }
    }
    let best = best.expect("at least one refinement step");
    if (best.lambda - s).abs() >= tol {
        return Err(Error::NotConverged {
            what: "aperture root find".into(),
            estimate: (best.lambda - s).abs(),
            target: tol,
        });
    }
    Ok(ApertureResult {
        n,
        s,
        beta: best.beta,
        lambda: best.lambda,
        mu: best.mu,
        error_estimate: best.error_estimate,
        bracket,
        evaluations,
        direction,
        mesh_signature: controls.signature(),
    })
}
