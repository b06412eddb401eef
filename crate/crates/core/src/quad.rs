//! One-dimensional quadrature.
//!
//! The workhorse is double-exponential (tanh-sinh) quadrature: the change of
//! variables `x = tanh(pi/2 sinh t)` clusters nodes doubly exponentially at both
//! endpoints, so algebraic endpoint singularities such as `(1-t)^(-s)` or
//! `(sin θ)^(1-2s)` integrate at full speed. Integrands receive the distances to
//! both endpoints computed without cancellation, which matters once nodes sit
//! within `1e-200` of an endpoint.
//!
//! Interior kinks are the caller's job: split the interval there.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            evals: 0,
            converged: true,
        }
    }

    /// Sum of independent pieces; errors add, convergence is conjunctive.
    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, factor: f64) -> QuadResult {
        QuadResult {
            value: self.value * factor,
            error: self.error * factor.abs(),
            ..self
        }
    }
}

impl std::iter::Sum for QuadResult {
    fn sum<I: Iterator<Item = QuadResult>>(iter: I) -> Self {
        iter.fold(QuadResult::zero(), QuadResult::combine)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Refinement levels are never stopped before this one.
    pub min_level: usize,
    pub max_level: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            min_level: 3,
            max_level: 9,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

const T_MAX: f64 = 6.0;
const MAX_LEVEL: usize = 11;

#[derive(Debug, Clone, Copy)]
struct Node {
    weight: f64,
    /// 1 + x on [-1, 1].
    dist_lo: f64,
    /// 1 - x on [-1, 1].
    dist_hi: f64,
}

fn node_at(t: f64) -> Node {
    let u = FRAC_PI_2 * t.abs().sinh();
    let e = (-2.0 * u).exp();
    let near = 2.0 * e / (1.0 + e);
    let far = 2.0 / (1.0 + e);
    let weight = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
    if t >= 0.0 {
        Node {
            weight,
            dist_lo: far,
            dist_hi: near,
        }
    } else {
        Node {
            weight,
            dist_lo: near,
            dist_hi: far,
        }
    }
}

/// Nodes first appearing at each level: integers at level 0, odd multiples of
/// `2^-level` afterwards.
fn level_nodes() -> &'static [Vec<Node>] {
    static TABLE: OnceLock<Vec<Vec<Node>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut levels = Vec::with_capacity(MAX_LEVEL + 1);
        let k_max = T_MAX as i64;
        levels.push((-k_max..=k_max).map(|k| node_at(k as f64)).collect());
        for level in 1..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let count = (T_MAX / h) as i64;
            let nodes = (-count..count)
                .filter(|j| j.rem_euclid(2) == 1)
                .map(|j| node_at(j as f64 * h))
                .collect();
            levels.push(nodes);
        }
        levels
    })
}

/// Adaptive tanh-sinh on `[a, b]`. The integrand is called as
/// `f(x, x - a, b - x)` with both distances accurate near the endpoints.
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if a == b {
        return QuadResult::zero();
    }
    if b < a {
        return tanh_sinh_ordered(|x, da, db| f(x, db, da), b, a, opts).scale(-1.0);
    }
    tanh_sinh_ordered(f, a, b, opts)
}

fn tanh_sinh_ordered<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let levels = level_nodes();
    let max_level = opts.max_level.min(MAX_LEVEL);
    let mut raw = 0.0;
    let mut evals = 0;
    let mut previous = f64::NAN;
    let mut finite = true;
    for (level, nodes) in levels.iter().enumerate().take(max_level + 1) {
        for node in nodes {
            let d_lo = half * node.dist_lo;
            let d_hi = half * node.dist_hi;
            if d_lo <= 0.0 || d_hi <= 0.0 {
                continue;
            }
            let x = if d_lo <= d_hi { a + d_lo } else { b - d_hi };
            let fx = f(x, d_lo, d_hi);
            evals += 1;
            if fx.is_finite() {
                raw += node.weight * fx;
            } else {
                finite = false;
            }
        }
        let h = 0.5f64.powi(level as i32);
        let estimate = half * h * raw;
        if level >= opts.min_level.max(1) {
            let error = (estimate - previous).abs();
            if error <= opts.abs_tol.max(opts.rel_tol * estimate.abs()) {
                return QuadResult {
                    value: estimate,
                    error,
                    evals,
                    converged: finite,
                };
            }
        }
        previous = estimate;
    }
    let h = 0.5f64.powi(max_level as i32);
    let value = half * h * raw;
    QuadResult {
        value,
        error: (value - previous).abs().max(f64::MIN_POSITIVE),
        evals,
        converged: false,
    }
}

/// Plain-integrand convenience wrapper around [`tanh_sinh`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64) -> f64,
{
    tanh_sinh(|x, _, _| f(x), a, b, opts)
}

/// `∫_a^∞ f`. The integrand is called as `f(x, x - a)`.
pub fn integrate_to_infinity<F>(mut f: F, a: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64, f64) -> f64,
{
    // x = a + τ/(1-τ), dx = dτ/(1-τ)^2
    tanh_sinh(
        |_, tau, one_minus| {
            let offset = tau / one_minus;
            let x = a + offset;
            if !x.is_finite() {
                return 0.0;
            }
            let fx = f(x, offset);
            if fx == 0.0 {
                0.0
            } else {
                fx / (one_minus * one_minus)
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// `∫_{-∞}^b f`. The integrand is called as `f(x, b - x)`.
pub fn integrate_from_neg_infinity<F>(mut f: F, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64, f64) -> f64,
{
    integrate_to_infinity(|y, d| f(-y, d), -b, opts)
}

/// Fixed-level tanh-sinh rule for nested integrals where the outer routine
/// drives refinement. Level `L` uses step `2^-L`.
#[derive(Debug, Clone)]
pub struct FixedTanhSinh {
    step: f64,
    nodes: Vec<Node>,
}

impl FixedTanhSinh {
    pub fn new(level: usize) -> Self {
        let level = level.min(MAX_LEVEL);
        let nodes = level_nodes()
            .iter()
            .take(level + 1)
            .flat_map(|l| l.iter().copied())
            .collect();
        Self {
            step: 0.5f64.powi(level as i32),
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f(x, x - a, b - x)` over `[a, b]`.
    pub fn apply<F>(&self, mut f: F, a: f64, b: f64) -> f64
    where
        F: FnMut(f64, f64, f64) -> f64,
    {
        if a == b {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for node in &self.nodes {
            let d_lo = half * node.dist_lo;
            let d_hi = half * node.dist_hi;
            if d_lo <= 0.0 || d_hi <= 0.0 {
                continue;
            }
            let x = if d_lo <= d_hi { a + d_lo } else { b - d_hi };
            let fx = f(x, d_lo, d_hi);
            if fx.is_finite() {
                sum += node.weight * fx;
            }
        }
        half * self.step * sum
    }

    /// `∫_a^∞ f(x, x - a) dx` via `x = a + τ/(1-τ)`.
    pub fn apply_to_infinity<F>(&self, mut f: F, a: f64) -> f64
    where
        F: FnMut(f64, f64) -> f64,
    {
        self.apply(
            |_, tau, one_minus| {
                let offset = tau / one_minus;
                let x = a + offset;
                if !x.is_finite() {
                    return 0.0;
                }
                let fx = f(x, offset);
                if fx == 0.0 {
                    0.0
                } else {
                    fx / (one_minus * one_minus)
                }
            },
            0.0,
            1.0,
        )
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    let nf = order as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { x } else { p1 };
            let p_prev = if order == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}
