//! Fixed-order quadrature on the real line.
//!
//! Two rules are used:
//! - composite Gauss-Legendre over `[-X, X]`, split at caller-supplied breaks,
//!   for anything involving the potential;
//! - Gauss-Hermite for integrands of the form `polynomial * exp(-a x^2)`,
//!   which covers every product of oscillator orbitals exactly.
//!
//! Node tables are cached per order. Every sum runs left to right over a
//! fixed node list, so results do not depend on caching or threading.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use faer::{Mat, Side};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::potential::PotentialParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    /// Gauss-Legendre points per panel.
    pub panel_order: usize,
    /// Panels per breakpoint-delimited interval.
    pub panels_per_interval: usize,
    /// Basis envelope cutoff that sets the truncation half-width.
    pub tail_tolerance: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            panel_order: 32,
            panels_per_interval: 8,
            tail_tolerance: 1e-14,
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panel_order < 2 {
            return Err(Error::invalid("panel_order", "need panel_order >= 2"));
        }
        if self.panels_per_interval < 1 {
            return Err(Error::invalid(
                "panels_per_interval",
                "need panels_per_interval >= 1",
            ));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(Error::invalid(
                "tail_tolerance",
                "need 0 < tail_tolerance < 1",
            ));
        }
        Ok(())
    }
}

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type Cache = RwLock<HashMap<usize, Arc<Rule>>>;

fn cached(cache: &'static OnceLock<Cache>, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let map = cache.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(rule) = map.read().unwrap().get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(build(n));
    map.write().unwrap().entry(n).or_insert(rule).clone()
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_legendre)
}

fn build_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Hermite rule with `n` points for the weight `exp(-t^2)`.
///
/// The stored weights have the Gaussian folded back in, i.e.
/// `int f(t) dt ~= sum_i weights[i] * f(nodes[i])`, which keeps them O(1)
/// at the outer nodes instead of underflowing.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_hermite)
}

/// Hermite functions `psi_{n-1}(t)`, `psi_n(t)` and `sum_{k<n} psi_k(t)^2`.
fn hermite_functions(n: usize, t: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur, sum_sq)
}

fn build_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    // Golub-Welsch for starting values
    let jacobi = Mat::<f64>::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut nodes = jacobi
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Jacobi matrix eigenvalues");
    let mut weights = vec![0.0; n];
    let two_n = (2.0 * n as f64).sqrt();
    for (t, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            let (pm1, p, _) = hermite_functions(n, *t);
            // psi_n' = sqrt(2n) psi_{n-1} - t psi_n
            let dp = two_n * pm1 - *t * p;
            if dp != 0.0 {
                *t -= p / dp;
            }
        }
        let (_, _, sum_sq) = hermite_functions(n, *t);
        *w = 1.0 / sum_sq;
    }
    // exact symmetry
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -t;
        nodes[j] = t;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Node count that makes the Gaussian-weight rule exact for the degree.
pub fn hermite_order(poly_degree: usize) -> usize {
    poly_degree / 2 + 1
}

/// `int f(x) dx` for `f = polynomial(deg <= poly_degree) * exp(-a x^2)`.
///
/// `f` is the full integrand, Gaussian included.
pub fn gaussian_weight_integrate(poly_degree: usize, a: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_hermite(hermite_order(poly_degree));
    let s = 1.0 / a.sqrt();
    let mut acc = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(s * t);
    }
    acc * s
}

/// Composite rule on `[-halfwidth, halfwidth]`, split at `breaks` (clipped
/// to the open interval) and subdivided into equal panels.
pub fn piecewise_rule(breaks: &[f64], halfwidth: f64, spec: &QuadSpec) -> Rule {
    let gl = gauss_legendre(spec.panel_order);
    let mut edges = vec![-halfwidth];
    let mut sorted: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > -halfwidth && b < halfwidth)
        .collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    edges.extend(sorted);
    edges.push(halfwidth);
    edges.dedup();

    let per = spec.panels_per_interval;
    let mut nodes = Vec::with_capacity((edges.len() - 1) * per * spec.panel_order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let h = (b - a) / per as f64;
        for k in 0..per {
            let lo = a + h * k as f64;
            let hi = if k + 1 == per { b } else { a + h * (k + 1) as f64 };
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(mid + half * t);
                weights.push(half * w);
            }
        }
    }
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre integral of `f` over `[-X, X]`.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    breaks: &[f64],
    halfwidth: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if !(halfwidth > 0.0) {
        return Err(Error::invalid("halfwidth", "need X > 0"));
    }
    let rule = piecewise_rule(breaks, halfwidth, spec);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x, value: v });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Half-width beyond which every orbital envelope is below the tolerance.
///
/// `X = max(d + R, x_t) + sqrt(2 ln(1/tol) / omega)`.
pub fn truncation_halfwidth(basis: &BasisSpec, params: &PotentialParams, quad: &QuadSpec) -> f64 {
    let margin = (2.0 * (1.0 / quad.tail_tolerance).ln() / basis.omega).sqrt();
    params.extent().max(basis.turning_point()) + margin
}
