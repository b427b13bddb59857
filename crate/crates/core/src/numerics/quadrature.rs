//! Gauss-Legendre rules and adaptive bisection on top of them.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait Integrand:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the `order`-point rule by Newton iteration on `P_order`.
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput(
                "quadrature order must be positive".into(),
            ));
        }
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // x is the i-th largest root; mirror to keep the rule symmetric
            nodes[order - 1 - i] = x;
            nodes[i] = -x;
            weights[order - 1 - i] = w;
            weights[i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// Default rule for the models: exact through degree 39.
    pub fn standard() -> Self {
        Self::gauss_legendre(20).expect("positive order")
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single application of the rule on `[a, b]`.
    pub fn apply<T: Integrand, F: Fn(f64) -> T + ?Sized>(&self, f: &F, a: f64, b: f64) -> T {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * *w;
        }
        acc * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomial `P_n(x)`.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_with_derivative(n, x).0
}

/// Stopping rule for [`quad_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Successive estimates must differ by less than this fraction of the
    /// integral's magnitude.
    pub rel_tol: f64,
    /// Absolute floor, used when the integral itself is near zero.
    pub abs_tol: f64,
    /// Maximum bisection depth before reporting non-convergence.
    pub max_depth: u32,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_depth: 40,
        }
    }
}

/// Adaptive integral of `f` over `[a, b]` with default tolerances.
pub fn quad<T, F>(f: F, a: f64, b: f64, rule: &QuadratureRule) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    quad_with(f, a, b, rule, &AdaptiveOptions::default())
}

/// Adaptive bisection: a panel is accepted once the rule on the panel and
/// the sum over its two halves agree to within the panel's share of the
/// tolerance.
pub fn quad_with<T, F>(
    f: F,
    a: f64,
    b: f64,
    rule: &QuadratureRule,
    opts: &AdaptiveOptions,
) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "integration limits [{a}, {b}] must be finite"
        )));
    }
    if a == b {
        return Ok(T::default());
    }
    // coarse composite estimate sets the scale of the absolute tolerance
    let panels = 4;
    let width = (b - a) / panels as f64;
    let pieces: Vec<T> = (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            rule.apply(&f, lo, hi)
        })
        .collect();
    let scale = pieces
        .iter()
        .fold(T::default(), |acc, v| acc + *v)
        .magnitude();
    let tol = (opts.rel_tol * scale).max(opts.abs_tol);

    let mut total = T::default();
    for (i, whole) in pieces.into_iter().enumerate() {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        total = total + refine(&f, lo, hi, whole, tol / panels as f64, 0, rule, opts)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<T, F>(
    f: &F,
    a: f64,
    b: f64,
    whole: T,
    tol: f64,
    depth: u32,
    rule: &QuadratureRule,
    opts: &AdaptiveOptions,
) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let mid = 0.5 * (a + b);
    let left = rule.apply(f, a, mid);
    let right = rule.apply(f, mid, b);
    let split = left + right;
    let diff = (split - whole).magnitude();
    if diff <= tol || mid <= a || mid >= b {
        return Ok(split);
    }
    if depth >= opts.max_depth {
        return Err(Error::NonConvergence { a, b, depth });
    }
    let l = refine(f, a, mid, left, 0.5 * tol, depth + 1, rule, opts)?;
    let r = refine(f, mid, b, right, 0.5 * tol, depth + 1, rule, opts)?;
    Ok(l + r)
}
