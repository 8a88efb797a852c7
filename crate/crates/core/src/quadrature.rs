//! Adaptive Gauss–Legendre quadrature on finite intervals.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 10;
const MAX_DEPTH: u32 = 40;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Integral of `f` over `[a, b]` to relative tolerance `rel_tol`, by recursive bisection
/// comparing the 10-point rule on an interval with the sum over its halves.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let whole = fixed(&f, a, b);
    let scale = whole.abs();
    let mut err = 0.0;
    let v = refine(&f, a, b, whole, rel_tol, scale, 0, &mut err)?;
    if !v.is_finite() {
        return Err(Error::QuadratureFailure {
            a,
            b,
            error: f64::INFINITY,
        });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, rel_tol: f64, scale: f64, depth: u32, err: &mut f64) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = fixed(f, a, mid);
    let right = fixed(f, mid, b);
    let split = left + right;
    let diff = (split - whole).abs();
    let target = rel_tol * split.abs().max(scale * 1e-6).max(f64::MIN_POSITIVE);
    if diff <= target || diff <= f64::EPSILON * split.abs() {
        *err += diff;
        return Ok(split);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureFailure { a, b, error: diff });
    }
    let l = refine(f, a, mid, left, rel_tol, scale, depth + 1, err)?;
    let r = refine(f, mid, b, right, rel_tol, scale, depth + 1, err)?;
    Ok(l + r)
}
