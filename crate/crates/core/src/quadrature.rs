//! Adaptive composite Gauss–Legendre quadrature.

use crate::quadrature_nodes::{GL20_NODES, GL20_WEIGHTS};

/// 20-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL20_NODES.iter().zip(GL20_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Integrate `f` over `[a, b]`, bisecting panels until the one-panel and
/// two-panel estimates agree to `rel_tol` relative to the whole integral (or
/// to `abs_tol` absolutely).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss_legendre(f, a, b);
    let floor = abs_tol.max(rel_tol * whole.abs()).max(1e-300);
    refine(f, a, b, whole, rel_tol, floor, 0)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = gauss_legendre(f, a, m);
    let right = gauss_legendre(f, m, b);
    let split = left + right;
    let err = (split - whole).abs();
    if depth >= 24 || err <= rel_tol * split.abs() || err <= abs_tol {
        return split;
    }
    refine(f, a, m, left, rel_tol, 0.5 * abs_tol, depth + 1)
        + refine(f, m, b, right, rel_tol, 0.5 * abs_tol, depth + 1)
}
