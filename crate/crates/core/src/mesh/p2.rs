//! Quadratic Lagrange triangle on the reference element
//! `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.
//!
//! Local node order: three vertices, then the midpoints of edges
//! 0–1, 1–2 and 2–0.

/// Reference coordinates of the six nodes.
pub const REF_NODES: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];

/// Local vertex pairs of the three edges, matching midpoint slots 3, 4, 5.
pub const EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn shape(xi: f64, eta: f64) -> [f64; 6] {
    let l0 = 1.0 - xi - eta;
    let (l1, l2) = (xi, eta);
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ]
}

/// Reference gradients `[∂ξ N, ∂η N]`.
pub fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 6] {
    let l0 = 1.0 - xi - eta;
    let (l1, l2) = (xi, eta);
    [
        [-(4.0 * l0 - 1.0), -(4.0 * l0 - 1.0)],
        [4.0 * l1 - 1.0, 0.0],
        [0.0, 4.0 * l2 - 1.0],
        [4.0 * (l0 - l1), -4.0 * l1],
        [4.0 * l2, 4.0 * l1],
        [-4.0 * l2, 4.0 * (l0 - l2)],
    ]
}

/// Symmetric 6-point rule of degree 4; weights sum to the reference area 1/2.
pub fn quadrature() -> [([f64; 2], f64); 6] {
    let a = 0.445_948_490_915_965;
    let b = 0.091_576_213_509_771;
    let wa = 0.223_381_589_678_011 / 2.0;
    let wb = 0.109_951_743_655_322 / 2.0;
    [
        ([a, a], wa),
        ([1.0 - 2.0 * a, a], wa),
        ([a, 1.0 - 2.0 * a], wa),
        ([b, b], wb),
        ([1.0 - 2.0 * b, b], wb),
        ([b, 1.0 - 2.0 * b], wb),
    ]
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton on P_n from the Chebyshev guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Isoparametric map evaluated at a reference point.
pub fn map(coords: &[[f64; 2]; 6], xi: f64, eta: f64) -> [f64; 2] {
    let n = shape(xi, eta);
    let mut p = [0.0; 2];
    for k in 0..6 {
        p[0] += n[k] * coords[k][0];
        p[1] += n[k] * coords[k][1];
    }
    p
}

/// Jacobian `∂x/∂ξ` as rows `[∂x/∂ξ, ∂x/∂η]`, `[∂y/∂ξ, ∂y/∂η]`.
pub fn jacobian(coords: &[[f64; 2]; 6], xi: f64, eta: f64) -> [[f64; 2]; 2] {
    let g = shape_grad(xi, eta);
    let mut j = [[0.0; 2]; 2];
    for k in 0..6 {
        for r in 0..2 {
            j[r][0] += coords[k][r] * g[k][0];
            j[r][1] += coords[k][r] * g[k][1];
        }
    }
    j
}

pub fn det(j: &[[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Physical gradients of the six shape functions and `det J` at a point.
pub fn physical_grads(coords: &[[f64; 2]; 6], xi: f64, eta: f64) -> ([[f64; 2]; 6], f64) {
    let j = jacobian(coords, xi, eta);
    let d = det(&j);
    let inv = [[j[1][1] / d, -j[0][1] / d], [-j[1][0] / d, j[0][0] / d]];
    let g = shape_grad(xi, eta);
    let mut out = [[0.0; 2]; 6];
    for k in 0..6 {
        // ∇N = J^{-T} ∇_ξ N
        out[k][0] = inv[0][0] * g[k][0] + inv[1][0] * g[k][1];
        out[k][1] = inv[0][1] * g[k][0] + inv[1][1] * g[k][1];
    }
    (out, d)
}

/// Reference coordinates of a physical point, by Newton iteration on the
/// isoparametric map. Returns `None` when the iteration fails to converge.
pub fn inverse_map(coords: &[[f64; 2]; 6], p: [f64; 2]) -> Option<[f64; 2]> {
    let mut r = [1.0 / 3.0, 1.0 / 3.0];
    for _ in 0..30 {
        let x = map(coords, r[0], r[1]);
        let res = [p[0] - x[0], p[1] - x[1]];
        let j = jacobian(coords, r[0], r[1]);
        let d = det(&j);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let dxi = (j[1][1] * res[0] - j[0][1] * res[1]) / d;
        let deta = (-j[1][0] * res[0] + j[0][0] * res[1]) / d;
        r[0] += dxi;
        r[1] += deta;
        if dxi.abs() + deta.abs() < 1e-14 {
            return Some(r);
        }
    }
    let x = map(coords, r[0], r[1]);
    let scale = coords.iter().fold(0.0_f64, |m, c| m.max(c[0].abs()).max(c[1].abs())).max(1e-300);
    if ((p[0] - x[0]).abs() + (p[1] - x[1]).abs()) / scale < 1e-10 {
        Some(r)
    } else {
        None
    }
}

/// Whether reference coordinates lie in the closed triangle up to `tol`.
pub fn inside_reference(r: [f64; 2], tol: f64) -> bool {
    r[0] >= -tol && r[1] >= -tol && r[0] + r[1] <= 1.0 + tol
}

/// Quadratic Lagrange basis on `[0, 1]` with nodes `0, 1, 1/2`.
pub fn edge_shape(s: f64) -> [f64; 3] {
    [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
}
