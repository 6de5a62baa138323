//! Singular behaviour at one corner of the interface.
//!
//! In the local polar frame of a corner (θ = 0 on the bisector, metal for
//! `|θ| < φ/2`) separable solutions `r^λ Φ(θ)` exist when `λ` is a zero of
//! one of the dispersion functions
//!
//! * `f⁻(z) = κ⁻¹ tanh z + tanh(bz)` (symmetric `Φ`),
//! * `f⁺(z) = κ tanh z + tanh(bz)` (skew-symmetric `Φ`),
//!
//! evaluated at `z = iλφ/2`, with `b = (2π − φ)/φ`. Root searches in the
//! complex `λ` plane use the entire functions
//! `g(z) = c sinh z cosh bz + cosh z sinh bz` (with `c = κ⁻¹` or `κ`),
//! which vanish exactly on the eigenvalues including those where both
//! `tanh` factors have poles.

use crate::error::{Error, Result};
use crate::materials::{corner_b, wedge_ratio, CriticalInterval};
use crate::specfun::{cosh_ratio, sinh_ratio, tanh_clamped};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Symmetry class of the angular profile `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Sym,
    Skew,
}

impl Parity {
    pub fn label(self) -> &'static str {
        match self {
            Parity::Sym => "sym",
            Parity::Skew => "skew",
        }
    }
}

/// A critical vertex of the interface with its local frame and hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerSpec {
    pub vertex: [f64; 2],
    pub aperture: f64,
    /// Direction of the bisector pointing into the metal.
    pub bisector: f64,
    pub rho: f64,
}

impl CornerSpec {
    /// Local polar coordinates `(r, θ)` of a point, `θ ∈ (−π, π]`.
    pub fn to_local(&self, p: [f64; 2]) -> (f64, f64) {
        let dx = p[0] - self.vertex[0];
        let dy = p[1] - self.vertex[1];
        let r = dx.hypot(dy);
        (r, wrap_angle(dy.atan2(dx) - self.bisector))
    }

    pub fn to_global(&self, r: f64, theta: f64) -> [f64; 2] {
        let a = theta + self.bisector;
        [self.vertex[0] + r * a.cos(), self.vertex[1] + r * a.sin()]
    }
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut t = a.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

fn coefficient(kappa: C64, parity: Parity) -> Result<C64> {
    match parity {
        Parity::Sym => {
            if kappa.norm() == 0.0 {
                return Err(Error::Domain("contrast 0 has no symmetric dispersion relation".into()));
            }
            Ok(kappa.inv())
        }
        Parity::Skew => Ok(kappa),
    }
}

/// `f^±(z)` with saturated `tanh`.
pub fn dispersion(z: C64, kappa: C64, b: f64, parity: Parity) -> Result<C64> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("wedge ratio must be positive, got {b}")));
    }
    let c = coefficient(kappa, parity)?;
    Ok(c * tanh_clamped(z) + tanh_clamped(z * b))
}

/// Pole-free form of the dispersion relation as a function of `λ`.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicFn {
    c: C64,
    b: f64,
    half_phi: f64,
}

impl CharacteristicFn {
    pub fn new(phi: f64, kappa: C64, parity: Parity) -> Result<Self> {
        Ok(Self { c: coefficient(kappa, parity)?, b: wedge_ratio(phi), half_phi: 0.5 * phi })
    }

    pub fn eval(&self, lambda: C64) -> C64 {
        let z = I * lambda * self.half_phi;
        let bz = z * self.b;
        self.c * z.sinh() * bz.cosh() + z.cosh() * bz.sinh()
    }

    pub fn eval_with_deriv(&self, lambda: C64) -> (C64, C64) {
        let z = I * lambda * self.half_phi;
        let bz = z * self.b;
        let (s, c) = (z.sinh(), z.cosh());
        let (sb, cb) = (bz.sinh(), bz.cosh());
        let g = self.c * s * cb + c * sb;
        let dgdz = self.c * (c * cb + self.b * s * sb) + s * sb + self.b * c * cb;
        (g, dgdz * I * self.half_phi)
    }

    /// `|g|` relative to the largest product of hyperbolic factors. Bounded
    /// by `|f^s|` where the latter is finite, and meaningful where both
    /// `tanh` factors have poles.
    pub fn residual(&self, lambda: C64) -> f64 {
        let z = I * lambda * self.half_phi;
        let bz = z * self.b;
        let (s, c) = (z.sinh(), z.cosh());
        let (sb, cb) = (bz.sinh(), bz.cosh());
        let g = self.c * s * cb + c * sb;
        let scale = [(s * sb).norm(), (s * cb).norm(), (c * sb).norm(), (c * cb).norm()]
            .into_iter()
            .fold(f64::MIN_POSITIVE, f64::max);
        g.norm() / scale
    }
}

/// Parity of the purely imaginary exponents for contrast `κ` and aperture `φ`
/// inside the critical interval of that corner.
pub fn imaginary_parity(phi: f64, kappa: f64) -> Parity {
    let below = kappa < -1.0;
    match (phi < PI, below) {
        (true, true) | (false, false) => Parity::Skew,
        (true, false) | (false, true) => Parity::Sym,
    }
}

fn real_dispersion(t: f64, kappa: f64, b: f64, parity: Parity) -> f64 {
    match parity {
        Parity::Sym => t.tanh() / kappa + (b * t).tanh(),
        Parity::Skew => kappa * t.tanh() + (b * t).tanh(),
    }
}

/// Purely imaginary exponents `±iη` of a corner with real contrast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImaginaryExponent {
    pub eta: f64,
    pub parity: Parity,
    /// Sign-changing bracket of `t = ηφ/2`.
    pub bracket: (f64, f64),
}

pub fn imaginary_exponent(phi: f64, kappa: f64) -> Result<Option<ImaginaryExponent>> {
    let bs = corner_b(phi)?;
    if kappa == -1.0 {
        return Err(Error::DegenerateContrast);
    }
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::Domain(format!("contrast must be finite and nonzero, got {kappa}")));
    }
    if !CriticalInterval::from_b(bs).contains_open(kappa) {
        return Ok(None);
    }
    let b = wedge_ratio(phi);
    let parity = imaginary_parity(phi, kappa);
    let f = |t: f64| real_dispersion(t, kappa, b, parity);
    let lo0 = 1e-8;
    let f_lo = f(lo0);
    let mut hi = 1.0;
    while f(hi).signum() == f_lo.signum() {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::RootFinding(format!(
                "no sign change of the dispersion relation for φ = {phi}, κ = {kappa}"
            )));
        }
    }
    let mut lo = lo0;
    let bracket_hi = hi;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(Some(ImaginaryExponent { eta: 2.0 * t / phi, parity, bracket: (lo0, bracket_hi) }))
}

/// Rectangular search region of the `λ` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self::right_half(10.0, 10.0)
    }
}

impl Window {
    /// `Re λ ∈ (0, re_max]`, `|Im λ| ≤ im_max`; the left edge sits just off the
    /// imaginary axis so that `0` and `±iη` are excluded.
    pub fn right_half(re_max: f64, im_max: f64) -> Self {
        Self { re_min: 1e-6, re_max, im_min: -im_max, im_max }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// Exponent found by the complex search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: C64,
    pub parity: Parity,
    pub residual: f64,
}

#[derive(Debug)]
struct BoundaryHit;

/// Change of argument of `g` along the segment `a → b`, refined until
/// consecutive samples differ by less than `π/3`.
fn arg_change(g: &CharacteristicFn, a: C64, ga: C64, b: C64, gb: C64, depth: u32) -> std::result::Result<f64, BoundaryHit> {
    let scale = ga.norm().max(gb.norm());
    if ga.norm() == 0.0 || gb.norm() == 0.0 {
        return Err(BoundaryHit);
    }
    let d = (gb / ga).arg();
    if d.abs() < PI / 3.0 {
        return Ok(d);
    }
    if depth > 48 || (b - a).norm() < 1e-13 * (1.0 + a.norm()) {
        let _ = scale;
        return Err(BoundaryHit);
    }
    let m = 0.5 * (a + b);
    let gm = g.eval(m);
    Ok(arg_change(g, a, ga, m, gm, depth + 1)? + arg_change(g, m, gm, b, gb, depth + 1)?)
}

/// Winding number of `g` around the rectangle `[x0,x1] × [y0,y1]`.
fn winding(g: &CharacteristicFn, x0: f64, x1: f64, y0: f64, y1: f64) -> std::result::Result<i64, BoundaryHit> {
    let corners = [
        C64::new(x0, y0),
        C64::new(x1, y0),
        C64::new(x1, y1),
        C64::new(x0, y1),
    ];
    let mut total = 0.0;
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let n = (((b - a).norm() * 16.0).ceil() as usize).max(4);
        let mut prev = a;
        let mut gprev = g.eval(a);
        for k in 1..=n {
            let p = a + (b - a) * (k as f64 / n as f64);
            let gp = g.eval(p);
            total += arg_change(g, prev, gprev, p, gp, 0)?;
            prev = p;
            gprev = gp;
        }
    }
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 0.05 {
        return Err(BoundaryHit);
    }
    Ok(r as i64)
}

fn newton(g: &CharacteristicFn, mut z: C64, max_iter: usize) -> Option<C64> {
    for _ in 0..max_iter {
        let (v, d) = g.eval_with_deriv(z);
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        let step = v / d;
        z -= step;
        if !z.norm().is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let (v, d) = g.eval_with_deriv(z);
    if (v / d).norm() < 1e-12 * (1.0 + z.norm()) {
        Some(z)
    } else {
        None
    }
}

/// Winding number of `g` around the window, computed with the adaptive
/// contour used by the root search.
pub fn window_winding(phi: f64, kappa: C64, parity: Parity, w: &Window) -> Result<i64> {
    let g = CharacteristicFn::new(phi, kappa, parity)?;
    winding(&g, w.re_min, w.re_max, w.im_min, w.im_max)
        .map_err(|_| Error::RootFinding("zero of the dispersion relation on the window boundary".into()))
}

fn search_rect(
    g: &CharacteristicFn,
    rect: [f64; 4],
    count: i64,
    depth: u32,
    out: &mut Vec<C64>,
) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    let [x0, x1, y0, y1] = rect;
    if count == 1 {
        let centre = C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        if let Some(z) = newton(g, centre, 60) {
            let tol = 1e-9 * (1.0 + z.norm());
            if z.re >= x0 - tol && z.re <= x1 + tol && z.im >= y0 - tol && z.im <= y1 + tol {
                out.push(z);
                return Ok(());
            }
        }
    }
    if depth > 60 {
        return Err(Error::RootFinding(format!(
            "could not isolate {count} zero(s) near {:?}; multiple root suspected",
            C64::new(x0, y0)
        )));
    }
    // split the longer side slightly off-centre so that cuts avoid the
    // symmetry axes where zeros of real-contrast problems accumulate
    let offsets = [0.5 + 0.0173, 0.5 - 0.0291, 0.5 + 0.0417, 0.5 - 0.0613, 0.37, 0.63];
    for &t in &offsets {
        let halves = if x1 - x0 >= y1 - y0 {
            let xm = x0 + t * (x1 - x0);
            [[x0, xm, y0, y1], [xm, x1, y0, y1]]
        } else {
            let ym = y0 + t * (y1 - y0);
            [[x0, x1, y0, ym], [x0, x1, ym, y1]]
        };
        let c0 = winding(g, halves[0][0], halves[0][1], halves[0][2], halves[0][3]);
        let c1 = winding(g, halves[1][0], halves[1][1], halves[1][2], halves[1][3]);
        if let (Ok(c0), Ok(c1)) = (c0, c1) {
            if c0 + c1 != count || c0 < 0 || c1 < 0 {
                continue;
            }
            search_rect(g, halves[0], c0, depth + 1, out)?;
            search_rect(g, halves[1], c1, depth + 1, out)?;
            return Ok(());
        }
    }
    Err(Error::RootFinding(format!("subdivision failed near {:?}", C64::new(x0, y0))))
}

fn roots_one_parity(phi: f64, kappa: C64, parity: Parity, w: &Window) -> Result<Vec<Root>> {
    let g = CharacteristicFn::new(phi, kappa, parity)?;
    let mut win = *w;
    let mut total = None;
    for attempt in 0..6 {
        match winding(&g, win.re_min, win.re_max, win.im_min, win.im_max) {
            Ok(n) => {
                total = Some(n);
                break;
            }
            Err(_) => {
                let j = 1.0 + 1e-7 * (attempt as f64 + 1.0) * 1.37;
                win.re_min *= j;
                win.re_max *= j;
                win.im_min *= j;
                win.im_max *= j;
            }
        }
    }
    let total = total.ok_or_else(|| {
        Error::RootFinding(format!("zero persistently on the window boundary (φ = {phi}, κ = {kappa})"))
    })?;
    if total < 0 {
        return Err(Error::RootFinding("negative winding number for an entire function".into()));
    }
    let mut zs = Vec::new();
    search_rect(&g, [win.re_min, win.re_max, win.im_min, win.im_max], total, 0, &mut zs)?;
    let mut roots: Vec<Root> = zs
        .into_iter()
        .map(|z| Root { lambda: z, parity, residual: g.residual(z) })
        .collect();
    // Newton from two subrectangles may land on the same zero only if the
    // counts were inconsistent; verify distinctness
    roots.sort_by(|a, b| {
        a.lambda.re.partial_cmp(&b.lambda.re).unwrap().then(a.lambda.im.partial_cmp(&b.lambda.im).unwrap())
    });
    for pair in roots.windows(2) {
        if (pair[0].lambda - pair[1].lambda).norm() < 1e-9 * (1.0 + pair[0].lambda.norm()) {
            return Err(Error::RootFinding(format!("duplicate zero at {}", pair[0].lambda)));
        }
    }
    Ok(roots)
}

/// Every singular exponent of both parities inside the window.
pub fn complex_exponents(phi: f64, kappa: C64, w: &Window) -> Result<Vec<Root>> {
    corner_b(phi)?;
    if kappa.norm() == 0.0 {
        return Err(Error::Domain("contrast must be nonzero".into()));
    }
    if kappa == C64::new(-1.0, 0.0) {
        return Err(Error::DegenerateContrast);
    }
    if !(w.re_max > w.re_min && w.im_max > w.im_min) {
        return Err(Error::Domain("empty search window".into()));
    }
    if (w.im_max.abs().max(w.im_min.abs())) * PI > 600.0 {
        return Err(Error::Domain("search window too tall for double precision".into()));
    }
    let mut all = roots_one_parity(phi, kappa, Parity::Sym, w)?;
    all.extend(roots_one_parity(phi, kappa, Parity::Skew, w)?);
    all.sort_by(|a, b| {
        a.lambda
            .re
            .partial_cmp(&b.lambda.re)
            .unwrap()
            .then(a.lambda.im.partial_cmp(&b.lambda.im).unwrap())
            .then(a.parity.cmp(&b.parity))
    });
    Ok(all)
}

/// Exponent set of one corner: the imaginary pair if present and the
/// exponents with positive real part inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularExponentSet {
    pub kappa: C64,
    pub phi: f64,
    pub b: f64,
    pub imaginary: Option<ImaginaryExponent>,
    pub roots: Vec<Root>,
    pub window: Window,
    /// Smallest real part over `roots`; `None` when the window holds none.
    pub beta0: Option<f64>,
}

impl SingularExponentSet {
    pub fn compute(phi: f64, kappa: C64, window: &Window) -> Result<Self> {
        let roots = complex_exponents(phi, kappa, window)?;
        let imaginary = if kappa.im == 0.0 { imaginary_exponent(phi, kappa.re)? } else { None };
        let beta0 = roots.iter().map(|r| r.lambda.re).fold(None, |m: Option<f64>, v| {
            Some(m.map_or(v, |m| m.min(v)))
        });
        Ok(Self { kappa, phi, b: wedge_ratio(phi), imaginary, roots, window: *window, beta0 })
    }

    /// Always true: `λ = 0` solves both dispersion relations.
    pub fn contains_zero(&self) -> bool {
        true
    }
}

/// Angular profile of the black-hole wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub eta: f64,
    pub phi: f64,
    pub parity: Parity,
}

impl ModeFunction {
    pub fn new(eta: f64, phi: f64, parity: Parity) -> Self {
        Self { eta, phi, parity }
    }

    /// `Φ(θ)`, 2π-periodic.
    pub fn value(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        let a = t.abs();
        let h = 0.5 * self.phi;
        let e = self.eta;
        let v = match self.parity {
            Parity::Skew => {
                if a <= h {
                    sinh_ratio(e * a, e * h)
                } else {
                    sinh_ratio(e * (PI - a), e * (PI - h))
                }
            }
            Parity::Sym => {
                if a <= h {
                    cosh_ratio(e * a, e * h)
                } else {
                    cosh_ratio(e * (PI - a), e * (PI - h))
                }
            }
        };
        if self.parity == Parity::Skew && t < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `Φ'(θ)`; one-sided values at `±φ/2` are taken from the metal side.
    pub fn derivative(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        let a = t.abs();
        let h = 0.5 * self.phi;
        let e = self.eta;
        // derivative with respect to |θ|
        let d = match self.parity {
            Parity::Skew => {
                if a <= h {
                    e * ratio_cosh_over_sinh(e * a, e * h)
                } else {
                    -e * ratio_cosh_over_sinh(e * (PI - a), e * (PI - h))
                }
            }
            Parity::Sym => {
                if a <= h {
                    e * ratio_sinh_over_cosh(e * a, e * h)
                } else {
                    -e * ratio_sinh_over_cosh(e * (PI - a), e * (PI - h))
                }
            }
        };
        match self.parity {
            Parity::Skew => d,
            Parity::Sym => {
                if t < 0.0 {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// `∫ ε⁻¹ Φ² dθ` over the full circle.
    pub fn flux_integral(&self, kappa: f64, eps_d: f64) -> f64 {
        flux_integral(self.eta, self.phi, kappa, self.parity, eps_d)
    }
}

/// `cosh(a)/sinh(b)` for `0 ≤ a ≤ b`, `b > 0`.
fn ratio_cosh_over_sinh(a: f64, b: f64) -> f64 {
    if b < 20.0 {
        a.cosh() / b.sinh()
    } else {
        (a - b).exp() * (1.0 + (-2.0 * a).exp()) / (1.0 - (-2.0 * b).exp())
    }
}

/// `sinh(a)/cosh(b)` for `0 ≤ a ≤ b`.
fn ratio_sinh_over_cosh(a: f64, b: f64) -> f64 {
    if b < 20.0 {
        a.sinh() / b.cosh()
    } else {
        (a - b).exp() * (1.0 - (-2.0 * a).exp()) / (1.0 + (-2.0 * b).exp())
    }
}

/// `(sinh x − x)/(cosh x − 1)`.
fn aleph_skew_scaled(x: f64) -> f64 {
    if x > 20.0 {
        let e = (-x).exp();
        return (1.0 - e * e - 2.0 * x * e) / (1.0 - e).powi(2);
    }
    let num = if x < 1.0 {
        let mut term = x * x * x / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= x * x / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        x.sinh() - x
    };
    num / (2.0 * (0.5 * x).sinh().powi(2))
}

/// `(sinh x + x)/(cosh x + 1)`.
fn aleph_sym_scaled(x: f64) -> f64 {
    if x > 20.0 {
        let e = (-x).exp();
        return (1.0 - e * e + 2.0 * x * e) / (1.0 + e).powi(2);
    }
    (x.sinh() + x) / (x.cosh() + 1.0)
}

/// `∫_{−π}^{π} ε⁻¹ Φ² dθ = ε_m⁻¹ ℵ_m + ε_d⁻¹ ℵ_d` in closed form.
pub fn flux_integral(eta: f64, phi: f64, kappa: f64, parity: Parity, eps_d: f64) -> f64 {
    let aleph = |x: f64| match parity {
        Parity::Skew => aleph_skew_scaled(x) / eta,
        Parity::Sym => aleph_sym_scaled(x) / eta,
    };
    let eps_m = kappa * eps_d;
    aleph(eta * phi) / eps_m + aleph(eta * (2.0 * PI - phi)) / eps_d
}

/// The energy-absorbing black-hole exponent of a corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutgoingMode {
    pub lambda: C64,
    pub mode: ModeFunction,
}

pub fn select_outgoing(phi: f64, kappa: f64, eta: f64) -> Result<OutgoingMode> {
    let bs = corner_b(phi)?;
    if kappa == -1.0 {
        return Err(Error::DegenerateContrast);
    }
    if !CriticalInterval::from_b(bs).contains_open(kappa) {
        return Err(Error::NoBlackHole { kappa });
    }
    let lambda = if kappa < -1.0 { C64::new(0.0, -eta) } else { C64::new(0.0, eta) };
    Ok(OutgoingMode { lambda, mode: ModeFunction::new(eta, phi, imaginary_parity(phi, kappa)) })
}

/// Outgoing mode computed from scratch for a real contrast.
pub fn outgoing_mode(phi: f64, kappa: f64) -> Result<OutgoingMode> {
    let ie = imaginary_exponent(phi, kappa)?.ok_or(Error::NoBlackHole { kappa })?;
    select_outgoing(phi, kappa, ie.eta)
}

/// Newton continuation of one exponent along a contrast path.
fn continue_root(phi: f64, parity: Parity, from: (C64, C64), to: C64, depth: u32) -> Result<C64> {
    let (k0, l0) = from;
    let g = CharacteristicFn::new(phi, to, parity)?;
    if let Some(z) = newton(&g, l0, 40) {
        // reject jumps to a neighbouring root
        if (z - l0).norm() < 0.25 * (1.0 + l0.norm()) {
            return Ok(z);
        }
    }
    if depth > 24 {
        return Err(Error::RootFinding(format!("continuation diverged between κ = {k0} and {to}")));
    }
    let mid = 0.5 * (k0 + to);
    let lm = continue_root(phi, parity, from, mid, depth + 1)?;
    continue_root(phi, parity, (mid, lm), to, depth + 1)
}

/// Follows the exponent of smallest positive real part from the first
/// (dissipative) contrast of the path to the last one.
pub fn track_dissipative(phi: f64, kappa_path: &[C64]) -> Result<Vec<Root>> {
    let first = *kappa_path.first().ok_or_else(|| Error::Domain("empty contrast path".into()))?;
    if first.im <= 0.0 {
        return Err(Error::Domain("path must start at a contrast with positive imaginary part".into()));
    }
    let w = Window::right_half(10.0, 10.0);
    let roots = complex_exponents(phi, first, &w)?;
    let start = roots
        .iter()
        .filter(|r| r.lambda.re > 0.0)
        .min_by(|a, b| a.lambda.re.partial_cmp(&b.lambda.re).unwrap())
        .copied()
        .ok_or_else(|| Error::RootFinding("no exponent with positive real part".into()))?;
    let mut out = vec![start];
    let mut cur = (first, start.lambda);
    for &k in &kappa_path[1..] {
        let z = continue_root(phi, start.parity, cur, k, 0)?;
        let g = CharacteristicFn::new(phi, k, start.parity)?;
        out.push(Root { lambda: z, parity: start.parity, residual: g.residual(z) });
        cur = (k, z);
    }
    Ok(out)
}

/// Value and gradient of a separable corner field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: C64,
    /// `(∂_r, r⁻¹∂_θ)` in polar form or `(∂_z, ∂_θ)` in strip form.
    pub grad: [C64; 2],
}

/// `r^λ Φ(θ)` in corner-local polar coordinates.
pub fn singularity_field(lambda: C64, mode: &ModeFunction, r: f64, theta: f64) -> Result<FieldSample> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let s = singularity_field_strip(lambda, mode, r.ln(), theta);
    Ok(FieldSample { value: s.value, grad: [s.grad[0] / r, s.grad[1] / r] })
}

/// `e^{λz} Φ(θ)` in strip coordinates.
pub fn singularity_field_strip(lambda: C64, mode: &ModeFunction, z: f64, theta: f64) -> FieldSample {
    let e = (lambda * z).exp();
    let p = mode.value(theta);
    FieldSample { value: e * p, grad: [lambda * e * p, e * mode.derivative(theta)] }
}
