//! Coupled P2 system on the perforated disk and the corner strips.
//!
//! Forms are assembled without conjugating the test function, so the
//! matrix is complex symmetric; the right-hand side carries the
//! conjugation of the sesquilinear formulation.

use crate::corner_modes::{ModeFunction, OutgoingMode};
use crate::error::{Error, Result};
use crate::materials::MaterialConfig;
use crate::mesh::{p2, BoundaryTag, Mesh, Region, SplitMesh};
use crate::pml::{stretched_coeffs, PmlSpec};
use crate::specfun::{HankelRatioTable, N_MAX};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Gauss points per boundary edge for the Fourier weights.
const EDGE_GAUSS: usize = 10;

/// Truncation of the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Exact Dirichlet-to-Neumann map truncated to `|n| ≤ n_f`.
    Dtn { n_f: usize },
    /// First-order condition `∂_r u = (ik − 1/(2R)) u`.
    Abc,
}

/// `⌈kR⌉ + 25`.
pub fn default_n_f(k: f64, radius: f64) -> usize {
    (k * radius).ceil() as usize + 25
}

/// Material constants resolved at the working frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Media {
    pub eps_d: f64,
    pub eps_m: C64,
    pub mu_d: f64,
    pub mu_m: f64,
    pub k0: f64,
}

impl Media {
    pub fn from_config(m: &MaterialConfig) -> Result<Self> {
        m.validate()?;
        let eps_m = m.eps_m()?;
        if (eps_m / m.eps_d + 1.0).norm() < 1e-14 {
            return Err(Error::DegenerateContrast);
        }
        Ok(Self { eps_d: m.eps_d, eps_m, mu_d: m.mu_d, mu_m: m.mu_m, k0: m.k0() })
    }

    /// Wavenumber in the dielectric.
    pub fn k(&self) -> f64 {
        self.k0 * (self.eps_d * self.mu_d).sqrt()
    }

    pub fn eps(&self, r: Region) -> C64 {
        match r {
            Region::Dielectric => C64::new(self.eps_d, 0.0),
            Region::Metal => self.eps_m,
        }
    }

    pub fn mu(&self, r: Region) -> f64 {
        match r {
            Region::Dielectric => self.mu_d,
            Region::Metal => self.mu_m,
        }
    }

    pub fn kappa(&self) -> C64 {
        self.eps_m / self.eps_d
    }
}

/// Everything needed to assemble the discrete problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: SplitMesh,
    pub media: Media,
    /// One layer description per strip.
    pub pml: Vec<PmlSpec>,
    pub boundary: BoundaryMode,
    pub outer_radius: f64,
}

/// Global numbering after merging periodic and interface node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofMap {
    pub disk: Vec<usize>,
    pub strips: Vec<Vec<usize>>,
    pub n_dofs: usize,
    /// Unknowns first numbered on the disk and on each strip.
    pub disk_count: usize,
    pub strip_counts: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl DofMap {
    pub fn new(mesh: &SplitMesh) -> Result<Self> {
        let nd = mesh.disk.num_nodes();
        let mut offsets = vec![nd];
        for s in &mesh.strips {
            offsets.push(offsets.last().unwrap() + s.num_nodes());
        }
        let total = *offsets.last().unwrap();
        let mut parent: Vec<usize> = (0..total).collect();
        let mut union = |a: usize, b: usize| {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                // keep the smaller index as root so disk nodes own merged dofs
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent[hi] = lo;
            }
        };
        for (n, s) in mesh.strips.iter().enumerate() {
            let off = offsets[n];
            for &(a, b) in &s.periodic {
                union(off + a, off + b);
            }
            let ring_d = mesh.disk.rings.get(n).ok_or_else(|| Error::Mesh(format!("disk has no ring {n}")))?;
            let ring_s = &s.rings[0];
            if ring_d.len() != ring_s.len() {
                return Err(Error::Mesh(format!("interface {n} node counts differ")));
            }
            for (&a, &b) in ring_d.iter().zip(ring_s) {
                union(a, off + b);
            }
        }
        let mut id = vec![usize::MAX; total];
        let mut next = 0;
        let mut counts = vec![0usize; mesh.strips.len() + 1];
        for x in 0..total {
            let r = find(&mut parent, x);
            if id[r] == usize::MAX {
                id[r] = next;
                next += 1;
                let part = offsets.iter().position(|&o| x < o).unwrap_or(mesh.strips.len());
                counts[part] += 1;
            }
            id[x] = id[r];
        }
        let disk = id[..nd].to_vec();
        let strips = (0..mesh.strips.len()).map(|n| id[offsets[n]..offsets[n + 1]].to_vec()).collect();
        Ok(Self { disk, strips, n_dofs: next, disk_count: counts[0], strip_counts: counts[1..].to_vec() })
    }
}

/// Fourier data of the outer boundary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterTrace {
    pub radius: f64,
    pub n_f: usize,
    /// Global unknowns on the outer circle.
    pub dofs: Vec<usize>,
    /// `weights[b][n + n_f] = (2π)^{-1/2} ∫ φ_b e^{−inθ} dθ`.
    pub weights: Vec<Vec<C64>>,
    /// Boundary edges as local indices into `dofs` `[a, b, mid]` with end angles.
    pub edges: Vec<([usize; 3], f64, f64)>,
}

impl OuterTrace {
    fn new(mesh: &Mesh, dofmap: &[usize], radius: f64, n_f: usize) -> Result<Self> {
        let mut local = std::collections::HashMap::new();
        let mut dofs = Vec::new();
        let mut edges = Vec::new();
        for be in mesh.boundary.iter().filter(|b| b.tag == BoundaryTag::Outer) {
            let mut idx = [0usize; 3];
            for k in 0..3 {
                let g = dofmap[be.nodes[k]];
                idx[k] = *local.entry(g).or_insert_with(|| {
                    dofs.push(g);
                    dofs.len() - 1
                });
            }
            let ang = |v: usize| mesh.nodes[v][1].atan2(mesh.nodes[v][0]);
            let ta = ang(be.nodes[0]);
            let mut tb = ang(be.nodes[1]);
            // unwrap to the short arc
            while tb - ta > PI {
                tb -= 2.0 * PI;
            }
            while tb - ta < -PI {
                tb += 2.0 * PI;
            }
            edges.push((idx, ta, tb));
        }
        if edges.is_empty() {
            return Err(Error::Mesh("mesh has no outer boundary".into()));
        }
        let nw = 2 * n_f + 1;
        let mut weights = vec![vec![C64::new(0.0, 0.0); nw]; dofs.len()];
        let gauss = p2::gauss_01(EDGE_GAUSS);
        for (idx, ta, tb) in &edges {
            let len = (tb - ta).abs();
            for &(s, w) in &gauss {
                let th = ta + s * (tb - ta);
                let sh = p2::edge_shape(s);
                let base = C64::from_polar(1.0, -th);
                let mut e = C64::from_polar(1.0, n_f as f64 * th);
                for col in 0..nw {
                    // e = e^{−inθ} with n = col − n_f
                    for k in 0..3 {
                        weights[idx[k]][col] += e * (w * len * sh[k] / SQRT_2PI);
                    }
                    e *= base;
                }
            }
        }
        Ok(Self { radius, n_f, dofs, weights, edges })
    }

    /// Fourier coefficients `u_n` of a global solution vector on the circle.
    pub fn coefficients(&self, u: &[C64]) -> Vec<C64> {
        let nw = 2 * self.n_f + 1;
        let mut out = vec![C64::new(0.0, 0.0); nw];
        for (b, &g) in self.dofs.iter().enumerate() {
            for n in 0..nw {
                out[n] += self.weights[b][n] * u[g];
            }
        }
        out
    }
}

/// Assembled matrix and right-hand side.
pub struct LinearSystem {
    pub matrix: SparseColMat<usize, C64>,
    pub rhs: Vec<C64>,
    pub dofs: DofMap,
    pub outer: OuterTrace,
    pub boundary: BoundaryMode,
    /// `k H'_n(kR) / H_n(kR)` for `n = −n_f..=n_f`.
    pub dtn: Vec<C64>,
}

/// Plane-wave data on the outer circle.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentTrace {
    pub alpha: f64,
    pub k: f64,
    pub radius: f64,
    pub n_f: usize,
    /// `√(2π) iⁿ J_n(kR) e^{−inα}`.
    pub u: Vec<C64>,
    /// `√(2π) iⁿ k J'_n(kR) e^{−inα}`.
    pub du: Vec<C64>,
}

impl IncidentTrace {
    /// Value of the truncated series at angle `theta`.
    pub fn eval(&self, theta: f64) -> C64 {
        let nf = self.n_f as i32;
        (-nf..=nf).map(|n| self.u[(n + nf) as usize] * C64::from_polar(1.0, n as f64 * theta)).sum::<C64>() / SQRT_2PI
    }
}

fn i_pow(n: i32) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Jacobi–Anger coefficients of `e^{ik·x}` on the circle of radius `radius`.
pub fn incident_trace(alpha: f64, k: f64, radius: f64, n_f: usize) -> Result<IncidentTrace> {
    if !(k > 0.0 && radius > 0.0) {
        return Err(Error::Domain("wavenumber and radius must be positive".into()));
    }
    if n_f + 1 > N_MAX {
        return Err(Error::Domain(format!("N_F = {n_f} exceeds the Bessel table limit {}", N_MAX - 1)));
    }
    let tab = HankelRatioTable::new(n_f, k * radius)?;
    let nf = n_f as i32;
    let mut u = Vec::with_capacity(2 * n_f + 1);
    let mut du = Vec::with_capacity(2 * n_f + 1);
    for n in -nf..=nf {
        let ph = i_pow(n) * C64::from_polar(SQRT_2PI, -(n as f64) * alpha);
        u.push(ph * tab.j(n));
        du.push(ph * (k * tab.dj(n)));
    }
    Ok(IncidentTrace { alpha, k, radius, n_f, u, du })
}

/// Element matrix of `∫ (A ∇φ_j)·∇φ_i − c φ_j φ_i` for a diagonal
/// tensor `A = diag(a₁, a₂)` and mass weight `c`, both given per point.
fn element_matrix(coords: &[[f64; 2]; 6], coef: impl Fn([f64; 2]) -> Result<(C64, C64, C64)>) -> Result<[[C64; 6]; 6]> {
    let mut k = [[C64::new(0.0, 0.0); 6]; 6];
    for (q, w) in p2::quadrature() {
        let (g, det) = p2::physical_grads(coords, q[0], q[1]);
        let x = p2::map(coords, q[0], q[1]);
        let (a1, a2, c) = coef(x)?;
        let n = p2::shape(q[0], q[1]);
        let wd = w * det;
        for i in 0..6 {
            for j in i..6 {
                let v = (a1 * (g[i][0] * g[j][0]) + a2 * (g[i][1] * g[j][1]) - c * (n[i] * n[j])) * wd;
                k[i][j] += v;
            }
        }
    }
    for i in 0..6 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    Ok(k)
}

struct Triplets {
    entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    fn add_element(&mut self, dofs: &[usize; 6], k: &[[C64; 6]; 6]) {
        for i in 0..6 {
            for j in 0..6 {
                self.entries.push((dofs[i], dofs[j], k[i][j]));
            }
        }
    }

    /// Sums duplicates in a fixed order (stable sort by column, then row)
    /// so that symmetric contributions produce bitwise symmetric sums.
    fn into_matrix(mut self, n: usize) -> Result<SparseColMat<usize, C64>> {
        self.entries.sort_by_key(|e| (e.1, e.0));
        let mut merged: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(self.entries.len() / 4);
        for (r, c, v) in self.entries {
            match merged.last_mut() {
                Some(t) if t.row == r && t.col == c => t.val += v,
                _ => merged.push(Triplet::new(r, c, v)),
            }
        }
        SparseColMat::try_new_from_triplets(n, n, &merged).map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))
    }
}

/// Assembles the matrix of the discrete problem; the right-hand side is
/// set for plane-wave incidence `incidence` when given, zero otherwise.
pub fn assemble(problem: &Problem, incidence: Option<f64>) -> Result<LinearSystem> {
    let mesh = &problem.mesh;
    let media = &problem.media;
    if problem.pml.len() != mesh.strips.len() {
        return Err(Error::Validation(format!("{} layer specs for {} strips", problem.pml.len(), mesh.strips.len())));
    }
    for (n, spec) in problem.pml.iter().enumerate() {
        spec.validate()?;
        let lay = mesh.strips[n].strip.as_ref().ok_or_else(|| Error::Mesh(format!("strip {n} without layout")))?;
        let tol = 1e-9 * (1.0 + spec.l);
        if (lay.l - spec.l).abs() > tol || (lay.l0 - spec.l0).abs() > tol || (lay.rho - spec.rho).abs() > 1e-14 * spec.rho {
            return Err(Error::Validation(format!("layer spec {n} disagrees with its strip mesh")));
        }
    }
    let dofs = DofMap::new(mesh)?;
    let k0sq = media.k0 * media.k0;
    let mut trip = Triplets { entries: Vec::with_capacity(36 * (mesh.disk.num_elements() + mesh.strips.iter().map(Mesh::num_elements).sum::<usize>())) };
    for (e, el) in mesh.disk.elements.iter().enumerate() {
        let reg = mesh.disk.regions[e];
        let inv = media.eps(reg).inv();
        let c = C64::new(k0sq * media.mu(reg), 0.0);
        let k = element_matrix(&mesh.disk.element_coords(e), |_| Ok((inv, inv, c)))?;
        let d: [usize; 6] = std::array::from_fn(|i| dofs.disk[el[i]]);
        trip.add_element(&d, &k);
    }
    for (n, strip) in mesh.strips.iter().enumerate() {
        let spec = &problem.pml[n];
        for (e, el) in strip.elements.iter().enumerate() {
            let reg = strip.regions[e];
            let inv = media.eps(reg).inv();
            let mu = media.mu(reg);
            let k = element_matrix(&strip.element_coords(e), |x| {
                let (az, at, m) = stretched_coeffs(x[0], spec)?;
                Ok((az * inv, at * inv, m * (k0sq * mu)))
            })?;
            let d: [usize; 6] = std::array::from_fn(|i| dofs.strips[n][el[i]]);
            trip.add_element(&d, &k);
        }
    }
    let radius = problem.outer_radius;
    let k = media.k();
    let n_f = match problem.boundary {
        BoundaryMode::Dtn { n_f } => n_f,
        BoundaryMode::Abc => default_n_f(k, radius).min(N_MAX - 1),
    };
    if n_f + 1 > N_MAX {
        return Err(Error::Domain(format!("N_F = {n_f} exceeds the Bessel table limit {}", N_MAX - 1)));
    }
    let outer = OuterTrace::new(&mesh.disk, &dofs.disk, radius, n_f)?;
    let tab = HankelRatioTable::new(n_f, k * radius)?;
    let nf = n_f as i32;
    let dtn: Vec<C64> = (-nf..=nf).map(|n| tab.ratio(n) * k).collect();
    let scale = radius / media.eps_d;
    match problem.boundary {
        BoundaryMode::Dtn { .. } => {
            let nb = outer.dofs.len();
            let nw = 2 * n_f + 1;
            for i in 0..nb {
                for j in i..nb {
                    let mut s = C64::new(0.0, 0.0);
                    for col in 0..nw {
                        // w_{i,−n} = conj(w_{i,n}) for real basis functions
                        s += dtn[col] * outer.weights[j][col] * outer.weights[i][col].conj();
                    }
                    let v = -scale * s;
                    trip.entries.push((outer.dofs[i], outer.dofs[j], v));
                    if i != j {
                        trip.entries.push((outer.dofs[j], outer.dofs[i], v));
                    }
                }
            }
        }
        BoundaryMode::Abc => {
            let beta = C64::new(-0.5 / radius, k);
            let gauss = p2::gauss_01(EDGE_GAUSS);
            for (idx, ta, tb) in &outer.edges {
                let len = (tb - ta).abs() * radius;
                let mut m = [[0.0; 3]; 3];
                for &(s, w) in &gauss {
                    let sh = p2::edge_shape(s);
                    for a in 0..3 {
                        for b in 0..3 {
                            m[a][b] += w * len * sh[a] * sh[b];
                        }
                    }
                }
                for a in 0..3 {
                    for b in 0..3 {
                        let v = -beta * (m[a][b] / media.eps_d);
                        trip.entries.push((outer.dofs[idx[a]], outer.dofs[idx[b]], v));
                    }
                }
            }
        }
    }
    let matrix = trip.into_matrix(dofs.n_dofs)?;
    let mut sys = LinearSystem { matrix, rhs: vec![C64::new(0.0, 0.0); dofs.n_dofs], dofs, outer, boundary: problem.boundary, dtn };
    if let Some(alpha) = incidence {
        sys.rhs = incident_rhs(&sys, media, alpha)?;
    }
    Ok(sys)
}

/// `ℓ(φ_i) = ∫ ε_d⁻¹ g_inc φ_i dσ` for plane-wave incidence.
pub fn incident_rhs(sys: &LinearSystem, media: &Media, alpha: f64) -> Result<Vec<C64>> {
    let radius = sys.outer.radius;
    let k = media.k();
    let mut rhs = vec![C64::new(0.0, 0.0); sys.dofs.n_dofs];
    match sys.boundary {
        BoundaryMode::Dtn { n_f } => {
            let inc = incident_trace(alpha, k, radius, n_f)?;
            let nw = 2 * n_f + 1;
            let g: Vec<C64> = (0..nw).map(|c| inc.du[c] - sys.dtn[c] * inc.u[c]).collect();
            for (b, &dof) in sys.outer.dofs.iter().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for c in 0..nw {
                    s += g[c] * sys.outer.weights[b][c].conj();
                }
                rhs[dof] += s * (radius / media.eps_d);
            }
        }
        BoundaryMode::Abc => {
            let beta = C64::new(-0.5 / radius, k);
            let gauss = p2::gauss_01(EDGE_GAUSS);
            for (idx, ta, tb) in &sys.outer.edges {
                let len = (tb - ta).abs() * radius;
                for &(s, w) in &gauss {
                    let th = ta + s * (tb - ta);
                    let cosd = (th - alpha).cos();
                    let ui = C64::from_polar(1.0, k * radius * cosd);
                    let g = ui * C64::new(0.0, k * cosd) - beta * ui;
                    let sh = p2::edge_shape(s);
                    for a in 0..3 {
                        rhs[sys.outer.dofs[idx[a]]] += g * (w * len * sh[a] / media.eps_d);
                    }
                }
            }
        }
    }
    Ok(rhs)
}

/// Radial cutoff `ζ` of the dual problem: 1 for `r ≤ inner·ρ`, 0 for
/// `r ≥ outer·ρ`, joined by the quintic smoothstep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { inner: 0.6, outer: 0.9 }
    }
}

impl Cutoff {
    /// `(ζ, ζ_z, ζ_zz)` at `z = ln r` for a hole of radius `rho`.
    pub fn eval_z(&self, z: f64, rho: f64) -> (f64, f64, f64) {
        let r = z.exp();
        let (a, b) = (self.inner * rho, self.outer * rho);
        if r <= a {
            return (1.0, 0.0, 0.0);
        }
        if r >= b {
            return (0.0, 0.0, 0.0);
        }
        let w = b - a;
        let t = (r - a) / w;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
        let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
        // ζ = 1 − S(r), ζ_z = r ζ_r, ζ_zz = r ζ_r + r² ζ_rr
        (1.0 - s, -r * ds, -r * ds - r * r * dds)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.inner < self.outer && self.outer < 1.0) {
            return Err(Error::Config(format!(
                "cutoff radii {}ρ and {}ρ must satisfy 0 < inner < outer < 1",
                self.inner, self.outer
            )));
        }
        Ok(())
    }
}

/// Volume source `L(ζ s_in)` of the dual problem for corner `corner`,
/// integrated against the basis functions of its strip. The incoming
/// singularity is continued analytically into the stretched region.
pub fn dual_rhs(problem: &Problem, sys: &LinearSystem, corner: usize, out: &OutgoingMode, cutoff: Cutoff) -> Result<Vec<C64>> {
    cutoff.validate()?;
    let strip = problem.mesh.strips.get(corner).ok_or_else(|| Error::Validation(format!("no strip {corner}")))?;
    let spec = &problem.pml[corner];
    if cutoff.outer * spec.rho <= (spec.z_onset()).exp() {
        return Err(Error::Config("cutoff transition reaches into the stretched region".into()));
    }
    let media = &problem.media;
    let lambda_in = -out.lambda;
    let mode: &ModeFunction = &out.mode;
    let k0sq = media.k0 * media.k0;
    let mut rhs = vec![C64::new(0.0, 0.0); sys.dofs.n_dofs];
    for (e, el) in strip.elements.iter().enumerate() {
        let reg = strip.regions[e];
        let inv = media.eps(reg).inv();
        let mu = media.mu(reg);
        let coords = strip.element_coords(e);
        let mut local = [C64::new(0.0, 0.0); 6];
        for (q, w) in p2::quadrature() {
            let x = p2::map(&coords, q[0], q[1]);
            let (z, th) = (x[0], x[1]);
            let (zeta, dz, ddz) = cutoff.eval_z(z, spec.rho);
            if zeta == 0.0 {
                continue;
            }
            let (_, _, m) = stretched_coeffs(z, spec)?;
            let s = (lambda_in * spec.stretched_z(z)).exp() * mode.value(th);
            let mut f = s * m * (k0sq * mu * zeta);
            if dz != 0.0 || ddz != 0.0 {
                f += inv * (s * ddz + lambda_in * s * (2.0 * dz));
            }
            let det = p2::det(&p2::jacobian(&coords, q[0], q[1]));
            let n = p2::shape(q[0], q[1]);
            for i in 0..6 {
                local[i] += f * (w * det * n[i]);
            }
        }
        for i in 0..6 {
            rhs[sys.dofs.strips[corner][el[i]]] += local[i];
        }
    }
    Ok(rhs)
}

/// Sparse LU factors of a system matrix, reusable across right-hand sides.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
}

/// Nodal values with the a-posteriori residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<C64>,
    pub residual: f64,
}

/// `‖A x − b‖ / ‖b‖`.
pub fn relative_residual(a: &SparseColMat<usize, C64>, x: &[C64], b: &[C64]) -> f64 {
    let ax = matvec(a, x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn matvec(a: &SparseColMat<usize, C64>, x: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.nrows()];
    let sym = a.symbolic();
    let vals = a.val();
    for j in 0..a.ncols() {
        let range = sym.col_range(j);
        for (k, &i) in sym.row_idx()[range.clone()].iter().enumerate() {
            out[i] += vals[range.start + k] * x[j];
        }
    }
    out
}

impl Factorization {
    pub fn new(a: &SparseColMat<usize, C64>) -> Result<Self> {
        let lu = a.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { lu })
    }

    /// Solves and checks the residual; non-finite output is reported as
    /// a singular factorization.
    pub fn solve(&self, a: &SparseColMat<usize, C64>, b: &[C64]) -> Result<Solution> {
        let mut x = faer::Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        let values: Vec<C64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Solver("factorization produced non-finite values (singular pivot)".into()));
        }
        let residual = relative_residual(a, &values, b);
        Ok(Solution { values, residual })
    }
}

/// One-shot factorization and solve.
pub fn solve(sys: &LinearSystem) -> Result<Solution> {
    Factorization::new(&sys.matrix)?.solve(&sys.matrix, &sys.rhs)
}

#[cfg(test)]
mod tests;
