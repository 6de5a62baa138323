//! Energy fluxes, black-hole coefficients and field sampling.

use crate::assembly::{incident_trace, LinearSystem, Media, Problem};
use crate::corner_modes::OutgoingMode;
use crate::error::{Error, Result};
use crate::mesh::{p2, Mesh, Region, SplitMesh};
use crate::pml::PmlSpec;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Net energy flux `Im ∫ ε_d⁻¹ ∂_r u ū dσ` through the outer circle,
/// with `∂_r u` given by the exact outgoing map applied to the scattered
/// part. With the first-order boundary condition the same spectral
/// formula serves as a surrogate.
pub fn exterior_flux(sys: &LinearSystem, media: &Media, u: &[C64], alpha_inc: f64) -> Result<f64> {
    if u.len() != sys.dofs.n_dofs {
        return Err(Error::Validation(format!("solution has {} values for {} unknowns", u.len(), sys.dofs.n_dofs)));
    }
    let outer = &sys.outer;
    if outer.dofs.is_empty() {
        return Err(Error::Validation("no outer boundary trace".into()));
    }
    let inc = incident_trace(alpha_inc, media.k(), outer.radius, outer.n_f)?;
    let un = outer.coefficients(u);
    let mut s = C64::new(0.0, 0.0);
    for n in 0..un.len() {
        let du = sys.dtn[n] * (un[n] - inc.u[n]) + inc.du[n];
        s += du * un[n].conj();
    }
    Ok((s * (outer.radius / media.eps_d)).im)
}

/// Per-corner quantities needed for extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerMode {
    pub out: OutgoingMode,
    /// `∫ ε⁻¹ Φ² dθ`.
    pub weight: f64,
}

impl CornerMode {
    pub fn new(out: OutgoingMode, media: &Media) -> Result<Self> {
        let kappa = media.kappa();
        if kappa.im != 0.0 {
            return Err(Error::Domain("coefficient extraction needs a real contrast".into()));
        }
        let weight = out.mode.flux_integral(kappa.re, media.eps_d);
        if weight == 0.0 || !weight.is_finite() {
            return Err(Error::Domain("vanishing mode normalisation".into()));
        }
        Ok(Self { out, weight })
    }

    pub fn eta(&self) -> f64 {
        self.out.mode.eta
    }
}

/// Coefficient from the projection of the strip trace at depth `z_eval`
/// onto the outgoing mode. The depth is moved to the nearest grid line;
/// the snapped depth is returned with the coefficient.
pub fn extract_coefficient_overlap(
    strip: &Mesh,
    dofs: &[usize],
    u: &[C64],
    media: &Media,
    spec: &PmlSpec,
    mode: &CornerMode,
    z_eval: f64,
) -> Result<(C64, f64)> {
    let lay = strip.strip.as_ref().ok_or_else(|| Error::Mesh("overlap extraction needs a strip mesh".into()))?;
    if !(z_eval > spec.z_onset() && z_eval <= spec.z_right()) {
        return Err(Error::Validation(format!(
            "evaluation depth {z_eval} outside the physical strip ({}, {}]",
            spec.z_onset(),
            spec.z_right()
        )));
    }
    let line = lay
        .z_lines
        .iter()
        .enumerate()
        .filter(|(_, &z)| z > spec.z_onset())
        .min_by(|a, b| (a.1 - z_eval).abs().total_cmp(&(b.1 - z_eval).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Mesh("no grid line in the physical strip".into()))?;
    let z = lay.z_lines[line];
    let m = lay.m_theta;
    let cols = 2 * m + 1;
    let row = 2 * line;
    let gauss = p2::gauss_01(8);
    let inv_d = 1.0 / media.eps_d;
    let inv_m = media.eps_m.inv();
    let profile = &mode.out.mode;
    let (mut num, mut den) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for j in 0..m {
        let ids = [row * cols + 2 * j, row * cols + 2 * j + 2, row * cols + 2 * j + 1];
        let cs = [2 * j, 2 * j + 2, 2 * j + 1];
        let (ta, tb) = (lay.ring_theta(2 * j), lay.ring_theta(2 * j + 2));
        let inv = if lay.ring_theta(2 * j + 1).abs() < 0.5 * lay.phi { inv_m } else { C64::new(inv_d, 0.0) };
        for &(s, w) in &gauss {
            let th = ta + s * (tb - ta);
            let sh = p2::edge_shape(s);
            let v: C64 = (0..3).map(|k| u[dofs[ids[k]]] * sh[k]).sum();
            let interp: f64 = (0..3).map(|k| profile.value(lay.ring_theta(cs[k])) * sh[k]).sum();
            let wt = inv * (w * (tb - ta) * profile.value(th));
            num += wt * v;
            den += wt * interp;
        }
    }
    if den.norm() == 0.0 {
        return Err(Error::Domain("mode profile vanishes on the strip grid".into()));
    }
    // normalising by the interpolated profile makes the projection exact
    // on discrete multiples of the mode
    Ok(((-mode.out.lambda * z).exp() * num / den, z))
}

/// Coefficient by the reciprocity formula `ℓ_inc(𝔰) / (2 λ_out ∫ ε⁻¹ Φ²)`,
/// where `rhs_inc` is the assembled incident load and `dual` the
/// solution of the dual problem.
pub fn extract_coefficient_dual(rhs_inc: &[C64], dual: &[C64], mode: &CornerMode) -> Result<C64> {
    if rhs_inc.len() != dual.len() {
        return Err(Error::Validation("load and dual solution lengths differ".into()));
    }
    let s: C64 = rhs_inc.iter().zip(dual).map(|(a, b)| a * b).sum();
    Ok(s / (2.0 * mode.out.lambda * mode.weight))
}

/// `J = −η |b|² |∫ ε⁻¹ Φ² dθ|`.
pub fn corner_flux(b: C64, eta: f64, weight: f64) -> f64 {
    -eta * b.norm_sqr() * weight.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerEnergy {
    /// Coefficient used for `j`.
    pub b: C64,
    /// Overlap estimate, when computed alongside another method.
    #[serde(default)]
    pub b_overlap: Option<C64>,
    pub eta: f64,
    pub flux_integral: f64,
    pub j: f64,
}

/// Energy bookkeeping of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub alpha_inc: f64,
    pub j_ext: f64,
    pub corners: Vec<CornerEnergy>,
    /// `|J_ext − Σ J_n| / max(|J_ext|, floor)`.
    pub mismatch: f64,
    pub metadata: BTreeMap<String, String>,
}

impl EnergyReport {
    /// `floor = 1e−14 · k₀ · ‖u_inc‖²` with the norm taken on the outer circle.
    pub fn new(alpha_inc: f64, j_ext: f64, coeffs: &[(C64, CornerMode)], media: &Media, radius: f64) -> Self {
        let corners: Vec<CornerEnergy> = coeffs
            .iter()
            .map(|(b, m)| CornerEnergy { b: *b, b_overlap: None, eta: m.eta(), flux_integral: m.weight, j: corner_flux(*b, m.eta(), m.weight) })
            .collect();
        let sum: f64 = corners.iter().map(|c| c.j).sum();
        let floor = 1e-14 * media.k0 * 2.0 * PI * radius;
        let mismatch = (j_ext - sum).abs() / j_ext.abs().max(floor);
        Self { alpha_inc, j_ext, corners, mismatch, metadata: BTreeMap::new() }
    }

    pub fn corner_sum(&self) -> f64 {
        self.corners.iter().map(|c| c.j).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Validation(e.to_string()))
    }

    /// `alpha_inc,j_ext,j_1,…` header for [`csv_row`](Self::csv_row).
    pub fn csv_header(n_corners: usize) -> String {
        let mut h = String::from("alpha_inc,j_ext");
        for n in 1..=n_corners {
            h.push_str(&format!(",j_{n}"));
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut r = format!("{:.12e},{:.12e}", self.alpha_inc, self.j_ext);
        for c in &self.corners {
            r.push_str(&format!(",{:.12e}", c.j));
        }
        r
    }
}

/// Status of a sampled point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFlag {
    Physical,
    /// Inside a hole at a depth covered by the stretched layer.
    Layer,
    Outside,
}

/// Point evaluation of a solution on the glued mesh.
pub struct FieldSampler<'a> {
    mesh: &'a SplitMesh,
    pml: &'a [PmlSpec],
    disk_dofs: &'a [usize],
    strip_dofs: &'a [Vec<usize>],
    u: &'a [C64],
    radius: f64,
    origin: [f64; 2],
    cell: f64,
    n_cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> FieldSampler<'a> {
    pub fn new(problem: &'a Problem, sys: &'a LinearSystem, u: &'a [C64]) -> Result<Self> {
        if u.len() != sys.dofs.n_dofs {
            return Err(Error::Validation("solution length does not match the system".into()));
        }
        let mesh = &problem.mesh;
        let radius = problem.outer_radius;
        let n_cells = ((mesh.disk.num_elements() as f64).sqrt().ceil() as usize).max(1);
        let origin = [-radius * 1.001, -radius * 1.001];
        let cell = 2.002 * radius / n_cells as f64;
        let mut buckets = vec![Vec::new(); n_cells * n_cells];
        for e in 0..mesh.disk.num_elements() {
            let c = mesh.disk.element_coords(e);
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for p in &c {
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
            // curved edges bulge at most a fraction of the element size
            let pad = 0.1 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let idx = |v: f64, d: usize| (((v - origin[d]) / cell).floor().max(0.0) as usize).min(n_cells - 1);
            for i in idx(lo[0] - pad, 0)..=idx(hi[0] + pad, 0) {
                for j in idx(lo[1] - pad, 1)..=idx(hi[1] + pad, 1) {
                    buckets[j * n_cells + i].push(e);
                }
            }
        }
        Ok(Self {
            mesh,
            pml: &problem.pml,
            disk_dofs: &sys.dofs.disk,
            strip_dofs: &sys.dofs.strips,
            u,
            radius,
            origin,
            cell,
            n_cells,
            buckets,
        })
    }

    fn eval_element(&self, mesh: &Mesh, dofs: &[usize], e: usize, r: [f64; 2]) -> C64 {
        let n = p2::shape(r[0], r[1]);
        mesh.elements[e].iter().zip(n).map(|(&v, s)| self.u[dofs[v]] * s).sum()
    }

    fn disk_value(&self, p: [f64; 2]) -> Option<C64> {
        let i = ((p[0] - self.origin[0]) / self.cell).floor();
        let j = ((p[1] - self.origin[1]) / self.cell).floor();
        if i < 0.0 || j < 0.0 || i >= self.n_cells as f64 || j >= self.n_cells as f64 {
            return None;
        }
        let bucket = &self.buckets[j as usize * self.n_cells + i as usize];
        let mut best: Option<(f64, usize, [f64; 2])> = None;
        for &e in bucket {
            let c = self.mesh.disk.element_coords(e);
            if let Some(r) = p2::inverse_map(&c, p) {
                let excess = (-r[0]).max(-r[1]).max(r[0] + r[1] - 1.0);
                if excess <= 1e-9 {
                    return Some(self.eval_element(&self.mesh.disk, self.disk_dofs, e, r));
                }
                if best.map_or(true, |b| excess < b.0) {
                    best = Some((excess, e, r));
                }
            }
        }
        // tolerate points just outside a curved boundary edge
        best.filter(|b| b.0 < 1e-6).map(|(_, e, r)| self.eval_element(&self.mesh.disk, self.disk_dofs, e, r))
    }

    /// Value of the strip field at `(z, θ)` in strip `n`.
    pub fn strip_value(&self, n: usize, z: f64, theta: f64) -> Option<C64> {
        let strip = &self.mesh.strips[n];
        let lay = strip.strip.as_ref()?;
        let zl = &lay.z_lines;
        if z < zl[0] || z > *zl.last()? {
            return None;
        }
        let i = zl.partition_point(|&v| v <= z).clamp(1, zl.len() - 1) - 1;
        let m = lay.m_theta;
        let dt = 2.0 * PI / m as f64;
        let j = (((theta + PI) / dt).floor().max(0.0) as usize).min(m - 1);
        for e in [2 * (i * m + j), 2 * (i * m + j) + 1] {
            let c = strip.element_coords(e);
            if let Some(r) = p2::inverse_map(&c, [z, theta]) {
                if p2::inside_reference(r, 1e-9) {
                    return Some(self.eval_element(strip, &self.strip_dofs[n], e, r));
                }
            }
        }
        None
    }

    /// Field value at a physical point with its status flag.
    pub fn eval(&self, p: [f64; 2]) -> (C64, SampleFlag) {
        let zero = C64::new(0.0, 0.0);
        if p[0].hypot(p[1]) > self.radius {
            return (zero, SampleFlag::Outside);
        }
        for (n, corner) in self.mesh.corners.iter().enumerate() {
            let (r, th) = corner.to_local(p);
            if r < corner.rho {
                if r == 0.0 {
                    return (zero, SampleFlag::Layer);
                }
                let z = r.ln();
                let spec = &self.pml[n];
                return match self.strip_value(n, z, th) {
                    Some(v) if z > spec.z_onset() => (v, SampleFlag::Physical),
                    Some(v) => (v, SampleFlag::Layer),
                    None => (zero, SampleFlag::Layer),
                };
            }
        }
        match self.disk_value(p) {
            Some(v) => (v, SampleFlag::Physical),
            None => (zero, SampleFlag::Outside),
        }
    }
}

/// Field sampled on a square grid covering the outer disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `values[j * xs.len() + i]` at `(xs[i], ys[j])`.
    pub values: Vec<C64>,
    pub flags: Vec<SampleFlag>,
}

impl SampledField {
    /// `‖self − other‖ / ‖self‖` over points physical in both.
    pub fn relative_difference(&self, other: &SampledField) -> Result<f64> {
        if self.xs != other.xs || self.ys != other.ys {
            return Err(Error::Validation("sampling grids differ".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.values.len() {
            if self.flags[k] == SampleFlag::Physical && other.flags[k] == SampleFlag::Physical {
                num += (self.values[k] - other.values[k]).norm_sqr();
                den += self.values[k].norm_sqr();
            }
        }
        Ok((num / den).sqrt())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,re,im,flag\n");
        for (j, &y) in self.ys.iter().enumerate() {
            for (i, &x) in self.xs.iter().enumerate() {
                let k = j * self.xs.len() + i;
                let flag = match self.flags[k] {
                    SampleFlag::Physical => "physical",
                    SampleFlag::Layer => "layer",
                    SampleFlag::Outside => "outside",
                };
                s.push_str(&format!("{x:.10e},{y:.10e},{:.12e},{:.12e},{flag}\n", self.values[k].re, self.values[k].im));
            }
        }
        s
    }
}

/// Samples the solution at `n × n` points spread uniformly over `[−R, R]²`.
pub fn reconstruct_field(problem: &Problem, sys: &LinearSystem, u: &[C64], n: usize) -> Result<SampledField> {
    if n < 2 {
        return Err(Error::Validation("sampling grid needs at least 2 points per side".into()));
    }
    let sampler = FieldSampler::new(problem, sys, u)?;
    let r = problem.outer_radius;
    let xs: Vec<f64> = (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect();
    let ys = xs.clone();
    let mut values = Vec::with_capacity(n * n);
    let mut flags = Vec::with_capacity(n * n);
    for &y in &ys {
        for &x in &xs {
            let (v, f) = sampler.eval([x, y]);
            values.push(v);
            flags.push(f);
        }
    }
    Ok(SampledField { xs, ys, values, flags })
}

/// Values at the disk nodes lying on metal/dielectric edges, in node order.
pub fn interface_trace(mesh: &Mesh, dofs: &[usize], u: &[C64]) -> Vec<([f64; 2], C64)> {
    mesh.interface_nodes().into_iter().map(|v| (mesh.nodes[v], u[dofs[v]])).collect()
}

/// Regions present in a mesh, for report statistics.
pub fn region_counts(mesh: &Mesh) -> (usize, usize) {
    let metal = mesh.regions.iter().filter(|r| **r == Region::Metal).count();
    (mesh.regions.len() - metal, metal)
}

#[cfg(test)]
mod tests;
