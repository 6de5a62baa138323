//! Structured meshes of the unfolded corner neighbourhoods
//! `(ln ρ − L, ln ρ) × (−π, π)`.

use super::{BoundaryEdge, BoundaryTag, Mesh, Region};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Distribution of the grid lines in `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZGrading {
    /// Constant step `aspect · Δθ` in each of the two parts.
    Uniform { aspect: f64 },
    /// Steps growing geometrically away from `z = ln ρ`, starting at
    /// `first_aspect · Δθ` and capped at `max_step`; the stretched part
    /// uses the last physical step.
    Graded { first_aspect: f64, growth: f64, max_step: f64 },
}

impl Default for ZGrading {
    fn default() -> Self {
        ZGrading::Uniform { aspect: 1.0 }
    }
}

/// Grid of one strip. The onset `ln ρ − L₀` of the stretch is a grid line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripLayout {
    pub phi: f64,
    pub rho: f64,
    pub l: f64,
    pub l0: f64,
    pub m_theta: usize,
    /// Ascending, from `ln ρ − L` to `ln ρ`.
    pub z_lines: Vec<f64>,
}

/// Whether `θ = ±φ/2` fall on the grid `−π + 2πj/M`.
fn is_compatible(phi: f64, m: usize) -> bool {
    let j = m as f64 * (PI - 0.5 * phi) / (2.0 * PI);
    m >= 4 && (j - j.round()).abs() < 1e-9 * m as f64 && j.round() >= 1.0
}

/// Smallest `M ≥ min` for which the interface angles are grid lines.
pub fn compatible_m_theta(phi: f64, min: usize) -> Result<usize> {
    if !(phi > 0.0 && phi < 2.0 * PI) {
        return Err(Error::Domain(format!("aperture {phi} outside (0, 2π)")));
    }
    (min.max(4)..min.max(4) + 100_000)
        .find(|&m| is_compatible(phi, m))
        .ok_or_else(|| Error::Mesh(format!("no θ-grid up to {} contains ±φ/2 for φ = {phi}", min + 100_000)))
}

impl StripLayout {
    pub fn new(phi: f64, rho: f64, l: f64, l0: f64, m_theta: usize, grading: ZGrading) -> Result<Self> {
        if !(rho > 0.0 && l0 > 0.0 && l >= l0 && l.is_finite()) {
            return Err(Error::Mesh(format!("invalid strip extent ρ = {rho}, L₀ = {l0}, L = {l}")));
        }
        if !is_compatible(phi, m_theta) {
            let hint = compatible_m_theta(phi, m_theta).map(|m| format!("; try M = {m}")).unwrap_or_default();
            return Err(Error::Mesh(format!("M = {m_theta} does not place ±φ/2 on the θ-grid{hint}")));
        }
        let dtheta = 2.0 * PI / m_theta as f64;
        let zr = rho.ln();
        // steps measured downwards from ln ρ
        let (phys, pml_step): (Vec<f64>, f64) = match grading {
            ZGrading::Uniform { aspect } => {
                if !(aspect > 0.0) {
                    return Err(Error::Mesh("aspect ratio must be positive".into()));
                }
                let dz = aspect * dtheta;
                let n = (l0 / dz).ceil().max(1.0) as usize;
                (vec![l0 / n as f64; n], dz)
            }
            ZGrading::Graded { first_aspect, growth, max_step } => {
                if !(first_aspect > 0.0 && growth >= 1.0 && max_step > 0.0) {
                    return Err(Error::Mesh("invalid graded z-steps".into()));
                }
                let mut steps = Vec::new();
                let mut acc = 0.0;
                let mut s = (first_aspect * dtheta).min(max_step);
                while acc < l0 * (1.0 - 1e-12) {
                    steps.push(s);
                    acc += s;
                    s = (s * growth).min(max_step);
                }
                let scale = l0 / acc;
                let last = *steps.last().unwrap() * scale;
                (steps.into_iter().map(|s| s * scale).collect(), last)
            }
        };
        let n_pml = if l > l0 { ((l - l0) / pml_step).ceil().max(1.0) as usize } else { 0 };
        let z0 = zr - l0;
        let mut z_lines = Vec::with_capacity(phys.len() + n_pml + 1);
        for k in 0..n_pml {
            z_lines.push(zr - l + (l - l0) * k as f64 / n_pml as f64);
        }
        z_lines.push(z0);
        let mut acc = 0.0;
        let mut upper = Vec::with_capacity(phys.len());
        for (k, s) in phys.iter().enumerate().rev() {
            acc += s;
            upper.push(if k == 0 { zr } else { z0 + acc });
        }
        z_lines.extend(upper);
        Ok(Self { phi, rho, l, l0, m_theta, z_lines })
    }

    pub fn n_z(&self) -> usize {
        self.z_lines.len() - 1
    }

    pub fn z_right(&self) -> f64 {
        *self.z_lines.last().unwrap()
    }

    pub fn z_onset(&self) -> f64 {
        self.rho.ln() - self.l0
    }

    /// Angle of the `c`-th node (vertex or midpoint) of a `2M + 1` column grid.
    pub fn ring_theta(&self, c: usize) -> f64 {
        if c == 2 * self.m_theta {
            PI
        } else {
            -PI + c as f64 * PI / self.m_theta as f64
        }
    }

    /// Layout of the uniformly refined strip.
    pub fn refined(&self) -> Self {
        let mut z = Vec::with_capacity(2 * self.z_lines.len());
        for w in self.z_lines.windows(2) {
            z.push(w[0]);
            z.push(0.5 * (w[0] + w[1]));
        }
        z.push(self.z_right());
        Self { z_lines: z, m_theta: 2 * self.m_theta, ..self.clone() }
    }
}

/// Rectangles split along the `(z, θ)` diagonal, with P2 midpoints,
/// periodic pairs on `θ = ±π` and the right-end table.
pub fn build_strip_mesh(layout: &StripLayout) -> Result<Mesh> {
    let m = layout.m_theta;
    if !is_compatible(layout.phi, m) {
        return Err(Error::Mesh(format!("M = {m} incompatible with φ = {}", layout.phi)));
    }
    let nz = layout.n_z();
    if nz == 0 || layout.z_lines.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Mesh("z-grid must be strictly increasing".into()));
    }
    let cols = 2 * m + 1;
    let rows = 2 * nz + 1;
    let id = |r: usize, c: usize| r * cols + c;
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let z = if r % 2 == 0 {
            layout.z_lines[r / 2]
        } else {
            0.5 * (layout.z_lines[r / 2] + layout.z_lines[r / 2 + 1])
        };
        for c in 0..cols {
            nodes.push([z, layout.ring_theta(c)]);
        }
    }
    let half = 0.5 * layout.phi;
    let mut elements = Vec::with_capacity(2 * nz * m);
    let mut regions = Vec::with_capacity(2 * nz * m);
    for i in 0..nz {
        let (r0, r1, rm) = (2 * i, 2 * i + 2, 2 * i + 1);
        for j in 0..m {
            let (c0, c1, cm) = (2 * j, 2 * j + 2, 2 * j + 1);
            let theta_c = layout.ring_theta(cm);
            let region = if theta_c.abs() < half { Region::Metal } else { Region::Dielectric };
            elements.push([id(r0, c0), id(r1, c0), id(r1, c1), id(rm, c0), id(r1, cm), id(rm, cm)]);
            elements.push([id(r0, c0), id(r1, c1), id(r0, c1), id(rm, cm), id(rm, c1), id(r0, cm)]);
            regions.push(region);
            regions.push(region);
        }
    }
    let mut boundary = Vec::new();
    for j in 0..m {
        let (c0, c1, cm) = (2 * j, 2 * j + 2, 2 * j + 1);
        boundary.push(BoundaryEdge { nodes: [id(0, c1), id(0, c0), id(0, cm)], tag: BoundaryTag::StripLeft });
        boundary.push(BoundaryEdge { nodes: [id(rows - 1, c0), id(rows - 1, c1), id(rows - 1, cm)], tag: BoundaryTag::StripRight });
    }
    for i in 0..nz {
        let (r0, r1, rm) = (2 * i, 2 * i + 2, 2 * i + 1);
        boundary.push(BoundaryEdge { nodes: [id(r0, 0), id(r1, 0), id(rm, 0)], tag: BoundaryTag::Periodic });
        boundary.push(BoundaryEdge { nodes: [id(r1, 2 * m), id(r0, 2 * m), id(rm, 2 * m)], tag: BoundaryTag::Periodic });
    }
    let periodic = (0..rows).map(|r| (id(r, 2 * m), id(r, 0))).collect();
    let ring = (0..2 * m).map(|c| id(rows - 1, c)).collect();
    Ok(Mesh { nodes, elements, regions, boundary, periodic, rings: vec![ring], strip: Some(layout.clone()) })
}
