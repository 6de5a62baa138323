//! Perforated disk around the inclusion.

use super::{edge_key, polygon_side, BoundaryEdge, BoundaryTag, Mesh, Region, Side};
use crate::corner_modes::{wrap_angle, CornerSpec};
use crate::error::{Error, Result};
use crate::mesh::strip::compatible_m_theta;
use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Hole cut around polygon vertex `vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleDecl {
    pub vertex: usize,
    pub rho: f64,
    /// Number of θ-intervals of the hole polygon and of the strip.
    pub m_theta: usize,
}

/// Outer disk, inclusion polygon and holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub outer_radius: f64,
    /// Counterclockwise inclusion vertices; empty for a homogeneous disk.
    pub polygon: Vec<[f64; 2]>,
    pub holes: Vec<HoleDecl>,
    /// Segment length along the interface relative to `h`.
    pub interface_factor: f64,
}

impl SceneGeometry {
    pub fn homogeneous(outer_radius: f64) -> Self {
        Self { outer_radius, polygon: Vec::new(), holes: Vec::new(), interface_factor: 0.25 }
    }

    /// Isosceles triangle with apex angle π/6 pointing up and base angles
    /// 5π/12, inscribed in a circle of radius `circumradius` centred at the
    /// origin, with a hole of radius `rho` at every vertex.
    pub fn sharp_triangle(circumradius: f64, outer_radius: f64, rho: f64) -> Self {
        let at = |deg: f64| {
            let a = deg.to_radians();
            [circumradius * a.cos(), circumradius * a.sin()]
        };
        Self {
            outer_radius,
            polygon: vec![at(90.0), at(240.0), at(300.0)],
            holes: (0..3).map(|vertex| HoleDecl { vertex, rho, m_theta: 0 }).collect(),
            interface_factor: 0.25,
        }
    }

    /// Interior angle and metal-side bisector at polygon vertex `i`.
    pub fn vertex_angle(&self, i: usize) -> (f64, f64) {
        let n = self.polygon.len();
        let v = self.polygon[i];
        let next = self.polygon[(i + 1) % n];
        let prev = self.polygon[(i + n - 1) % n];
        let a1 = (next[1] - v[1]).atan2(next[0] - v[0]);
        let a2 = (prev[1] - v[1]).atan2(prev[0] - v[0]);
        let phi = (a2 - a1).rem_euclid(2.0 * PI);
        (phi, wrap_angle(a1 + 0.5 * phi))
    }

    pub fn corner(&self, n: usize) -> CornerSpec {
        let h = self.holes[n];
        let (aperture, bisector) = self.vertex_angle(h.vertex);
        CornerSpec { vertex: self.polygon[h.vertex], aperture, bisector, rho: h.rho }
    }

    pub fn corners(&self) -> Vec<CornerSpec> {
        (0..self.holes.len()).map(|n| self.corner(n)).collect()
    }

    /// Fills every unset `m_theta` with the smallest compatible value
    /// `≥ max(16, ⌈2πρ/(interface_factor · h)⌉)`.
    pub fn with_default_rings(mut self, h: f64) -> Result<Self> {
        for n in 0..self.holes.len() {
            if self.holes[n].m_theta == 0 {
                let (phi, _) = self.vertex_angle(self.holes[n].vertex);
                let target = (2.0 * PI * self.holes[n].rho / (self.interface_factor * h)).ceil() as usize;
                self.holes[n].m_theta = compatible_m_theta(phi, target.max(16))?;
            }
        }
        Ok(self)
    }

    /// Same geometry with ring counts doubled, matching one uniform refinement.
    pub fn refined(&self) -> Self {
        let mut g = self.clone();
        for h in &mut g.holes {
            h.m_theta *= 2;
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Mesh(m));
        if !(self.outer_radius > 0.0) {
            return bad("outer radius must be positive".into());
        }
        if !(self.interface_factor > 0.0 && self.interface_factor <= 1.0) {
            return bad("interface factor must lie in (0, 1]".into());
        }
        let n = self.polygon.len();
        if n != 0 && n < 3 {
            return bad("the inclusion polygon needs at least three vertices".into());
        }
        let signed: f64 = (0..n)
            .map(|i| {
                let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        if n >= 3 && signed <= 0.0 {
            return bad("the inclusion polygon must be counterclockwise".into());
        }
        for (i, v) in self.polygon.iter().enumerate() {
            if v[0].hypot(v[1]) >= self.outer_radius {
                return bad(format!("polygon vertex {i} lies outside the disk"));
            }
        }
        for (k, h) in self.holes.iter().enumerate() {
            if h.vertex >= n {
                return bad(format!("hole {k} refers to missing vertex {}", h.vertex));
            }
            if !(h.rho > 0.0) {
                return bad(format!("hole {k} has nonpositive radius"));
            }
            let c = self.polygon[h.vertex];
            if c[0].hypot(c[1]) + h.rho >= self.outer_radius {
                return bad(format!("hole {k} reaches the outer boundary"));
            }
            for i in 0..n {
                let touches = i == h.vertex || (i + 1) % n == h.vertex;
                let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
                let d = super::segment_distance(a, b, c);
                if !touches && d <= h.rho {
                    return bad(format!("hole {k} intersects polygon edge {i}"));
                }
                if touches {
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    if h.rho >= 0.5 * len {
                        return bad(format!("hole {k} covers half of polygon edge {i}"));
                    }
                }
            }
            for (l, g) in self.holes.iter().enumerate().skip(k + 1) {
                let d = self.polygon[g.vertex];
                if (c[0] - d[0]).hypot(c[1] - d[1]) <= h.rho + g.rho || g.vertex == h.vertex {
                    return bad(format!("holes {k} and {l} overlap"));
                }
            }
        }
        Ok(())
    }
}

/// Growth rate of the interface segment lengths away from the holes.
const GRADING: f64 = 0.3;

struct Builder {
    pts: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
}

impl Builder {
    fn push(&mut self, p: [f64; 2]) -> usize {
        self.pts.push(p);
        self.pts.len() - 1
    }

    /// Chain of constraint segments between two existing points whose
    /// lengths grow from `sa` and `sb` at the ends to at most `h`.
    fn segment(&mut self, a: usize, b: usize, h: f64, sa: f64, sb: f64) {
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let size = |t: f64| h.min(sa + GRADING * t).min(sb + GRADING * (len - t));
        // march with the local size, then rescale the cuts to end exactly at b
        let mut cuts = vec![0.0];
        let mut t = 0.0;
        while t < len {
            t += size(t);
            cuts.push(t);
        }
        let k = if cuts.len() > 2 && (t - len) > 0.5 * size(len) { cuts.len() - 2 } else { cuts.len() - 1 };
        let total = cuts[k];
        let mut prev = a;
        for c in &cuts[1..k] {
            let s = c / total;
            let id = self.push([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
            self.edges.push([prev, id]);
            prev = id;
        }
        self.edges.push([prev, b]);
    }
}

/// Constrained Delaunay mesh of the disk minus the hole polygons, refined
/// to a 25° angle bound and area `√3 h²/4`, then lifted to P2 with
/// boundary midpoints placed on the circles.
pub fn build_disk_mesh(geom: &SceneGeometry, h: f64) -> Result<Mesh> {
    geom.validate()?;
    if !(h > 0.0 && h < geom.outer_radius) {
        return Err(Error::Mesh(format!("mesh size {h} must lie in (0, R)")));
    }
    if geom.holes.iter().any(|d| d.m_theta == 0) {
        return Err(Error::Mesh("hole ring counts unset (see with_default_rings)".into()));
    }
    let r_out = geom.outer_radius;
    let n_out = 64.max((2.0 * PI * r_out / h).ceil() as usize);
    let mut b = Builder { pts: Vec::new(), edges: Vec::new() };
    let outer_ang = |j: usize| 2.0 * PI * j as f64 / n_out as f64;
    for j in 0..n_out {
        let a = outer_ang(j);
        b.push([r_out * a.cos(), r_out * a.sin()]);
    }
    for j in 0..n_out {
        b.edges.push([j, (j + 1) % n_out]);
    }
    let corners = geom.corners();
    let mut ring_start = Vec::with_capacity(corners.len());
    for (c, d) in corners.iter().zip(&geom.holes) {
        let m = d.m_theta;
        let start = b.pts.len();
        ring_start.push(start);
        for j in 0..m {
            b.push(c.to_global(c.rho, -PI + 2.0 * PI * j as f64 / m as f64));
        }
        for j in 0..m {
            b.edges.push([start + j, start + (j + 1) % m]);
        }
    }
    let h_int = geom.interface_factor * h;
    let np = geom.polygon.len();
    let mut vertex_point: Vec<Option<usize>> = vec![None; np];
    let hole_at = |i: usize| geom.holes.iter().position(|d| d.vertex == i);
    let end_size = |i: usize| match hole_at(i) {
        Some(n) => (2.0 * PI * geom.holes[n].rho / geom.holes[n].m_theta as f64).min(h_int),
        None => h_int,
    };
    let mut endpoint = |b: &mut Builder, i: usize, toward: usize| -> Result<usize> {
        if let Some(n) = hole_at(i) {
            let c = &corners[n];
            let q = geom.polygon[toward];
            let (_, th) = c.to_local(q);
            let m = geom.holes[n].m_theta;
            let j = (th + PI) / (2.0 * PI / m as f64);
            if (j - j.round()).abs() > 1e-7 {
                return Err(Error::Mesh(format!(
                    "interface edge at vertex {i} misses the θ-grid of hole {n} (M = {m})"
                )));
            }
            Ok(ring_start[n] + (j.round() as usize) % m)
        } else {
            Ok(*vertex_point[i].get_or_insert_with(|| b.push(geom.polygon[i])))
        }
    };
    for i in 0..np {
        let k = (i + 1) % np;
        let a = endpoint(&mut b, i, k)?;
        let e = endpoint(&mut b, k, i)?;
        b.segment(a, e, h_int, end_size(i), end_size(k));
    }
    let constraints = b.edges.clone();
    let input: Vec<Point2<f64>> = b.pts.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let n_input = input.len();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(input, b.edges.clone())
        .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n_input {
        return Err(Error::Mesh("duplicate input points in the disk geometry".into()));
    }
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(3f64.sqrt() / 4.0 * h * h)
        .keep_constraint_edges()
        .with_max_additional_vertices(4_000_000);
    let res = cdt.refine(params);
    if !res.refinement_complete {
        return Err(Error::Mesh(format!(
            "refinement did not complete; smallest feature: interface segments of length {h_int:.3e} or holes of radius {:.3e}",
            geom.holes.iter().map(|d| d.rho).fold(f64::INFINITY, f64::min)
        )));
    }
    let all: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    for (k, p) in b.pts.iter().enumerate() {
        if all[k] != *p {
            return Err(Error::Mesh("triangulator reordered the input points".into()));
        }
    }
    let in_hole = |p: [f64; 2]| {
        corners.iter().zip(&geom.holes).any(|(c, d)| {
            let (r, th) = c.to_local(p);
            if r >= c.rho {
                return false;
            }
            let m = d.m_theta as f64;
            let sector = ((th + PI) / (2.0 * PI / m)).floor();
            let mid = -PI + (sector + 0.5) * 2.0 * PI / m;
            r * (th - mid).cos() < c.rho * (PI / m).cos()
        })
    };
    let mut tris: Vec<[usize; 3]> = Vec::new();
    for f in cdt.inner_faces() {
        let v = f.vertices().map(|v| v.fix().index());
        let (p0, p1, p2) = (all[v[0]], all[v[1]], all[v[2]]);
        let cen = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
        if in_hole(cen) {
            continue;
        }
        let orient = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        tris.push(if orient > 0.0 { v } else { [v[0], v[2], v[1]] });
    }
    // compact the vertex numbering
    let mut new_id = vec![usize::MAX; all.len()];
    let mut nodes = Vec::new();
    for t in &mut tris {
        for v in t.iter_mut() {
            if new_id[*v] == usize::MAX {
                new_id[*v] = nodes.len();
                nodes.push(all[*v]);
            }
            *v = new_id[*v];
        }
    }
    // ring membership: (hole, index) for hole vertices, index for outer vertices
    let mut outer_idx: HashMap<usize, usize> = HashMap::new();
    for j in 0..n_out {
        if new_id[j] != usize::MAX {
            outer_idx.insert(new_id[j], j);
        }
    }
    let mut hole_idx: HashMap<usize, (usize, usize)> = HashMap::new();
    for (n, d) in geom.holes.iter().enumerate() {
        for j in 0..d.m_theta {
            let id = new_id[ring_start[n] + j];
            if id == usize::MAX {
                return Err(Error::Mesh(format!("hole {n} vertex {j} lost during meshing")));
            }
            hole_idx.insert(id, (n, j));
        }
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &tris {
        for k in 0..3 {
            *count.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut boundary = Vec::new();
    let mut rings: Vec<Vec<usize>> = geom.holes.iter().map(|d| vec![usize::MAX; 2 * d.m_theta]).collect();
    for (n, d) in geom.holes.iter().enumerate() {
        for j in 0..d.m_theta {
            rings[n][2 * j] = new_id[ring_start[n] + j];
        }
    }
    let mut elements = Vec::with_capacity(tris.len());
    let mut regions = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut el = [t[0], t[1], t[2], 0, 0, 0];
        for k in 0..3 {
            let (a, c) = (t[k], t[(k + 1) % 3]);
            let key = edge_key(a, c);
            let free = count[&key] == 1;
            let id = match mids.get(&key) {
                Some(&id) => id,
                None => {
                    let (pa, pc) = (nodes[a], nodes[c]);
                    let mut p = [0.5 * (pa[0] + pc[0]), 0.5 * (pa[1] + pc[1])];
                    let mut tag = None;
                    if free {
                        if let (Some(&ja), Some(&jc)) = (outer_idx.get(&a), outer_idx.get(&c)) {
                            let j = if (ja + 1) % n_out == jc { ja } else { jc };
                            let ang = (2 * j + 1) as f64 * PI / n_out as f64;
                            p = [r_out * ang.cos(), r_out * ang.sin()];
                            tag = Some(BoundaryTag::Outer);
                        } else if let (Some(&(na, ja)), Some(&(nc, jc))) = (hole_idx.get(&a), hole_idx.get(&c)) {
                            let m = geom.holes[na].m_theta;
                            if na != nc || ((ja + 1) % m != jc && (jc + 1) % m != ja) {
                                return Err(Error::Mesh("free edge joins non-adjacent hole vertices".into()));
                            }
                            let j = if (ja + 1) % m == jc { ja } else { jc };
                            let th = -PI + (2 * j + 1) as f64 * PI / m as f64;
                            p = corners[na].to_global(corners[na].rho, th);
                            tag = Some(BoundaryTag::Hole(na));
                            rings[na][2 * j + 1] = nodes.len();
                        } else {
                            return Err(Error::Mesh(format!("free edge at {pa:?}–{pc:?} lies on no boundary")));
                        }
                    }
                    nodes.push(p);
                    let id = nodes.len() - 1;
                    mids.insert(key, id);
                    if let Some(tag) = tag {
                        boundary.push(BoundaryEdge { nodes: [a, c, id], tag });
                    }
                    id
                }
            };
            el[3 + k] = id;
        }
        let (p0, p1, p2) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        let cen = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
        let region = if !geom.polygon.is_empty() && polygon_side(&geom.polygon, cen, 0.0) == Side::Inside {
            Region::Metal
        } else {
            Region::Dielectric
        };
        elements.push(el);
        regions.push(region);
    }
    for (n, ring) in rings.iter().enumerate() {
        if ring.contains(&usize::MAX) {
            return Err(Error::Mesh(format!("hole {n} boundary is not closed")));
        }
    }
    for [a, c] in constraints {
        let (a, c) = (new_id[a], new_id[c]);
        if a == usize::MAX || c == usize::MAX || !mids.contains_key(&edge_key(a, c)) {
            return Err(Error::Mesh("a constraint segment is missing from the triangulation".into()));
        }
    }
    Ok(Mesh { nodes, elements, regions, boundary, periodic: Vec::new(), rings, strip: None })
}

/// Circle carrying the boundary edges of a tag, used to snap refined midpoints.
pub fn boundary_circle(geom: &SceneGeometry, tag: super::BoundaryTag) -> Option<([f64; 2], f64)> {
    match tag {
        BoundaryTag::Outer => Some(([0.0, 0.0], geom.outer_radius)),
        BoundaryTag::Hole(n) => {
            let c = geom.corner(n);
            Some((c.vertex, c.rho))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests;
