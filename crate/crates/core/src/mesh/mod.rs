//! Split-domain meshes: a perforated disk conforming to the interface and
//! one periodic log-polar strip per critical corner.

pub mod disk;
pub mod io;
pub mod p2;
pub mod strip;

use crate::corner_modes::CornerSpec;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

pub use disk::{build_disk_mesh, SceneGeometry};
pub use io::{export_msh, export_vtk, import_msh};
pub use strip::{build_strip_mesh, compatible_m_theta, StripLayout, ZGrading};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Dielectric,
    Metal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Outer,
    /// Boundary of the hole cut around corner `n`.
    Hole(usize),
    /// Strip end glued to the hole boundary (`z = ln ρ`).
    StripRight,
    /// Truncated strip end (`z = ln ρ − L`).
    StripLeft,
    /// Strip edge on `θ = ±π`.
    Periodic,
}

/// Quadratic boundary edge `[a, b, midpoint]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 3],
    pub tag: BoundaryTag,
}

/// P2 triangulation with material tags and gluing tables.
///
/// Strip meshes use the coordinates `(z, θ)` in place of `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 6]>,
    pub regions: Vec<Region>,
    pub boundary: Vec<BoundaryEdge>,
    /// `(θ = π node, θ = −π node)` pairs of a strip.
    pub periodic: Vec<(usize, usize)>,
    /// Per hole (disk) or single entry (strip): the `2M` interface nodes
    /// ordered by local angle starting at `θ = −π`.
    pub rings: Vec<Vec<usize>>,
    /// Present on strip meshes.
    pub strip: Option<StripLayout>,
}

impl Mesh {
    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 6] {
        let el = &self.elements[e];
        std::array::from_fn(|k| self.nodes[el[k]])
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of distinct element vertices.
    pub fn num_vertices(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        for el in &self.elements {
            for &v in &el[..3] {
                seen[v] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Nodes of the edges separating metal from dielectric elements, sorted.
    pub fn interface_nodes(&self) -> Vec<usize> {
        let mut owner: HashMap<(usize, usize), (Region, usize)> = HashMap::new();
        let mut out = Vec::new();
        for (e, el) in self.elements.iter().enumerate() {
            for (k, [a, b]) in p2::EDGES.iter().enumerate() {
                let key = edge_key(el[*a], el[*b]);
                if let Some((r, m)) = owner.get(&key) {
                    if *r != self.regions[e] {
                        out.extend_from_slice(&[key.0, key.1, *m]);
                    }
                } else {
                    owner.insert(key, (self.regions[e], el[3 + k]));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Measure of all elements, by quadrature of the isoparametric Jacobian.
    pub fn area(&self) -> f64 {
        let q = p2::quadrature();
        (0..self.elements.len())
            .map(|e| {
                let c = self.element_coords(e);
                q.iter().map(|(p, w)| w * p2::det(&p2::jacobian(&c, p[0], p[1]))).sum::<f64>()
            })
            .sum()
    }
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Disk mesh plus one strip per corner, glued along the hole boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMesh {
    pub disk: Mesh,
    pub strips: Vec<Mesh>,
    pub corners: Vec<CornerSpec>,
}

impl SplitMesh {
    /// Disk mesh of `geom` glued to one strip per hole.
    pub fn build(geom: &SceneGeometry, h: f64, layouts: &[StripLayout]) -> Result<Self> {
        if layouts.len() != geom.holes.len() {
            return Err(Error::Mesh(format!("{} strip layouts for {} holes", layouts.len(), geom.holes.len())));
        }
        for (n, (lay, hole)) in layouts.iter().zip(&geom.holes).enumerate() {
            if lay.m_theta != hole.m_theta {
                return Err(Error::Mesh(format!("strip {n} has M = {} but its hole has M = {}", lay.m_theta, hole.m_theta)));
            }
        }
        let disk = build_disk_mesh(geom, h)?;
        let strips = layouts.iter().map(build_strip_mesh).collect::<Result<Vec<_>>>()?;
        Ok(Self { disk, strips, corners: geom.corners() })
    }

    /// Uniform refinement of the disk with the strips regenerated on the
    /// halved grids.
    pub fn refined(&self, geom: &SceneGeometry) -> Result<Self> {
        let disk = refine_uniform(&self.disk, |t| disk::boundary_circle(geom, t))?;
        let strips = self
            .strips
            .iter()
            .map(|s| {
                let lay = s.strip.as_ref().ok_or_else(|| Error::Mesh("strip mesh without layout".into()))?;
                build_strip_mesh(&lay.refined())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { disk, strips, corners: self.corners.clone() })
    }

    pub fn num_nodes(&self) -> usize {
        self.disk.num_nodes() + self.strips.iter().map(Mesh::num_nodes).sum::<usize>()
    }
}

/// Options of [`audit`].
#[derive(Debug, Clone, Default)]
pub struct AuditOptions<'a> {
    /// Inclusion polygon for the region-purity check of a disk mesh.
    pub inclusion: Option<&'a [[f64; 2]]>,
    /// Minimum interior angle in degrees, checked on the straight vertex triangles.
    pub min_angle_deg: Option<f64>,
}

/// Summary of a successful audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub nodes: usize,
    pub elements: usize,
    pub boundary_edges: usize,
    pub min_angle_deg: f64,
}

/// Which side of a closed polygon a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
    On,
}

/// Point classification with a distance tolerance for the boundary.
pub fn polygon_side(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> Side {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if segment_distance(a, b, p) <= tol {
            return Side::On;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Side::Inside
    } else {
        Side::Outside
    }
}

pub(crate) fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn triangle_min_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ang = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
    };
    ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b)).to_degrees()
}

fn invalid(msg: String) -> Error {
    Error::Validation(msg)
}

/// Structural checks: valid indices, positive orientation, conforming
/// edges with shared midpoints, boundary edges exactly on the free edges,
/// region purity, periodic pairing and ring ordering.
pub fn audit(mesh: &Mesh, opts: &AuditOptions) -> Result<AuditReport> {
    let nn = mesh.nodes.len();
    if mesh.regions.len() != mesh.elements.len() {
        return Err(invalid("region list length differs from element count".into()));
    }
    let scale = mesh.nodes.iter().fold(0.0_f64, |m, p| m.max(p[0].abs()).max(p[1].abs())).max(1.0);
    let mut min_angle = 180.0_f64;
    let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if el.iter().any(|&v| v >= nn) {
            return Err(invalid(format!("element {e} references a missing node")));
        }
        for i in 0..6 {
            for j in 0..i {
                if el[i] == el[j] {
                    return Err(invalid(format!("element {e} repeats node {}", el[i])));
                }
            }
        }
        let c = mesh.element_coords(e);
        for p in p2::REF_NODES.iter().chain(p2::quadrature().iter().map(|(p, _)| p)) {
            if p2::det(&p2::jacobian(&c, p[0], p[1])) <= 0.0 {
                return Err(invalid(format!("element {e} is inverted or degenerate")));
            }
        }
        min_angle = min_angle.min(triangle_min_angle(c[0], c[1], c[2]));
        for (k, [a, b]) in p2::EDGES.iter().enumerate() {
            let key = edge_key(el[*a], el[*b]);
            let entry = edges.entry(key).or_insert((0, el[3 + k]));
            entry.0 += 1;
            if entry.1 != el[3 + k] {
                return Err(invalid(format!("edge {key:?} has inconsistent midpoints")));
            }
            if entry.0 > 2 {
                return Err(invalid(format!("edge {key:?} shared by more than two elements")));
            }
        }
    }
    let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
    for be in &mesh.boundary {
        let key = edge_key(be.nodes[0], be.nodes[1]);
        match edges.get(&key) {
            Some(&(1, m)) if m == be.nodes[2] => {}
            _ => return Err(invalid(format!("boundary edge {key:?} is not a free element edge"))),
        }
        *tagged.entry(key).or_insert(0) += 1;
    }
    for (key, (count, _)) in &edges {
        if *count == 1 && tagged.get(key) != Some(&1) {
            return Err(invalid(format!("free edge {key:?} carries no boundary tag")));
        }
    }
    if let Some(limit) = opts.min_angle_deg {
        if min_angle < limit {
            return Err(invalid(format!("minimum angle {min_angle:.2}° below {limit}°")));
        }
    }
    if let Some(poly) = opts.inclusion {
        let tol = 1e-9 * scale;
        for (e, el) in mesh.elements.iter().enumerate() {
            let sides: Vec<Side> = el.iter().map(|&v| polygon_side(poly, mesh.nodes[v], tol)).collect();
            let has_in = sides.contains(&Side::Inside);
            let has_out = sides.contains(&Side::Outside);
            if has_in && has_out {
                return Err(invalid(format!("element {e} straddles the interface")));
            }
            let expect = if has_in {
                Region::Metal
            } else if has_out {
                Region::Dielectric
            } else {
                let c = p2::map(&mesh.element_coords(e), 1.0 / 3.0, 1.0 / 3.0);
                if polygon_side(poly, c, 0.0) == Side::Inside {
                    Region::Metal
                } else {
                    Region::Dielectric
                }
            };
            if mesh.regions[e] != expect {
                return Err(invalid(format!("element {e} tagged {:?} but lies in {expect:?}", mesh.regions[e])));
            }
        }
    }
    if let Some(layout) = &mesh.strip {
        audit_strip(mesh, layout)?;
    } else if !mesh.periodic.is_empty() {
        return Err(invalid("periodic pairs on a non-strip mesh".into()));
    }
    for (n, ring) in mesh.rings.iter().enumerate() {
        let mut seen = std::collections::HashSet::new();
        if ring.len() < 4 || ring.len() % 2 != 0 || ring.iter().any(|v| *v >= nn || !seen.insert(*v)) {
            return Err(invalid(format!("ring {n} is malformed")));
        }
    }
    if mesh.strip.is_none() && !mesh.rings.is_empty() {
        for be in &mesh.boundary {
            if let BoundaryTag::Hole(n) = be.tag {
                let ring = mesh.rings.get(n).ok_or_else(|| invalid(format!("hole {n} has no ring")))?;
                if be.nodes.iter().any(|v| !ring.contains(v)) {
                    return Err(invalid(format!("hole {n} boundary node missing from its ring")));
                }
            }
        }
    }
    Ok(AuditReport {
        nodes: nn,
        elements: mesh.elements.len(),
        boundary_edges: mesh.boundary.len(),
        min_angle_deg: min_angle,
    })
}

fn audit_strip(mesh: &Mesh, layout: &StripLayout) -> Result<()> {
    let tol = 1e-12 * (1.0 + layout.l.abs());
    let half = 0.5 * layout.phi;
    for (e, el) in mesh.elements.iter().enumerate() {
        let thetas: Vec<f64> = el.iter().map(|&v| mesh.nodes[v][1]).collect();
        let inside = thetas.iter().any(|t| t.abs() < half - tol);
        let outside = thetas.iter().any(|t| t.abs() > half + tol);
        if inside && outside {
            return Err(invalid(format!("strip element {e} straddles θ = ±φ/2")));
        }
        let expect = if inside { Region::Metal } else { Region::Dielectric };
        if mesh.regions[e] != expect {
            return Err(invalid(format!("strip element {e} has the wrong region tag")));
        }
    }
    let mut at_pi: Vec<usize> = (0..mesh.nodes.len()).filter(|&v| (mesh.nodes[v][1] - PI).abs() < tol).collect();
    at_pi.sort_unstable();
    let mut paired: Vec<usize> = mesh.periodic.iter().map(|p| p.0).collect();
    paired.sort_unstable();
    if at_pi != paired {
        return Err(invalid("periodic pairing incomplete".into()));
    }
    for &(a, b) in &mesh.periodic {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        if (pa[0] - pb[0]).abs() > tol || (pb[1] + PI).abs() > tol {
            return Err(invalid(format!("periodic pair ({a}, {b}) does not match")));
        }
    }
    let ring = mesh.rings.first().ok_or_else(|| invalid("strip without right-end table".into()))?;
    if ring.len() != 2 * layout.m_theta {
        return Err(invalid("right-end table length differs from 2M".into()));
    }
    for (c, &v) in ring.iter().enumerate() {
        let p = mesh.nodes[v];
        if (p[0] - layout.rho.ln()).abs() > tol || (p[1] - layout.ring_theta(c)).abs() > tol {
            return Err(invalid(format!("right-end node {c} misplaced")));
        }
    }
    Ok(())
}

/// Cross-mesh checks of the gluing: ring lengths match, each strip
/// right-end node maps onto its disk partner, and every strip node maps
/// inside the hole disk.
pub fn audit_split(split: &SplitMesh, inclusion: Option<&[[f64; 2]]>) -> Result<()> {
    audit(&split.disk, &AuditOptions { inclusion, min_angle_deg: Some(20.0) })?;
    if split.strips.len() != split.corners.len() || split.disk.rings.len() != split.corners.len() {
        return Err(invalid("corner, strip and hole counts differ".into()));
    }
    for (n, (strip, corner)) in split.strips.iter().zip(&split.corners).enumerate() {
        audit(strip, &AuditOptions::default())?;
        let layout = strip.strip.as_ref().ok_or_else(|| invalid(format!("strip {n} lacks its layout")))?;
        let (ring_d, ring_s) = (&split.disk.rings[n], &strip.rings[0]);
        if ring_d.len() != ring_s.len() {
            return Err(invalid(format!("interface {n}: {} disk nodes vs {} strip nodes", ring_d.len(), ring_s.len())));
        }
        if (layout.rho - corner.rho).abs() > 1e-14 * corner.rho || (layout.phi - corner.aperture).abs() > 1e-12 {
            return Err(invalid(format!("strip {n} layout disagrees with its corner")));
        }
        for (c, (&vd, &vs)) in ring_d.iter().zip(ring_s).enumerate() {
            let zs = split.strips[n].nodes[vs];
            let img = corner.to_global(zs[0].exp(), zs[1]);
            let pd = split.disk.nodes[vd];
            if (img[0] - pd[0]).hypot(img[1] - pd[1]) > 1e-12 * (1.0 + corner.rho) {
                return Err(invalid(format!("interface {n}: node pair {c} does not coincide")));
            }
        }
        for p in &strip.nodes {
            if p[0].exp() > corner.rho * (1.0 + 1e-12) {
                return Err(invalid(format!("strip {n} extends beyond its hole")));
            }
        }
    }
    Ok(())
}

/// Splits every triangle into four, placing new nodes through the parent
/// isoparametric map and snapping new boundary midpoints onto `circle_of`
/// when it returns a circle `(centre, radius)` for the edge tag.
pub fn refine_uniform(mesh: &Mesh, circle_of: impl Fn(BoundaryTag) -> Option<([f64; 2], f64)>) -> Result<Mesh> {
    if mesh.strip.is_some() {
        return Err(Error::Mesh("strip meshes are refined through their layout".into()));
    }
    let mut nodes = mesh.nodes.clone();
    // halves of the parent boundary edges, keyed by (vertex, midpoint)
    let mut half_tag: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
    for b in &mesh.boundary {
        half_tag.insert(edge_key(b.nodes[0], b.nodes[2]), b.tag);
        half_tag.insert(edge_key(b.nodes[2], b.nodes[1]), b.tag);
    }
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(4 * mesh.elements.len());
    let mut regions = Vec::with_capacity(4 * mesh.elements.len());
    // reference coordinates of the parent's nodes
    let r = p2::REF_NODES;
    let mid_ref = |a: usize, b: usize| [0.5 * (r[a][0] + r[b][0]), 0.5 * (r[a][1] + r[b][1])];
    let children: [[usize; 3]; 4] = [[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]];
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        for ch in &children {
            let mut nd = [0usize; 6];
            for k in 0..3 {
                nd[k] = el[ch[k]];
            }
            for (k, [a, b]) in p2::EDGES.iter().enumerate() {
                let (la, lb) = (ch[*a], ch[*b]);
                let key = edge_key(el[la], el[lb]);
                let id = *mids.entry(key).or_insert_with(|| {
                    let rp = mid_ref(la, lb);
                    let mut p = p2::map(&coords, rp[0], rp[1]);
                    if let Some((c, rad)) = half_tag.get(&key).and_then(|t| circle_of(*t)) {
                        // bisect the arc between the two endpoints
                        let unit = |q: [f64; 2]| {
                            let d = [q[0] - c[0], q[1] - c[1]];
                            let n = d[0].hypot(d[1]);
                            [d[0] / n, d[1] / n]
                        };
                        let (ua, ub) = (unit(nodes[key.0]), unit(nodes[key.1]));
                        let s = [ua[0] + ub[0], ua[1] + ub[1]];
                        let n = s[0].hypot(s[1]);
                        p = [c[0] + rad * s[0] / n, c[1] + rad * s[1] / n];
                    }
                    nodes.push(p);
                    nodes.len() - 1
                });
                nd[3 + k] = id;
            }
            elements.push(nd);
            regions.push(mesh.regions[e]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary.len());
    for b in &mesh.boundary {
        let [v0, v1, m] = b.nodes;
        let m0 = mids[&edge_key(v0, m)];
        let m1 = mids[&edge_key(m, v1)];
        boundary.push(BoundaryEdge { nodes: [v0, m, m0], tag: b.tag });
        boundary.push(BoundaryEdge { nodes: [m, v1, m1], tag: b.tag });
    }
    let rings = mesh
        .rings
        .iter()
        .map(|ring| {
            let n = ring.len();
            let mut out = Vec::with_capacity(2 * n);
            for c in 0..n {
                out.push(ring[c]);
                let key = edge_key(ring[c], ring[(c + 1) % n]);
                let id = mids.get(&key).copied().ok_or_else(|| Error::Mesh("ring is not a chain of element edges".into()))?;
                out.push(id);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mesh { nodes, elements, regions, boundary, periodic: Vec::new(), rings, strip: None })
}
