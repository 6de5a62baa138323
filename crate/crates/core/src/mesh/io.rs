//! Gmsh MSH 2.2 ASCII subset and legacy VTK output.
//!
//! Physical tags: 1 dielectric, 2 metal, 10 outer boundary, `100 + n` for
//! the boundary of hole `n` (counted from 1). Triangles of type 2 (3 nodes)
//! and 9 (6 nodes), lines of type 1 (2 nodes) and 8 (3 nodes), and points
//! (type 15) are understood; other element types are rejected.

use super::{audit, edge_key, AuditOptions, BoundaryEdge, BoundaryTag, Mesh, Region};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn boundary_tag_code(tag: BoundaryTag) -> Option<usize> {
    match tag {
        BoundaryTag::Outer => Some(10),
        BoundaryTag::Hole(n) => Some(101 + n),
        _ => None,
    }
}

/// Writes the mesh in MSH 2.2 ASCII with 17 significant digits.
pub fn export_msh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, msh_string(mesh)?)?;
    Ok(())
}

pub fn msh_string(mesh: &Mesh) -> Result<String> {
    if mesh.strip.is_some() {
        return Err(Error::Mesh("strip meshes are not exported as MSH".into()));
    }
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {:.16e} {:.16e} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.boundary.len() + mesh.elements.len());
    let mut id = 1;
    for b in &mesh.boundary {
        let code = boundary_tag_code(b.tag).ok_or_else(|| Error::Mesh("untagged boundary in MSH export".into()))?;
        let _ = writeln!(s, "{id} 8 2 {code} {code} {} {} {}", b.nodes[0] + 1, b.nodes[1] + 1, b.nodes[2] + 1);
        id += 1;
    }
    for (el, r) in mesh.elements.iter().zip(&mesh.regions) {
        let code = if *r == Region::Metal { 2 } else { 1 };
        let _ = write!(s, "{id} 9 2 {code} {code}");
        for v in el {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    s.push_str("$EndElements\n");
    Ok(s)
}

/// Reads and validates a mesh. With `inclusion`, elements straddling the
/// polygon or tagged with the wrong material are rejected.
pub fn import_msh(path: &Path, inclusion: Option<&[[f64; 2]]>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text, inclusion)
}

pub fn parse_msh(text: &str, inclusion: Option<&[[f64; 2]]>) -> Result<Mesh> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let mut pos = 0;
    let next = |pos: &mut usize| -> Result<(usize, &str)> {
        let r = lines.get(*pos).copied().ok_or_else(|| parse_err(lines.last().map_or(0, |l| l.0), "unexpected end of file"))?;
        *pos += 1;
        Ok(r)
    };
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut tris: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let mut lines_el: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    let mut seen_format = false;
    while pos < lines.len() {
        let (ln, head) = next(&mut pos)?;
        match head {
            "$MeshFormat" => {
                let (ln, v) = next(&mut pos)?;
                let f: Vec<&str> = v.split_whitespace().collect();
                if f.len() < 3 || !f[0].starts_with("2.") || f[1] != "0" {
                    return Err(parse_err(ln, format!("unsupported format line '{v}' (need ASCII 2.x)")));
                }
                let (ln, end) = next(&mut pos)?;
                if end != "$EndMeshFormat" {
                    return Err(parse_err(ln, "missing $EndMeshFormat"));
                }
                seen_format = true;
            }
            "$Nodes" => {
                let (ln, c) = next(&mut pos)?;
                let n: usize = c.parse().map_err(|_| parse_err(ln, "bad node count"))?;
                for _ in 0..n {
                    let (ln, l) = next(&mut pos)?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(parse_err(ln, "node line needs 'id x y z'"));
                    }
                    let id: u64 = f[0].parse().map_err(|_| parse_err(ln, "bad node id"))?;
                    let x: f64 = f[1].parse().map_err(|_| parse_err(ln, "bad x coordinate"))?;
                    let y: f64 = f[2].parse().map_err(|_| parse_err(ln, "bad y coordinate"))?;
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(parse_err(ln, format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y]);
                }
                let (ln, end) = next(&mut pos)?;
                if end != "$EndNodes" {
                    return Err(parse_err(ln, "missing $EndNodes"));
                }
            }
            "$Elements" => {
                let (ln, c) = next(&mut pos)?;
                let n: usize = c.parse().map_err(|_| parse_err(ln, "bad element count"))?;
                for _ in 0..n {
                    let (ln, l) = next(&mut pos)?;
                    let f: Vec<u64> = l
                        .split_whitespace()
                        .map(|t| t.parse::<u64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| parse_err(ln, "non-integer field in element line"))?;
                    if f.len() < 3 {
                        return Err(parse_err(ln, "element line too short"));
                    }
                    let (ty, ntags) = (f[1], f[2] as usize);
                    let expected = match ty {
                        1 => 2,
                        2 => 3,
                        8 => 3,
                        9 => 6,
                        15 => 1,
                        _ => return Err(parse_err(ln, format!("unsupported element type {ty}"))),
                    };
                    if f.len() != 3 + ntags + expected || ntags == 0 {
                        return Err(parse_err(ln, "element line has the wrong number of fields"));
                    }
                    let phys = f[3] as usize;
                    let conn = f[3 + ntags..]
                        .iter()
                        .map(|id| node_index.get(id).copied().ok_or_else(|| parse_err(ln, format!("unknown node {id}"))))
                        .collect::<Result<Vec<_>>>()?;
                    match ty {
                        2 | 9 => tris.push((ln, conn, phys)),
                        1 | 8 => lines_el.push((ln, conn, phys)),
                        _ => {}
                    }
                }
                let (ln, end) = next(&mut pos)?;
                if end != "$EndElements" {
                    return Err(parse_err(ln, "missing $EndElements"));
                }
            }
            s if s.starts_with('$') => {
                // skip unknown sections such as $PhysicalNames
                let close = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = next(&mut pos)?;
                    if l == close {
                        break;
                    }
                }
            }
            other => return Err(parse_err(ln, format!("unexpected line '{other}'"))),
        }
    }
    if !seen_format {
        return Err(parse_err(1, "missing $MeshFormat section"));
    }
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(tris.len());
    let mut regions = Vec::with_capacity(tris.len());
    for (ln, conn, phys) in &tris {
        let region = match phys {
            1 => Region::Dielectric,
            2 => Region::Metal,
            _ => return Err(parse_err(*ln, format!("triangle with physical tag {phys} (expected 1 or 2)"))),
        };
        let mut el = [conn[0], conn[1], conn[2], 0, 0, 0];
        let (a, b, c) = (nodes[el[0]], nodes[el[1]], nodes[el[2]]);
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0.0 {
            el.swap(1, 2);
            if conn.len() == 6 {
                // midpoints follow the swapped vertex order
                el[3] = conn[5];
                el[4] = conn[4];
                el[5] = conn[3];
            }
        } else if conn.len() == 6 {
            el[3..].copy_from_slice(&conn[3..]);
        }
        for (k, [i, j]) in super::p2::EDGES.iter().enumerate() {
            let key = edge_key(el[*i], el[*j]);
            if conn.len() == 6 {
                if let Some(&m) = mids.get(&key) {
                    if m != el[3 + k] {
                        return Err(parse_err(*ln, "neighbouring triangles disagree on an edge midpoint"));
                    }
                } else {
                    mids.insert(key, el[3 + k]);
                }
            } else {
                let id = *mids.entry(key).or_insert_with(|| {
                    let (p, q) = (nodes[key.0], nodes[key.1]);
                    nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                    nodes.len() - 1
                });
                el[3 + k] = id;
            }
        }
        elements.push(el);
        regions.push(region);
    }
    let mut boundary = Vec::new();
    for (ln, conn, phys) in &lines_el {
        let tag = match phys {
            10 => BoundaryTag::Outer,
            p if *p > 100 => BoundaryTag::Hole(p - 101),
            _ => return Err(parse_err(*ln, format!("line with physical tag {phys} (expected 10 or 100+n)"))),
        };
        let key = edge_key(conn[0], conn[1]);
        let m = mids.get(&key).copied().ok_or_else(|| parse_err(*ln, "boundary line is not a triangle edge"))?;
        if conn.len() == 3 && conn[2] != m {
            return Err(parse_err(*ln, "boundary line midpoint differs from the triangle's"));
        }
        boundary.push(BoundaryEdge { nodes: [conn[0], conn[1], m], tag });
    }
    let mesh = Mesh { nodes, elements, regions, boundary, periodic: Vec::new(), rings: Vec::new(), strip: None };
    audit(&mesh, &AuditOptions { inclusion, min_angle_deg: None })?;
    Ok(mesh)
}

/// Legacy VTK ASCII unstructured grid of quadratic triangles with complex
/// nodal fields written as `<name>_re` / `<name>_im` pairs and optional
/// real nodal arrays.
pub fn export_vtk(mesh: &Mesh, fields: &[(&str, &[C64])], scalars: &[(&str, &[f64])], path: &Path) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, fields, scalars)?)?;
    Ok(())
}

pub fn vtk_string(mesh: &Mesh, fields: &[(&str, &[C64])], scalars: &[(&str, &[f64])]) -> Result<String> {
    let n = mesh.nodes.len();
    if fields.iter().any(|(_, f)| f.len() != n) || scalars.iter().any(|(_, f)| f.len() != n) {
        return Err(Error::Validation("field length differs from node count".into()));
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ncornerwave field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let ne = mesh.elements.len();
    let _ = writeln!(s, "CELLS {ne} {}", 7 * ne);
    for el in &mesh.elements {
        let _ = writeln!(s, "6 {} {} {} {} {} {}", el[0], el[1], el[2], el[3], el[4], el[5]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("22\n");
    }
    let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for r in &mesh.regions {
        s.push_str(if *r == Region::Metal { "1\n" } else { "0\n" });
    }
    if !fields.is_empty() || !scalars.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for (name, f) in fields {
        for (suffix, part) in [("re", 0), ("im", 1)] {
            let _ = writeln!(s, "SCALARS {name}_{suffix} double 1\nLOOKUP_TABLE default");
            for v in f.iter() {
                let _ = writeln!(s, "{:.16e}", if part == 0 { v.re } else { v.im });
            }
        }
    }
    for (name, f) in scalars {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in f.iter() {
            let _ = writeln!(s, "{v:.16e}");
        }
    }
    Ok(s)
}
