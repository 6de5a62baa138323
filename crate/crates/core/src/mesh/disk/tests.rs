use super::*;
use crate::mesh::io::{msh_string, parse_msh};
use crate::mesh::{audit, audit_split, refine_uniform, AuditOptions, SplitMesh, StripLayout, ZGrading};
use std::collections::HashSet;

fn triangle() -> SceneGeometry {
    SceneGeometry::sharp_triangle(0.16, 0.25, 0.02).with_default_rings(0.04).unwrap()
}

fn vertex_edges(mesh: &Mesh) -> HashSet<(usize, usize)> {
    let mut set = HashSet::new();
    for el in &mesh.elements {
        for k in 0..3 {
            set.insert(edge_key(el[k], el[(k + 1) % 3]));
        }
    }
    set
}

#[test]
fn homogeneous_disk_topology() {
    let geom = SceneGeometry::homogeneous(1.0);
    let mesh = build_disk_mesh(&geom, 1.0 / 8.0).unwrap();
    assert!(mesh.regions.iter().all(|r| *r == Region::Dielectric));
    let v = mesh.num_vertices() as i64;
    let e = vertex_edges(&mesh).len() as i64;
    let f = mesh.num_elements() as i64;
    assert_eq!(v - e + f, 1);
    let rep = audit(&mesh, &AuditOptions { inclusion: None, min_angle_deg: Some(20.0) }).unwrap();
    assert!(rep.min_angle_deg >= 20.0);
    assert!(mesh.boundary.iter().all(|b| b.tag == BoundaryTag::Outer));
    assert!(mesh.boundary.len() >= 64);
    // curved boundary: area of the disk up to the quadratic arc error
    assert!((mesh.area() - PI).abs() < 1e-5, "{}", mesh.area());
}

#[test]
fn triangle_with_holes() {
    let geom = triangle();
    assert_eq!(geom.holes.iter().map(|h| h.m_theta).collect::<Vec<_>>(), vec![24, 48, 48]);
    let (phi0, bis0) = geom.vertex_angle(0);
    assert!((phi0 - PI / 6.0).abs() < 1e-12 && (bis0 + PI / 2.0).abs() < 1e-12);
    assert!((geom.vertex_angle(1).0 - 5.0 * PI / 12.0).abs() < 1e-12);
    let mesh = build_disk_mesh(&geom, 0.04).unwrap();
    let rep = audit(&mesh, &AuditOptions { inclusion: Some(&geom.polygon), min_angle_deg: Some(20.0) }).unwrap();
    assert!(rep.min_angle_deg >= 20.0);
    for tag in [BoundaryTag::Outer, BoundaryTag::Hole(0), BoundaryTag::Hole(1), BoundaryTag::Hole(2)] {
        assert!(mesh.boundary.iter().any(|b| b.tag == tag), "{tag:?} missing");
    }
    // constraint oracle: mesh edges on each polygon side cover it outside the holes
    let edges = vertex_edges(&mesh);
    let n = geom.polygon.len();
    for i in 0..n {
        let (a, b) = (geom.polygon[i], geom.polygon[(i + 1) % n]);
        let covered: f64 = edges
            .iter()
            .filter(|(p, q)| {
                crate::mesh::segment_distance(a, b, mesh.nodes[*p]) < 1e-12
                    && crate::mesh::segment_distance(a, b, mesh.nodes[*q]) < 1e-12
            })
            .map(|(p, q)| (mesh.nodes[*p][0] - mesh.nodes[*q][0]).hypot(mesh.nodes[*p][1] - mesh.nodes[*q][1]))
            .sum();
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        assert!((covered - (len - 2.0 * 0.02)).abs() < 1e-12, "side {i}: {covered} vs {}", len - 0.04);
    }
    let holes = 3.0 * PI * 0.02 * 0.02;
    assert!((mesh.area() - (PI * 0.0625 - holes)).abs() < 1e-7);
    let metal: f64 = {
        let mut m = mesh.clone();
        let keep: Vec<usize> = (0..m.elements.len()).filter(|&e| m.regions[e] == Region::Metal).collect();
        m.elements = keep.iter().map(|&e| m.elements[e]).collect();
        m.area()
    };
    // triangle area minus the three circular sectors inside it
    let tri = 0.5 * 0.16f64.powi(2) * ((5.0 * PI / 6.0).sin() * 2.0 + (PI / 3.0).sin());
    let sectors = 0.5 * 0.02f64.powi(2) * (PI / 6.0 + 2.0 * 5.0 * PI / 12.0);
    assert!((metal - (tri - sectors)).abs() < 1e-8, "{metal} {}", tri - sectors);
    for (n, ring) in mesh.rings.iter().enumerate() {
        assert_eq!(ring.len(), 2 * geom.holes[n].m_theta);
        let c = geom.corner(n);
        for (k, &v) in ring.iter().enumerate() {
            let (r, th) = c.to_local(mesh.nodes[v]);
            assert!((r - 0.02).abs() < 1e-14);
            let want = wrap_angle(-PI + k as f64 * PI / geom.holes[n].m_theta as f64);
            assert!(wrap_angle(th - want).abs() < 1e-12);
        }
    }
    assert!(!mesh.interface_nodes().is_empty());
}

#[test]
fn refinement_and_gluing() {
    let geom = triangle();
    let layouts: Vec<StripLayout> = (0..3)
        .map(|n| {
            let c = geom.corner(n);
            StripLayout::new(c.aperture, c.rho, 4.0, 2.0, geom.holes[n].m_theta, ZGrading::Uniform { aspect: 2.0 }).unwrap()
        })
        .collect();
    let split = SplitMesh::build(&geom, 0.05, &layouts).unwrap();
    audit_split(&split, Some(&geom.polygon)).unwrap();
    let fine = split.refined(&geom).unwrap();
    audit(&fine.disk, &AuditOptions { inclusion: Some(&geom.polygon), min_angle_deg: Some(20.0) }).unwrap();
    audit_split(&fine, Some(&geom.polygon)).unwrap();
    assert_eq!(fine.disk.num_elements(), 4 * split.disk.num_elements());
    assert_eq!(fine.disk.rings[1].len(), 2 * split.disk.rings[1].len());
    // nested: every coarse node keeps its position
    for (k, p) in split.disk.nodes.iter().enumerate() {
        assert_eq!(fine.disk.nodes[k], *p);
    }
    let exact = PI * 0.0625 - 3.0 * PI * 0.0004;
    assert!((fine.disk.area() - exact).abs() < (split.disk.area() - exact).abs() + 1e-15);
    let again = refine_uniform(&fine.disk, |t| boundary_circle(&geom, t)).unwrap();
    assert_eq!(again.boundary.len(), 2 * fine.disk.boundary.len());
}

#[test]
fn invalid_geometry_is_reported() {
    let mut g = SceneGeometry::sharp_triangle(0.16, 0.25, 0.2);
    assert!(g.validate().is_err());
    g = SceneGeometry::sharp_triangle(0.16, 0.15, 0.02);
    assert!(g.validate().is_err());
    g = SceneGeometry::sharp_triangle(0.16, 0.25, 0.02);
    g.polygon.reverse();
    assert!(g.validate().is_err());
    let g = SceneGeometry::sharp_triangle(0.16, 0.25, 0.02);
    assert!(build_disk_mesh(&g, 0.05).is_err(), "unset ring counts must be refused");
}

#[test]
fn msh_round_trip_is_exact() {
    let geom = triangle();
    let mesh = build_disk_mesh(&geom, 0.05).unwrap();
    let text = msh_string(&mesh).unwrap();
    let back = parse_msh(&text, Some(&geom.polygon)).unwrap();
    assert_eq!(back.nodes, mesh.nodes);
    assert_eq!(back.elements, mesh.elements);
    assert_eq!(back.regions, mesh.regions);
    assert_eq!(back.boundary, mesh.boundary);
}

const TWO_TRIANGLES: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 10 10 1 2
2 1 2 10 10 2 3
3 1 2 10 10 3 4
4 1 2 10 10 4 1
5 2 2 1 1 1 2 3
6 2 2 1 1 1 4 3
$EndElements
";

#[test]
fn hand_written_fixture() {
    let mesh = parse_msh(TWO_TRIANGLES, None).unwrap();
    assert_eq!(mesh.num_elements(), 2);
    assert_eq!(mesh.num_nodes(), 4 + 5);
    assert_eq!(&mesh.elements[0][..3], &[0, 1, 2]);
    // clockwise input is reoriented
    assert_eq!(&mesh.elements[1][..3], &[0, 2, 3]);
    assert_eq!(mesh.nodes[mesh.elements[0][3]], [0.5, 0.0]);
    assert_eq!(mesh.elements[0][5], mesh.elements[1][3]);
    assert_eq!(mesh.boundary.len(), 4);
    assert!((mesh.area() - 1.0).abs() < 1e-15);
}

#[test]
fn straddling_element_is_rejected() {
    let poly = [[0.5, -1.0], [2.0, -1.0], [2.0, 2.0], [0.5, 2.0]];
    let err = parse_msh(TWO_TRIANGLES, Some(&poly)).unwrap_err();
    assert!(err.to_string().contains("straddles"), "{err}");
    let bad = TWO_TRIANGLES.replace("5 2 2 1 1 1 2 3", "5 4 2 1 1 1 2 3");
    match parse_msh(&bad, None).unwrap_err() {
        crate::Error::Parse { line, .. } => assert_eq!(line, 17),
        e => panic!("{e}"),
    }
    assert!(parse_msh("$Nodes\n1\n1 0 0\n$EndNodes\n", None).is_err());
}

#[test]
fn vtk_output_shape() {
    let mesh = parse_msh(TWO_TRIANGLES, None).unwrap();
    let f: Vec<num_complex::Complex64> = (0..mesh.num_nodes()).map(|k| num_complex::Complex64::new(k as f64, -1.0)).collect();
    let s = crate::mesh::io::vtk_string(&mesh, &[("u", &f)], &[]).unwrap();
    assert!(s.contains("CELLS 2 14") && s.contains("SCALARS u_re double 1") && s.contains("SCALARS u_im double 1"));
    assert_eq!(s.lines().filter(|l| *l == "22").count(), 2);
}
