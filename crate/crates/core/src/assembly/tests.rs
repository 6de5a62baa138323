use super::*;
use crate::mesh::{SceneGeometry, StripLayout, ZGrading};
use std::collections::HashMap;

fn vacuum(k0: f64) -> Media {
    Media { eps_d: 1.0, eps_m: C64::new(1.0, 0.0), mu_d: 1.0, mu_m: 1.0, k0 }
}

fn plane_wave(k: f64, alpha: f64, x: [f64; 2]) -> C64 {
    C64::from_polar(1.0, k * (x[0] * alpha.cos() + x[1] * alpha.sin()))
}

/// Relative L² distance between the disk part of `u` and `exact`.
fn disk_l2_error(mesh: &Mesh, dofs: &[usize], u: &[C64], exact: impl Fn([f64; 2]) -> C64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (e, el) in mesh.elements.iter().enumerate() {
        let c = mesh.element_coords(e);
        for (q, w) in p2::quadrature() {
            let n = p2::shape(q[0], q[1]);
            let uh: C64 = (0..6).map(|i| u[dofs[el[i]]] * n[i]).sum();
            let ex = exact(p2::map(&c, q[0], q[1]));
            let wd = w * p2::det(&p2::jacobian(&c, q[0], q[1]));
            num += (uh - ex).norm_sqr() * wd;
            den += ex.norm_sqr() * wd;
        }
    }
    (num / den).sqrt()
}

fn homogeneous_problem(boundary: BoundaryMode, h: f64) -> Problem {
    let geom = SceneGeometry::homogeneous(1.0);
    let mesh = SplitMesh::build(&geom, h, &[]).unwrap();
    Problem { mesh, media: vacuum(2.0 * PI), pml: vec![], boundary, outer_radius: 1.0 }
}

#[test]
fn homogeneous_plane_wave_dtn() {
    let k = 2.0 * PI;
    let problem = homogeneous_problem(BoundaryMode::Dtn { n_f: default_n_f(k, 1.0) }, 1.0 / 20.0);
    let alpha = 0.3;
    let sys = assemble(&problem, Some(alpha)).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.residual < 1e-10, "residual {}", sol.residual);
    let err = disk_l2_error(&problem.mesh.disk, &sys.dofs.disk, &sol.values, |x| plane_wave(k, alpha, x));
    assert!(err <= 1e-3, "relative L2 error {err}");
}

#[test]
fn homogeneous_plane_wave_abc_is_approximate() {
    let k = 2.0 * PI;
    let problem = homogeneous_problem(BoundaryMode::Abc, 1.0 / 12.0);
    let sys = assemble(&problem, Some(0.0)).unwrap();
    let sol = solve(&sys).unwrap();
    let err = disk_l2_error(&problem.mesh.disk, &sys.dofs.disk, &sol.values, |x| plane_wave(k, 0.0, x));
    // the first-order condition is exact for the incident part only up
    // to the curvature mismatch of a plane wave
    assert!(err < 0.2, "relative L2 error {err}");
    assert!(err > 1e-4, "ABC should not be exact: {err}");
}

#[test]
fn incident_series_matches_plane_wave() {
    let (k, r) = (30.0, 0.25);
    let inc = incident_trace(0.7, k, r, default_n_f(k, r)).unwrap();
    for th in [0.0, 0.4, 2.0, -2.9] {
        let exact = C64::from_polar(1.0, k * r * (th - 0.7f64).cos());
        assert!((inc.eval(th) - exact).norm() < 1e-12, "θ = {th}");
    }
    assert!(incident_trace(0.0, k, r, 90).is_err());
}

fn triangle_problem(theta: f64, media: Media, h: f64) -> Problem {
    let geom = SceneGeometry::sharp_triangle(0.16, 0.25, 0.02).with_default_rings(h).unwrap();
    let grading = ZGrading::Graded { first_aspect: 1.0, growth: 1.3, max_step: 0.4 };
    // deep enough that k₀²r² is negligible at the onset, where the mass
    // weight jumps from e^{2z} to α⁻¹e^{2z/α}
    let (l0, l) = (6.0, 8.0);
    let layouts: Vec<_> = geom
        .corners()
        .iter()
        .zip(&geom.holes)
        .map(|(c, hd)| StripLayout::new(c.aperture, c.rho, l, l0, hd.m_theta, grading).unwrap())
        .collect();
    let mesh = SplitMesh::build(&geom, h, &layouts).unwrap();
    let pml = vec![PmlSpec { rho: 0.02, l, l0, theta }; 3];
    let k = media.k();
    Problem { mesh, media, pml, boundary: BoundaryMode::Dtn { n_f: default_n_f(k, 0.25) }, outer_radius: 0.25 }
}

/// With identical media the strips are only a change of variables (and,
/// for θ ≠ 0, an analytic continuation), so the plane wave is recovered.
#[test]
fn strips_reproduce_plane_wave_in_homogeneous_medium() {
    let k0 = 30.0;
    for theta in [0.0, PI / 8.0] {
        let problem = triangle_problem(theta, vacuum(k0), 2.0 * PI / k0 / 16.0);
        let sys = assemble(&problem, Some(1.0)).unwrap();
        let sol = solve(&sys).unwrap();
        let err = disk_l2_error(&problem.mesh.disk, &sys.dofs.disk, &sol.values, |x| plane_wave(k0, 1.0, x));
        assert!(err < 2e-3, "θ = {theta}: relative L2 error {err}");
        // strip nodes in the physical part carry the same wave
        for (n, strip) in problem.mesh.strips.iter().enumerate() {
            let corner = &problem.mesh.corners[n];
            for (i, p) in strip.nodes.iter().enumerate() {
                if p[0] > problem.pml[n].z_onset() {
                    let x = corner.to_global(p[0].exp(), p[1]);
                    let d = (sol.values[sys.dofs.strips[n][i]] - plane_wave(k0, 1.0, x)).norm();
                    assert!(d < 5e-3, "θ = {theta}, strip {n} node {i} at {p:?}: {d}");
                }
            }
        }
    }
}

#[test]
fn matrix_is_exactly_complex_symmetric() {
    let media = Media { eps_d: 1.0, eps_m: C64::new(-1.2, 0.05), mu_d: 1.0, mu_m: 1.0, k0: 30.0 };
    let problem = triangle_problem(-PI / 8.0, media, 0.03);
    let sys = assemble(&problem, None).unwrap();
    let a = &sys.matrix;
    let mut map = HashMap::new();
    let sym = a.symbolic();
    for j in 0..a.ncols() {
        let range = sym.col_range(j);
        for (k, &i) in sym.row_idx()[range.clone()].iter().enumerate() {
            map.insert((i, j), a.val()[range.start + k]);
        }
    }
    let mut worst: f64 = 0.0;
    for (&(i, j), v) in &map {
        let t = map.get(&(j, i)).copied().unwrap_or_default();
        worst = worst.max((v - t).norm());
    }
    assert_eq!(worst, 0.0);
}

#[test]
fn dof_map_merges_rings_and_seams() {
    let problem = triangle_problem(PI / 8.0, vacuum(30.0), 0.03);
    let dm = DofMap::new(&problem.mesh).unwrap();
    let mut expected = problem.mesh.disk.num_nodes();
    for s in &problem.mesh.strips {
        let lay = s.strip.as_ref().unwrap();
        let rows = 2 * lay.n_z() + 1;
        // seam column merged into column 0, ring row into the disk
        expected += s.num_nodes() - rows - 2 * lay.m_theta;
    }
    assert_eq!(dm.n_dofs, expected);
    assert_eq!(dm.disk_count, problem.mesh.disk.num_nodes());
    for (n, s) in problem.mesh.strips.iter().enumerate() {
        for (&a, &b) in problem.mesh.disk.rings[n].iter().zip(&s.rings[0]) {
            assert_eq!(dm.disk[a], dm.strips[n][b]);
        }
        for &(a, b) in &s.periodic {
            assert_eq!(dm.strips[n][a], dm.strips[n][b]);
        }
    }
}

#[test]
fn factorization_is_reused_across_incidences() {
    let problem = homogeneous_problem(BoundaryMode::Dtn { n_f: 32 }, 1.0 / 8.0);
    let sys = assemble(&problem, None).unwrap();
    let lu = Factorization::new(&sys.matrix).unwrap();
    for alpha in [0.0, 1.0, 2.5] {
        let rhs = incident_rhs(&sys, &problem.media, alpha).unwrap();
        let sol = lu.solve(&sys.matrix, &rhs).unwrap();
        assert!(sol.residual < 1e-10);
    }
}

#[test]
fn outer_weights_reproduce_constant_and_first_harmonic() {
    let problem = homogeneous_problem(BoundaryMode::Dtn { n_f: 4 }, 1.0 / 8.0);
    let sys = assemble(&problem, None).unwrap();
    let nodes = &problem.mesh.disk.nodes;
    let mut u = vec![C64::new(0.0, 0.0); sys.dofs.n_dofs];
    for (i, p) in nodes.iter().enumerate() {
        u[sys.dofs.disk[i]] = C64::new(p[0], 0.0);
    }
    let c = sys.outer.coefficients(&u);
    // cos θ = (e^{iθ} + e^{−iθ})/2, so u_{±1} = √(2π)/2 up to interpolation
    assert!((c[5] - SQRT_2PI / 2.0).norm() < 1e-4, "{}", c[5]);
    assert!((c[3] - SQRT_2PI / 2.0).norm() < 1e-4);
    assert!(c[4].norm() < 1e-10);
}

#[test]
fn cutoff_derivatives_match_finite_differences() {
    let cut = Cutoff::default();
    let rho = 0.02;
    for r in [0.013, 0.015, 0.0165] {
        let z: f64 = (r as f64).ln();
        let d = 1e-5;
        let (f0, f1, f2) = cut.eval_z(z, rho);
        let (fp, _, _) = cut.eval_z(z + d, rho);
        let (fm, _, _) = cut.eval_z(z - d, rho);
        assert!(((fp - fm) / (2.0 * d) - f1).abs() < 1e-6);
        assert!(((fp - 2.0 * f0 + fm) / (d * d) - f2).abs() < 1e-3);
    }
    assert_eq!(cut.eval_z((0.01f64).ln(), rho).0, 1.0);
    assert_eq!(cut.eval_z((0.019f64).ln(), rho).0, 0.0);
    assert!(Cutoff { inner: 0.9, outer: 0.6 }.validate().is_err());
}

#[test]
fn rejects_mismatched_layer_specs() {
    let mut problem = triangle_problem(PI / 8.0, vacuum(30.0), 0.03);
    problem.pml[1].l0 = 2.0;
    assert!(matches!(assemble(&problem, None), Err(Error::Validation(_))));
    problem.pml.pop();
    assert!(assemble(&problem, None).is_err());
}

/// `∫ (u_z² + u_θ²) dz dθ` over the strip equals `∫ |∇u|² dx` over the
/// annulus it unfolds, and `∫ e^{2z} u² dz dθ = ∫ u² dx`.
#[test]
fn strip_forms_are_a_change_of_variables() {
    let lay = StripLayout::new(PI / 2.0, 1.0, 4.0, 4.0, 64, ZGrading::Uniform { aspect: 1.0 }).unwrap();
    let strip = crate::mesh::build_strip_mesh(&lay).unwrap();
    let spec = PmlSpec { rho: 1.0, l: 4.0, l0: 4.0, theta: 0.0 };
    let field = |p: [f64; 2]| {
        let (x, y) = (p[0].exp() * p[1].cos(), p[0].exp() * p[1].sin());
        x * y + x
    };
    let (mut energy, mut mass) = (0.0, 0.0);
    for (e, el) in strip.elements.iter().enumerate() {
        let c = strip.element_coords(e);
        let u: Vec<f64> = el.iter().map(|&v| field(strip.nodes[v])).collect();
        let quad = |sel: fn(C64, C64, C64) -> (C64, C64, C64)| {
            let k = element_matrix(&c, |x| {
                let (az, at, m) = stretched_coeffs(x[0], &spec)?;
                Ok(sel(az, at, m))
            })
            .unwrap();
            (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| k[i][j].re * u[i] * u[j]).sum::<f64>()
        };
        energy += quad(|az, at, _| (az, at, C64::new(0.0, 0.0)));
        mass -= quad(|_, _, m| (C64::new(0.0, 0.0), C64::new(0.0, 0.0), m));
    }
    let a = (-4.0f64).exp();
    let exact_energy = PI / 2.0 * (1.0 - a.powi(4)) + PI * (1.0 - a * a);
    // ∫ (xy + x)² = ∫ x²y² + x² = π/24 r⁶ + π/4 r⁴ over the annulus
    let exact_mass = PI / 24.0 * (1.0 - a.powi(6)) + PI / 4.0 * (1.0 - a.powi(4));
    assert!((energy - exact_energy).abs() < 1e-5 * exact_energy, "{energy} vs {exact_energy}");
    assert!((mass - exact_mass).abs() < 1e-5 * exact_mass, "{mass} vs {exact_mass}");
}
