use super::*;
use crate::assembly::{assemble, default_n_f, solve, BoundaryMode, Cutoff};
use crate::config::RunConfig;
use crate::corner_modes::outgoing_mode;
use crate::driver::Scene;
use crate::mesh::{build_strip_mesh, SceneGeometry, StripLayout, ZGrading};

fn critical_media() -> Media {
    Media { eps_d: 1.0, eps_m: C64::new(-1.18383, 0.0), mu_d: 1.0, mu_m: 1.0, k0: 30.0 }
}

fn coarse_scene(omega: f64) -> Scene {
    let mut c = RunConfig::sharp_triangle(omega);
    c.discretization.points_per_wavelength = 4.0;
    c.pml.tau1 = 1e-3;
    c.pml.tau2 = 1e-3;
    Scene::new(&c).unwrap()
}

struct SyntheticStrip {
    mesh: Mesh,
    spec: PmlSpec,
    mode: CornerMode,
    dofs: Vec<usize>,
}

fn synthetic_strip(m: usize) -> SyntheticStrip {
    let media = critical_media();
    let phi = 5.0 * PI / 12.0;
    let out = outgoing_mode(phi, media.kappa().re).unwrap();
    let spec = PmlSpec { rho: 0.02, l: 8.0, l0: 6.0, theta: -PI / 8.0 };
    let lay = StripLayout::new(phi, spec.rho, spec.l, spec.l0, m, ZGrading::Uniform { aspect: 1.0 }).unwrap();
    let mesh = build_strip_mesh(&lay).unwrap();
    let dofs = (0..mesh.num_nodes()).collect();
    SyntheticStrip { mesh, spec, mode: CornerMode::new(out, &media).unwrap(), dofs }
}

#[test]
fn overlap_recovers_exact_mode_multiple() {
    let s = synthetic_strip(48);
    let b = C64::new(3.7, 0.0);
    let u: Vec<C64> = s
        .mesh
        .nodes
        .iter()
        .map(|p| b * (s.mode.out.lambda * p[0]).exp() * s.mode.out.mode.value(p[1]))
        .collect();
    let z = s.spec.z_right() - 0.5 * s.spec.l0;
    let (got, zs) = extract_coefficient_overlap(&s.mesh, &s.dofs, &u, &critical_media(), &s.spec, &s.mode, z).unwrap();
    assert!((got - b).norm() < 1e-8, "{got}");
    assert!((zs - z).abs() < 0.2);
    assert!(s.mesh.strip.as_ref().unwrap().z_lines.contains(&zs));
}

#[test]
fn overlap_remainder_decays_with_depth() {
    let s = synthetic_strip(96);
    let b = C64::new(0.4, -1.1);
    let beta0 = 1.67509;
    // a regular remainder with an odd angular profile, like the mode
    let u: Vec<C64> = s
        .mesh
        .nodes
        .iter()
        .map(|p| {
            b * (s.mode.out.lambda * p[0]).exp() * s.mode.out.mode.value(p[1])
                + (beta0 * (p[0] - s.spec.z_right())).exp() * (p[1].sin() + 0.3 * (2.0 * p[1]).sin())
        })
        .collect();
    let errs: Vec<f64> = [1.0, 2.5, 4.0]
        .iter()
        .map(|d| {
            let z = s.spec.z_right() - d;
            let (got, _) = extract_coefficient_overlap(&s.mesh, &s.dofs, &u, &critical_media(), &s.spec, &s.mode, z).unwrap();
            (got - b).norm()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 0.05 * errs[0]);
}

#[test]
fn overlap_rejects_stretched_depth() {
    let s = synthetic_strip(48);
    let u = vec![C64::new(1.0, 0.0); s.mesh.num_nodes()];
    let z = s.spec.z_onset() - 0.1;
    assert!(extract_coefficient_overlap(&s.mesh, &s.dofs, &u, &critical_media(), &s.spec, &s.mode, z).is_err());
}

#[test]
fn corner_flux_formula() {
    assert_eq!(corner_flux(C64::new(0.0, 0.0), 2.0, 0.3), 0.0);
    let j1 = corner_flux(C64::new(0.3, 0.4), 2.0, -0.3);
    assert!((j1 + 2.0 * 0.25 * 0.3).abs() < 1e-15);
    let j2 = corner_flux(C64::new(0.6, 0.8), 2.0, -0.3);
    assert!((j2 - 4.0 * j1).abs() < 1e-14);
}

#[test]
fn lossless_inclusion_conserves_energy() {
    let mut geom = SceneGeometry::sharp_triangle(0.16, 0.25, 0.02);
    geom.holes.clear();
    let mesh = crate::mesh::SplitMesh::build(&geom, 0.03, &[]).unwrap();
    let media = Media { eps_d: 1.0, eps_m: C64::new(2.0, 0.0), mu_d: 1.0, mu_m: 1.0, k0: 30.0 };
    let problem = Problem { mesh, media, pml: vec![], boundary: BoundaryMode::Dtn { n_f: default_n_f(30.0, 0.25) }, outer_radius: 0.25 };
    let sys = assemble(&problem, Some(0.4)).unwrap();
    let sol = solve(&sys).unwrap();
    let j = exterior_flux(&sys, &media, &sol.values, 0.4).unwrap();
    let norm: f64 = sys.outer.coefficients(&sol.values).iter().map(|c| c.norm_sqr()).sum::<f64>() * 0.25;
    assert!(j.abs() <= 1e-6 * norm, "J_ext = {j}, ‖u‖² = {norm}");
}

#[test]
fn incident_field_alone_has_no_net_flux() {
    let geom = SceneGeometry::homogeneous(1.0);
    let mesh = crate::mesh::SplitMesh::build(&geom, 0.05, &[]).unwrap();
    let k = 2.0 * PI;
    let media = Media { eps_d: 1.0, eps_m: C64::new(1.0, 0.0), mu_d: 1.0, mu_m: 1.0, k0: k };
    let problem = Problem { mesh, media, pml: vec![], boundary: BoundaryMode::Dtn { n_f: default_n_f(k, 1.0) }, outer_radius: 1.0 };
    let sys = assemble(&problem, None).unwrap();
    let mut u = vec![C64::new(0.0, 0.0); sys.dofs.n_dofs];
    for (i, p) in problem.mesh.disk.nodes.iter().enumerate() {
        u[sys.dofs.disk[i]] = C64::from_polar(1.0, k * (p[0] * 0.2f64.cos() + p[1] * 0.2f64.sin()));
    }
    let j = exterior_flux(&sys, &media, &u, 0.2).unwrap();
    // relative to the flux scale k·|∂D_R| of a unit wave
    assert!(j.abs() < 1e-5 * k * 2.0 * PI, "{j}");
}

#[test]
fn critical_run_traps_energy_at_the_corners() {
    let scene = coarse_scene(9.0);
    let level = scene.level(0).unwrap();
    let duals = level.duals(&scene, Cutoff::default()).unwrap();
    let res = level.solve_incidence(&scene, -PI / 12.0, Some(&duals)).unwrap();
    let rep = &res.report;
    assert!(rep.j_ext < 0.0, "J_ext = {}", rep.j_ext);
    assert!(rep.corners.iter().all(|c| c.j <= 0.0));
    assert!(rep.mismatch < 0.1, "mismatch {}", rep.mismatch);
    // reciprocity: ℓ_inc(w) = uᵀ F_dual for the complex-symmetric matrix
    for (n, c) in scene.corners.iter().enumerate() {
        let f = crate::assembly::dual_rhs(&level.problem, &level.system, n, &c.mode.out, Cutoff::default()).unwrap();
        let lhs: C64 = res.rhs.iter().zip(&duals.solutions[n].values).map(|(a, b)| a * b).sum();
        let rhs: C64 = res.solution.values.iter().zip(&f).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).norm() <= 1e-8 * lhs.norm(), "corner {n}: {lhs} vs {rhs}");
        // linearity in the load
        let doubled: Vec<C64> = res.rhs.iter().map(|v| v * 2.0).collect();
        let b1 = extract_coefficient_dual(&res.rhs, &duals.solutions[n].values, &c.mode).unwrap();
        let b2 = extract_coefficient_dual(&doubled, &duals.solutions[n].values, &c.mode).unwrap();
        assert_eq!(b2, b1 * 2.0);
    }
    let json = rep.to_json().unwrap();
    let back: EnergyReport = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, rep);
    assert_eq!(rep.csv_row().split(',').count(), EnergyReport::csv_header(3).split(',').count());
}

#[test]
fn reconstruction_reproduces_plane_wave_and_masks_layers() {
    let k0 = 30.0;
    let mut scene = coarse_scene(9.0);
    // same meshes and layers, homogeneous medium
    scene.media.eps_m = C64::new(1.0, 0.0);
    let mut mesh = scene.mesh().unwrap();
    for _ in 0..2 {
        mesh = mesh.refined(&scene.geometry).unwrap();
    }
    let mut problem = scene.problem(mesh);
    problem.media.k0 = k0;
    let sys = assemble(&problem, Some(0.5)).unwrap();
    let sol = solve(&sys).unwrap();
    let n = 121;
    let field = reconstruct_field(&problem, &sys, &sol.values, n).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    let mut layer = 0;
    let mut expected_layer = 0;
    for (j, &y) in field.ys.iter().enumerate() {
        for (i, &x) in field.xs.iter().enumerate() {
            let k = j * n + i;
            let inside = x.hypot(y) <= problem.outer_radius;
            if problem.mesh.corners.iter().zip(&problem.pml).any(|(c, s)| inside && c.to_local([x, y]).0 < (s.z_onset()).exp()) {
                expected_layer += 1;
            }
            match field.flags[k] {
                SampleFlag::Physical => {
                    let ex = C64::from_polar(1.0, k0 * (x * 0.5f64.cos() + y * 0.5f64.sin()));
                    num += (field.values[k] - ex).norm_sqr();
                    den += ex.norm_sqr();
                }
                SampleFlag::Layer => layer += 1,
                SampleFlag::Outside => assert!(!inside || x.hypot(y) > 0.999 * problem.outer_radius),
            }
        }
    }
    assert!((num / den).sqrt() < 1e-3, "{}", (num / den).sqrt());
    assert_eq!(layer, expected_layer);
    assert!(field.to_csv().lines().count() == n * n + 1);
}

#[test]
fn strip_and_disk_agree_on_the_ring() {
    let scene = coarse_scene(11.0);
    let level = scene.level(0).unwrap();
    let res = level.solve_incidence(&scene, 1.0, None).unwrap();
    let sampler = FieldSampler::new(&level.problem, &level.system, &res.solution.values).unwrap();
    for (n, s) in level.problem.mesh.strips.iter().enumerate() {
        let lay = s.strip.as_ref().unwrap();
        for (c, &d) in level.problem.mesh.disk.rings[n].iter().enumerate() {
            let strip_v = sampler.strip_value(n, lay.z_right(), lay.ring_theta(c)).unwrap();
            let disk_v = res.solution.values[level.system.dofs.disk[d]];
            assert!((strip_v - disk_v).norm() <= 1e-10 * (1.0 + disk_v.norm()));
        }
    }
}

#[test]
fn sampling_grids_must_match() {
    let a = SampledField { xs: vec![0.0, 1.0], ys: vec![0.0, 1.0], values: vec![C64::new(1.0, 0.0); 4], flags: vec![SampleFlag::Physical; 4] };
    let mut b = a.clone();
    assert_eq!(a.relative_difference(&b).unwrap(), 0.0);
    b.xs[1] = 2.0;
    assert!(a.relative_difference(&b).is_err());
}
