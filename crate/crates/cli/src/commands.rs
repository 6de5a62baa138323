//! Subcommand implementations. Every artifact is a pure function of the
//! resolved configuration, so repeated runs write identical bytes.

use cornerwave::assembly::{Cutoff, LinearSystem, Media};
use cornerwave::config::RunConfig;
use cornerwave::corner_modes::{flux_integral, select_outgoing, CharacteristicFn, Parity, SingularExponentSet, Window};
use cornerwave::driver::{DualSet, IncidenceResult, Level, Scene};
use cornerwave::mesh::io::{msh_string, vtk_string};
use cornerwave::mesh::{Mesh, Region, SplitMesh};
use cornerwave::pml::admissible_theta;
use cornerwave::postprocess::{reconstruct_field, region_counts, EnergyReport};
use cornerwave::{Error, Result, C64};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn to_json(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Validation(e.to_string()))
}

pub fn modes(config: &RunConfig, out: &Path) -> Result<()> {
    let geometry = config.geometry.scene()?;
    let media = Media::from_config(&config.material.resolve()?)?;
    let kappa = media.kappa();
    let window = Window::right_half(10.0, 10.0);
    let mut csv = String::from(
        "corner,aperture,kappa_re,kappa_im,kind,parity,lambda_re,lambda_im,residual,flux_sign,outgoing,theta_lo,theta_hi\n",
    );
    let mut imaginary_pairs = 0;
    for n in 0..geometry.holes.len() {
        let corner = geometry.corner(n);
        let phi = corner.aperture;
        let set = SingularExponentSet::compute(phi, kappa, &window)?;
        let mut interval = (String::new(), String::new());
        let mut pair_rows = Vec::new();
        if let Some(ie) = set.imaginary {
            imaginary_pairs += 1;
            let out_mode = select_outgoing(phi, kappa.re, ie.eta)?;
            if let Ok(iv) = admissible_theta(&set.roots, out_mode.lambda) {
                interval = (iv.lo.to_string(), iv.hi.to_string());
            }
            let sign = flux_integral(ie.eta, phi, kappa.re, ie.parity, media.eps_d).signum();
            for s in [1.0, -1.0] {
                let lambda = C64::new(0.0, s * ie.eta);
                let residual = CharacteristicFn::new(phi, kappa, ie.parity)?.residual(lambda);
                pair_rows.push((lambda, ie.parity, residual, format!("{sign}"), lambda == out_mode.lambda));
            }
        }
        let mut line = |kind: &str, lambda: C64, parity: Parity, residual: f64, sign: &str, outgoing: bool| {
            let _ = writeln!(
                csv,
                "{n},{phi},{},{},{kind},{},{:e},{:e},{residual:e},{sign},{outgoing},{},{}",
                kappa.re,
                kappa.im,
                parity.label(),
                lambda.re,
                lambda.im,
                interval.0,
                interval.1
            );
        };
        for (lambda, parity, residual, sign, outgoing) in &pair_rows {
            line("imaginary", *lambda, *parity, *residual, sign, *outgoing);
        }
        for r in &set.roots {
            line("complex", r.lambda, r.parity, r.residual, "", false);
        }
        println!(
            "corner {n}: aperture {phi:.6}, {} complex exponent(s), {}",
            set.roots.len(),
            if set.imaginary.is_some() { "black-hole pair" } else { "no black-hole pair" }
        );
    }
    println!("{imaginary_pairs} corner(s) with a purely imaginary pair at κ = {kappa}");
    write(out, "modes.csv", &csv)
}

fn disk_values(mesh: &Mesh, dofs: &[usize], u: &[C64]) -> Vec<C64> {
    (0..mesh.num_nodes()).map(|i| u[dofs[i]]).collect()
}

fn region_scalar(mesh: &Mesh) -> Vec<f64> {
    // node-wise material flag: 1 where any adjacent element is metal
    let mut v = vec![0.0; mesh.num_nodes()];
    for (el, r) in mesh.elements.iter().zip(&mesh.regions) {
        if *r == Region::Metal {
            for &i in el {
                v[i] = 1.0;
            }
        }
    }
    v
}

fn mesh_stats(split: &SplitMesh, sys: Option<&LinearSystem>) -> Value {
    let (diel, metal) = region_counts(&split.disk);
    let strips: Vec<Value> = split
        .strips
        .iter()
        .map(|s| {
            let lay = s.strip.as_ref();
            json!({
                "nodes": s.num_nodes(),
                "elements": s.num_elements(),
                "m_theta": lay.map(|l| l.m_theta),
                "n_z": lay.map(|l| l.n_z()),
            })
        })
        .collect();
    json!({
        "disk": {
            "nodes": split.disk.num_nodes(),
            "elements": split.disk.num_elements(),
            "dielectric_elements": diel,
            "metal_elements": metal,
        },
        "strips": strips,
        "n_dofs": sys.map(|s| s.dofs.n_dofs),
    })
}

fn refined_mesh(scene: &Scene) -> Result<SplitMesh> {
    let mut mesh = scene.mesh()?;
    for _ in 0..scene.config.run.refine {
        mesh = mesh.refined(&scene.geometry)?;
    }
    Ok(mesh)
}

fn scene(config: &RunConfig) -> Result<Scene> {
    let scene = Scene::new(config)?;
    for w in &scene.warnings {
        eprintln!("warning: {w}");
    }
    Ok(scene)
}

pub fn mesh(config: &RunConfig, out: &Path) -> Result<()> {
    let scene = scene(config)?;
    let split = refined_mesh(&scene)?;
    write(out, "disk.msh", &msh_string(&split.disk)?)?;
    write(out, "disk.vtk", &vtk_string(&split.disk, &[], &[("metal", &region_scalar(&split.disk))])?)?;
    for (n, s) in split.strips.iter().enumerate() {
        write(out, &format!("strip_{n}.vtk"), &vtk_string(s, &[], &[("metal", &region_scalar(s))])?)?;
    }
    let stats = json!({ "h": scene.h, "refine": config.run.refine, "mesh": mesh_stats(&split, None) });
    write(out, "mesh.json", &to_json(&stats)?)
}

/// Disk and strip fields of one solution vector.
fn write_fields(out: &Path, prefix: &str, level: &Level, u: &[C64]) -> Result<()> {
    let mesh = &level.problem.mesh;
    let dofs = &level.system.dofs;
    let disk = disk_values(&mesh.disk, &dofs.disk, u);
    let abs: Vec<f64> = disk.iter().map(|v| v.norm()).collect();
    write(
        out,
        &format!("{prefix}.vtk"),
        &vtk_string(&mesh.disk, &[("u", &disk)], &[("abs_u", &abs), ("metal", &region_scalar(&mesh.disk))])?,
    )?;
    for (n, s) in mesh.strips.iter().enumerate() {
        let v = disk_values(s, &dofs.strips[n], u);
        let a: Vec<f64> = v.iter().map(|x| x.norm()).collect();
        write(out, &format!("{prefix}_strip_{n}.vtk"), &vtk_string(s, &[("u", &v)], &[("abs_u", &a)])?)?;
    }
    Ok(())
}

fn run_report(scene: &Scene, level: &Level, res: &IncidenceResult) -> Result<Value> {
    Ok(json!({
        "config": to_value(&scene.config)?,
        "resolved": {
            "h": scene.h,
            "k0": scene.media.k0,
            "kappa": [scene.media.kappa().re, scene.media.kappa().im],
            "boundary": to_value(&scene.boundary)?,
            "corners": to_value(&scene.corners)?,
        },
        "warnings": scene.warnings,
        "mesh": mesh_stats(&level.problem.mesh, Some(&level.system)),
        "residual": res.solution.residual,
        "overlap_depths": res.overlap.iter().map(|o| o.1).collect::<Vec<_>>(),
        "energy": to_value(&res.report)?,
    }))
}

fn duals_if_any(scene: &Scene, level: &Level, cutoff: Cutoff) -> Result<Option<DualSet>> {
    if scene.corners.is_empty() {
        Ok(None)
    } else {
        level.duals(scene, cutoff).map(Some)
    }
}

pub fn solve(config: &RunConfig, out: &Path) -> Result<()> {
    let scene = scene(config)?;
    let level = Level::new(scene.problem(refined_mesh(&scene)?), config.run.refine)?;
    let duals = duals_if_any(&scene, &level, config.run.cutoff())?;
    let res = level.solve_incidence(&scene, config.run.alpha_inc, duals.as_ref())?;
    println!(
        "n_dofs {}, residual {:.3e}, J_ext {:.6e}, Σ J_n {:.6e}, mismatch {:.3e}",
        level.n_dofs(),
        res.solution.residual,
        res.report.j_ext,
        res.report.corner_sum(),
        res.report.mismatch
    );
    write_fields(out, "solution", &level, &res.solution.values)?;
    let grid = reconstruct_field(&level.problem, &level.system, &res.solution.values, config.run.grid_points)?;
    write(out, "field.csv", &grid.to_csv())?;
    let n = res.report.corners.len();
    write(out, "energy.csv", &format!("{}\n{}\n", EnergyReport::csv_header(n), res.report.csv_row()))?;
    write(out, "report.json", &to_json(&run_report(&scene, &level, &res)?)?)
}

pub fn sweep(config: &RunConfig, out: &Path) -> Result<()> {
    let scene = scene(config)?;
    let level = Level::new(scene.problem(refined_mesh(&scene)?), config.run.refine)?;
    let duals = duals_if_any(&scene, &level, config.run.cutoff())?;
    let angles = config.run.sweep_angles();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(angles.len().max(1));
    let chunk = angles.len().div_ceil(workers).max(1);
    let mut reports: Vec<EnergyReport> = std::thread::scope(|s| {
        let handles: Vec<_> = angles
            .chunks(chunk)
            .map(|part| {
                let (scene, level, duals) = (&scene, &level, duals.as_ref());
                s.spawn(move || {
                    part.iter()
                        .map(|&a| level.solve_incidence(scene, a, duals).map(|r| r.report))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Result<Vec<Vec<_>>>>()
    })?
    .into_iter()
    .flatten()
    .collect();
    reports.sort_by(|a, b| a.alpha_inc.total_cmp(&b.alpha_inc));
    let n = scene.corners.len();
    let mut csv = EnergyReport::csv_header(n);
    csv.push_str(",mismatch\n");
    for r in &reports {
        let _ = writeln!(csv, "{},{:.6e}", r.csv_row(), r.mismatch);
    }
    println!("{} incidences, n_dofs {}", reports.len(), level.n_dofs());
    write(out, "sweep.csv", &csv)
}

/// A second cutoff shifted towards the corner, for the robustness check.
fn alternative_cutoff(c: Cutoff) -> Result<Cutoff> {
    let shifted = Cutoff { inner: c.inner - 0.1, outer: c.outer - 0.05 };
    if shifted.validate().is_ok() {
        return Ok(shifted);
    }
    let narrowed = Cutoff { inner: 0.5 * c.inner, outer: c.inner + 0.5 * (c.outer - c.inner) };
    narrowed.validate()?;
    Ok(narrowed)
}

pub fn dual(config: &RunConfig, out: &Path) -> Result<()> {
    let scene = scene(config)?;
    if scene.corners.is_empty() {
        return Err(Error::Config("no corner carries a layer, so there is no dual problem to solve".into()));
    }
    let level = Level::new(scene.problem(refined_mesh(&scene)?), config.run.refine)?;
    let cutoff = config.run.cutoff();
    let alt_cutoff = alternative_cutoff(cutoff)?;
    let duals = level.duals(&scene, cutoff)?;
    let alt = level.duals(&scene, alt_cutoff)?;
    let alpha = config.run.alpha_inc;
    let res = level.solve_incidence(&scene, alpha, Some(&duals))?;
    let res_alt = level.solve_incidence(&scene, alpha, Some(&alt))?;
    let mut csv = String::from("corner,method,cutoff_inner,cutoff_outer,b_re,b_im,abs_b,j,relative_to_dual\n");
    for (n, (c, a)) in res.report.corners.iter().zip(&res_alt.report.corners).enumerate() {
        let ov = res.overlap[n].0;
        let mode = &scene.corners[n].mode;
        let rows = [
            ("overlap", f64::NAN, f64::NAN, ov),
            ("dual", cutoff.inner, cutoff.outer, c.b),
            ("dual", alt_cutoff.inner, alt_cutoff.outer, a.b),
        ];
        for (method, ci, co, b) in rows {
            let j = cornerwave::postprocess::corner_flux(b, mode.eta(), mode.weight);
            let rel = (b - c.b).norm() / c.b.norm();
            let (ci, co) = if method == "overlap" { (String::new(), String::new()) } else { (ci.to_string(), co.to_string()) };
            let _ = writeln!(csv, "{n},{method},{ci},{co},{:e},{:e},{:e},{:e},{:e}", b.re, b.im, b.norm(), j, rel);
        }
        println!(
            "corner {n}: overlap vs dual {:.3e}, cutoff change {:.3e}",
            (ov - c.b).norm() / c.b.norm(),
            (a.b - c.b).norm() / c.b.norm()
        );
    }
    for (n, d) in duals.solutions.iter().enumerate() {
        write_fields(out, &format!("dual_{n}"), &level, &d.values)?;
    }
    write(out, "coefficients.csv", &csv)
}
