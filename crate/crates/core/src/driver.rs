//! End-to-end runs: configuration to meshes, factorizations, solutions
//! and energy reports.

use crate::assembly::{
    assemble, dual_rhs, incident_rhs, BoundaryMode, Cutoff, Factorization, LinearSystem, Media, Problem, Solution,
};
use crate::config::{BoundaryKind, RunConfig};
use crate::corner_modes::{outgoing_mode, CornerSpec, SingularExponentSet, Window};
use crate::error::{Error, Result};
use crate::materials::MaterialConfig;
use crate::mesh::{compatible_m_theta, SceneGeometry, SplitMesh, StripLayout, ZGrading};
use crate::pml::{admissible_theta, default_strip_geometry, is_admissible, PmlSpec, ThetaInterval};
use crate::postprocess::{
    exterior_flux, extract_coefficient_dual, extract_coefficient_overlap, CornerMode, EnergyReport,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Resolved data of one corner that carries a stretched strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerSetup {
    pub vertex: usize,
    pub corner: CornerSpec,
    pub exponents: SingularExponentSet,
    pub mode: CornerMode,
    pub interval: ThetaInterval,
    pub spec: PmlSpec,
    pub layout: StripLayout,
}

/// Everything fixed before meshing.
#[derive(Debug, Clone)]
pub struct Scene {
    pub config: RunConfig,
    pub material: MaterialConfig,
    pub media: Media,
    /// Holes only at corners that carry a strip.
    pub geometry: SceneGeometry,
    pub corners: Vec<CornerSetup>,
    pub h: f64,
    pub boundary: BoundaryMode,
    pub warnings: Vec<String>,
}

impl Scene {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let material = config.material.resolve()?;
        let media = Media::from_config(&material)?;
        let disc = &config.discretization;
        let k = media.k();
        let h = disc.h.value().unwrap_or(2.0 * PI / k / disc.points_per_wavelength);
        let mut full = config.geometry.scene()?;
        full.interface_factor = disc.interface_factor;
        let kappa = media.kappa();
        let mut warnings = Vec::new();
        let mut holes = Vec::new();
        let mut critical = 0;
        let n_vertices = full.holes.len();
        for (n, hole) in full.holes.iter().enumerate() {
            let (phi, _) = full.vertex_angle(hole.vertex);
            let out = if kappa.im == 0.0 { outgoing_mode(phi, kappa.re).ok() } else { None };
            if let Some(out) = out {
                critical += 1;
                if config.pml.enabled {
                    holes.push((n, *hole, out));
                }
            }
        }
        if critical > 0 && !config.pml.enabled {
            warnings.push(format!(
                "contrast {:.6} lies in the critical interval of {critical} corner(s) and corner layers are disabled: \
                 the discrete solution is not expected to converge under refinement",
                kappa.re
            ));
        }
        let mut geometry = full.clone();
        geometry.holes = holes.iter().map(|h| h.1).collect();
        let mut corners = Vec::new();
        for (slot, (n, hole, out)) in holes.iter().enumerate() {
            let corner = full.corner(*n);
            let eta = out.mode.eta;
            let window = Window::right_half(10.0, 10.0);
            let exponents = SingularExponentSet::compute(corner.aperture, kappa, &window)?;
            let interval = admissible_theta(&exponents.roots, out.lambda)?;
            let theta = match config.pml.theta.value() {
                Some(t) => {
                    let t = t.get(*n, n_vertices)?;
                    if !is_admissible(t, &exponents.roots, out.lambda) {
                        return Err(Error::Config(format!(
                            "stretch angle {t} at corner {n} lies outside the admissible interval ({}, {})",
                            interval.lo, interval.hi
                        )));
                    }
                    t
                }
                None => interval.default_theta(),
            };
            let (l0, l) = default_strip_geometry(media.k0, hole.rho, eta, theta, config.pml.tolerances())?;
            let spec = PmlSpec { rho: hole.rho, l, l0, theta };
            let strip = &disc.strip;
            let m_theta = match strip.m_theta.value() {
                Some(v) => v.get(*n, n_vertices)?,
                None => {
                    let ring = (2.0 * PI * hole.rho / (disc.interface_factor * h)).ceil() as usize;
                    let modal = (strip.angular_per_eta * eta).ceil() as usize;
                    compatible_m_theta(corner.aperture, ring.max(modal).max(16))?
                }
            };
            geometry.holes[slot].m_theta = m_theta;
            let max_step = strip.max_step.value().unwrap_or(strip.max_step_eta / eta);
            let grading = ZGrading::Graded { first_aspect: strip.first_aspect, growth: strip.growth, max_step };
            let layout = StripLayout::new(corner.aperture, hole.rho, l, l0, m_theta, grading)?;
            let mode = CornerMode::new(*out, &media)?;
            corners.push(CornerSetup { vertex: hole.vertex, corner, exponents, mode, interval, spec, layout });
        }
        geometry.validate()?;
        let boundary = match config.run.boundary {
            BoundaryKind::Dtn => BoundaryMode::Dtn {
                n_f: disc.n_f.value().unwrap_or(crate::assembly::default_n_f(k, geometry.outer_radius)),
            },
            BoundaryKind::Abc => BoundaryMode::Abc,
        };
        Ok(Self { config: config.clone(), material, media, geometry, corners, h, boundary, warnings })
    }

    /// Coarsest mesh.
    pub fn mesh(&self) -> Result<SplitMesh> {
        let layouts: Vec<StripLayout> = self.corners.iter().map(|c| c.layout.clone()).collect();
        SplitMesh::build(&self.geometry, self.h, &layouts)
    }

    pub fn problem(&self, mesh: SplitMesh) -> Problem {
        Problem {
            mesh,
            media: self.media,
            pml: self.corners.iter().map(|c| c.spec).collect(),
            boundary: self.boundary,
            outer_radius: self.geometry.outer_radius,
        }
    }

    /// Assembled and factorized level after `refine` uniform refinements.
    pub fn level(&self, refine: usize) -> Result<Level> {
        let mut mesh = self.mesh()?;
        for _ in 0..refine {
            mesh = mesh.refined(&self.geometry)?;
        }
        Level::new(self.problem(mesh), refine)
    }

    /// Levels `0..=refine`, each obtained from the previous one.
    pub fn hierarchy(&self, refine: usize) -> Result<Vec<Level>> {
        let mut out = Vec::with_capacity(refine + 1);
        let mut mesh = Some(self.mesh()?);
        for r in 0..=refine {
            let current = mesh.take().expect("mesh of the current level");
            if r < refine {
                mesh = Some(current.refined(&self.geometry)?);
            }
            out.push(Level::new(self.problem(current), r)?);
        }
        Ok(out)
    }
}

/// One factorized discretization.
pub struct Level {
    pub refine: usize,
    pub problem: Problem,
    pub system: LinearSystem,
    pub lu: Factorization,
}

/// Outcome of one plane-wave solve.
#[derive(Debug, Clone)]
pub struct IncidenceResult {
    pub alpha: f64,
    pub solution: Solution,
    pub rhs: Vec<C64>,
    /// Overlap coefficients and the depths actually used.
    pub overlap: Vec<(C64, f64)>,
    pub report: EnergyReport,
}

/// Dual solutions of every corner, reused across incidences.
#[derive(Debug, Clone)]
pub struct DualSet {
    pub cutoff: Cutoff,
    pub solutions: Vec<Solution>,
}

impl Level {
    pub fn new(problem: Problem, refine: usize) -> Result<Self> {
        let system = assemble(&problem, None)?;
        let lu = Factorization::new(&system.matrix)?;
        Ok(Self { refine, problem, system, lu })
    }

    pub fn n_dofs(&self) -> usize {
        self.system.dofs.n_dofs
    }

    /// Solves the dual problem of each corner with cutoff `cutoff`.
    pub fn duals(&self, scene: &Scene, cutoff: Cutoff) -> Result<DualSet> {
        let mut solutions = Vec::with_capacity(scene.corners.len());
        for (n, c) in scene.corners.iter().enumerate() {
            let f = dual_rhs(&self.problem, &self.system, n, &c.mode.out, cutoff)?;
            solutions.push(self.lu.solve(&self.system.matrix, &f)?);
        }
        Ok(DualSet { cutoff, solutions })
    }

    /// Solves for incidence `alpha`; corner fluxes use the dual
    /// coefficients when `duals` is given and the overlap ones otherwise.
    pub fn solve_incidence(&self, scene: &Scene, alpha: f64, duals: Option<&DualSet>) -> Result<IncidenceResult> {
        let media = &self.problem.media;
        let rhs = incident_rhs(&self.system, media, alpha)?;
        let solution = self.lu.solve(&self.system.matrix, &rhs)?;
        let j_ext = exterior_flux(&self.system, media, &solution.values, alpha)?;
        let mut overlap = Vec::with_capacity(scene.corners.len());
        let mut coeffs = Vec::with_capacity(scene.corners.len());
        for (n, c) in scene.corners.iter().enumerate() {
            let depth = scene.config.run.z_eval_depth.value().unwrap_or(0.5 * c.spec.l0);
            let ov = extract_coefficient_overlap(
                &self.problem.mesh.strips[n],
                &self.system.dofs.strips[n],
                &solution.values,
                media,
                &c.spec,
                &c.mode,
                c.spec.z_right() - depth,
            )?;
            let b = match duals {
                Some(d) => extract_coefficient_dual(&rhs, &d.solutions[n].values, &c.mode)?,
                None => ov.0,
            };
            overlap.push(ov);
            coeffs.push((b, c.mode));
        }
        let mut report = EnergyReport::new(alpha, j_ext, &coeffs, media, self.problem.outer_radius);
        for (n, ov) in overlap.iter().enumerate() {
            report.corners[n].b_overlap = Some(ov.0);
        }
        report.metadata.insert("refine".into(), self.refine.to_string());
        report.metadata.insert("n_dofs".into(), self.n_dofs().to_string());
        report.metadata.insert("residual".into(), format!("{:.3e}", solution.residual));
        report.metadata.insert("coefficients".into(), if duals.is_some() { "dual" } else { "overlap" }.into());
        Ok(IncidenceResult { alpha, solution, rhs, overlap, report })
    }
}
