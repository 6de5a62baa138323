//! Run configuration read from TOML.
//!
//! Every block is optional except `material`; unknown keys are rejected.
//! Fields that accept `"auto"` are resolved by the driver and the
//! resolved values are written back into the run report.

use crate::assembly::Cutoff;
use crate::error::{Error, Result};
use crate::materials::{MaterialConfig, MetalModel, LIGHT_SPEED};
use crate::mesh::disk::HoleDecl;
use crate::mesh::SceneGeometry;
use crate::pml::LayerTolerances;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The literal string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

/// A value or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(AutoKeyword),
}

impl<T> Default for AutoOr<T> {
    fn default() -> Self {
        AutoOr::Auto(AutoKeyword::Auto)
    }
}

impl<T: Clone> AutoOr<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            AutoOr::Value(v) => Some(v.clone()),
            AutoOr::Auto(_) => None,
        }
    }
}

/// A scalar shared by all corners or one value per corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerCorner<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Clone> PerCorner<T> {
    pub fn get(&self, n: usize, count: usize) -> Result<T> {
        match self {
            PerCorner::All(v) => Ok(v.clone()),
            PerCorner::Each(v) if v.len() == count => Ok(v[n].clone()),
            PerCorner::Each(v) => Err(Error::Config(format!("{} per-corner values for {count} corners", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Isosceles triangle with apertures π/6, 5π/12, 5π/12.
    #[serde(rename = "sharp-triangle")]
    SharpTriangle,
    /// Empty disk, no inclusion.
    #[serde(rename = "homogeneous")]
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default = "default_outer_radius")]
    pub outer_radius: f64,
    /// Circumradius of the preset triangle.
    #[serde(default = "default_circumradius")]
    pub circumradius: f64,
    /// Counterclockwise vertices, used when no preset is given.
    #[serde(default)]
    pub polygon: Option<Vec<[f64; 2]>>,
    /// Hole radius around each corner.
    #[serde(default = "default_rho")]
    pub rho: PerCorner<f64>,
}

fn default_outer_radius() -> f64 {
    0.25
}
fn default_circumradius() -> f64 {
    0.16
}
fn default_rho() -> PerCorner<f64> {
    PerCorner::All(0.02)
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            preset: Some(Preset::SharpTriangle),
            outer_radius: default_outer_radius(),
            circumradius: default_circumradius(),
            polygon: None,
            rho: default_rho(),
        }
    }
}

impl GeometryConfig {
    /// Scene with a hole declared at every polygon vertex.
    pub fn scene(&self) -> Result<SceneGeometry> {
        let mut g = match (self.preset, &self.polygon) {
            (Some(_), Some(_)) => return Err(Error::Config("give either a preset or a polygon, not both".into())),
            (Some(Preset::SharpTriangle), None) => SceneGeometry::sharp_triangle(self.circumradius, self.outer_radius, 0.02),
            (Some(Preset::Homogeneous), None) => SceneGeometry::homogeneous(self.outer_radius),
            (None, Some(p)) => {
                let mut g = SceneGeometry::homogeneous(self.outer_radius);
                g.polygon = p.clone();
                g.holes = (0..p.len()).map(|vertex| HoleDecl { vertex, rho: 0.0, m_theta: 0 }).collect();
                g
            }
            (None, None) => return Err(Error::Config("geometry needs a preset or a polygon".into())),
        };
        let count = g.holes.len();
        for n in 0..count {
            g.holes[n].rho = self.rho.get(n, count)?;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialBlock {
    #[serde(default = "one")]
    pub eps_d: f64,
    #[serde(default = "one")]
    pub mu_d: f64,
    #[serde(default = "one")]
    pub mu_m: f64,
    pub omega: Option<f64>,
    pub omega_p: Option<f64>,
    #[serde(default)]
    pub gamma: f64,
    /// Direct metal permittivity `[re, im]`, replacing the Drude law.
    pub eps_m: Option<[f64; 2]>,
    /// Direct free-space wavenumber, replacing `omega / light_speed`.
    pub k0: Option<f64>,
    #[serde(default = "light_speed")]
    pub light_speed: f64,
}

fn one() -> f64 {
    1.0
}
fn light_speed() -> f64 {
    LIGHT_SPEED
}

impl MaterialBlock {
    pub fn resolve(&self) -> Result<MaterialConfig> {
        let metal = match (self.eps_m, self.omega_p) {
            (Some(_), Some(_)) => return Err(Error::Config("give either eps_m or omega_p, not both".into())),
            (Some(e), None) => MetalModel::Fixed { eps_m: C64::new(e[0], e[1]) },
            (None, Some(omega_p)) => MetalModel::Drude { omega_p, gamma: self.gamma },
            (None, None) => return Err(Error::Config("material needs eps_m or omega_p".into())),
        };
        let omega = match (self.omega, self.k0, metal) {
            (Some(w), _, _) => w,
            (None, Some(k0), MetalModel::Fixed { .. }) => k0 * self.light_speed,
            _ => return Err(Error::Config("material needs omega (or k0 with a fixed eps_m)".into())),
        };
        let m = MaterialConfig {
            eps_d: self.eps_d,
            mu_d: self.mu_d,
            mu_m: self.mu_m,
            metal,
            omega,
            light_speed: self.light_speed,
            k0_override: self.k0,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Growth law of the strip steps in `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    #[serde(default = "first_aspect")]
    pub first_aspect: f64,
    #[serde(default = "growth")]
    pub growth: f64,
    /// Largest step; `"auto"` is `max_step_eta / η`.
    #[serde(default)]
    pub max_step: AutoOr<f64>,
    #[serde(default = "max_step_eta")]
    pub max_step_eta: f64,
    /// θ-intervals per strip; `"auto"` takes the smallest compatible
    /// count above both the ring resolution and `angular_per_eta · η`.
    #[serde(default)]
    pub m_theta: AutoOr<PerCorner<usize>>,
    #[serde(default = "angular_per_eta")]
    pub angular_per_eta: f64,
}

fn first_aspect() -> f64 {
    1.0
}
fn growth() -> f64 {
    1.25
}
fn max_step_eta() -> f64 {
    1.0
}
fn angular_per_eta() -> f64 {
    6.0
}

impl Default for StripConfig {
    fn default() -> Self {
        Self {
            first_aspect: first_aspect(),
            growth: growth(),
            max_step: AutoOr::default(),
            max_step_eta: max_step_eta(),
            m_theta: AutoOr::default(),
            angular_per_eta: angular_per_eta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Mesh size on the coarsest level; `"auto"` is one wavelength over
    /// `points_per_wavelength`.
    #[serde(default)]
    pub h: AutoOr<f64>,
    #[serde(default = "points_per_wavelength")]
    pub points_per_wavelength: f64,
    #[serde(default)]
    pub n_f: AutoOr<usize>,
    #[serde(default = "interface_factor")]
    pub interface_factor: f64,
    #[serde(default)]
    pub strip: StripConfig,
}

fn points_per_wavelength() -> f64 {
    6.0
}
fn interface_factor() -> f64 {
    0.25
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            h: AutoOr::default(),
            points_per_wavelength: points_per_wavelength(),
            n_f: AutoOr::default(),
            interface_factor: interface_factor(),
            strip: StripConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub theta: AutoOr<PerCorner<f64>>,
    #[serde(default = "tau")]
    pub tau1: f64,
    #[serde(default = "tau")]
    pub tau2: f64,
}

fn yes() -> bool {
    true
}
fn tau() -> f64 {
    1e-8
}

impl Default for PmlConfig {
    fn default() -> Self {
        Self { enabled: true, theta: AutoOr::default(), tau1: tau(), tau2: tau() }
    }
}

impl PmlConfig {
    pub fn tolerances(&self) -> LayerTolerances {
        LayerTolerances { tau1: self.tau1, tau2: self.tau2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    #[default]
    Dtn,
    Abc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Incidence angle of a single solve.
    #[serde(default)]
    pub alpha_inc: f64,
    /// Explicit sweep angles.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    /// Equally spaced sweep over `[0, 2π)` when `sweep` is absent.
    #[serde(default = "sweep_count")]
    pub sweep_count: usize,
    #[serde(default)]
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub refine: usize,
    /// Overlap extraction depth below `ln ρ`; `"auto"` is `L₀ / 2`.
    #[serde(default)]
    pub z_eval_depth: AutoOr<f64>,
    #[serde(default = "cutoff_inner")]
    pub cutoff_inner: f64,
    #[serde(default = "cutoff_outer")]
    pub cutoff_outer: f64,
    /// Points per side of the sampled field grid.
    #[serde(default = "grid_points")]
    pub grid_points: usize,
    #[serde(default = "out_dir")]
    pub out: String,
}

fn sweep_count() -> usize {
    24
}
fn cutoff_inner() -> f64 {
    0.6
}
fn cutoff_outer() -> f64 {
    0.9
}
fn grid_points() -> usize {
    201
}
fn out_dir() -> String {
    "out".into()
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            alpha_inc: 0.0,
            sweep: None,
            sweep_count: sweep_count(),
            boundary: BoundaryKind::Dtn,
            refine: 0,
            z_eval_depth: AutoOr::default(),
            cutoff_inner: cutoff_inner(),
            cutoff_outer: cutoff_outer(),
            grid_points: grid_points(),
            out: out_dir(),
        }
    }
}

impl RunBlock {
    pub fn sweep_angles(&self) -> Vec<f64> {
        match &self.sweep {
            Some(v) => v.clone(),
            None => (0..self.sweep_count).map(|i| 2.0 * std::f64::consts::PI * i as f64 / self.sweep_count as f64).collect(),
        }
    }

    pub fn cutoff(&self) -> Cutoff {
        Cutoff { inner: self.cutoff_inner, outer: self.cutoff_outer }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub material: MaterialBlock,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub pml: PmlConfig,
    #[serde(default)]
    pub run: RunBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Triangle preset with a lossless Drude metal (`ω_p = 13.3`) at `omega`.
    pub fn sharp_triangle(omega: f64) -> Self {
        Self {
            geometry: GeometryConfig::default(),
            material: MaterialBlock {
                eps_d: 1.0,
                mu_d: 1.0,
                mu_m: 1.0,
                omega: Some(omega),
                omega_p: Some(13.3),
                gamma: 0.0,
                eps_m: None,
                k0: None,
                light_speed: LIGHT_SPEED,
            },
            discretization: DiscretizationConfig::default(),
            pml: PmlConfig::default(),
            run: RunBlock::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.resolve()?;
        self.geometry.scene()?.validate()?;
        if let Some(h) = self.discretization.h.value() {
            if !(h > 0.0) {
                return Err(Error::Config(format!("h must be positive, got {h}")));
            }
        }
        if !(self.discretization.points_per_wavelength > 0.0) {
            return Err(Error::Config("points_per_wavelength must be positive".into()));
        }
        self.run.cutoff().validate()?;
        if self.run.grid_points < 2 {
            return Err(Error::Config("grid_points must be at least 2".into()));
        }
        if self.run.sweep.is_none() && self.run.sweep_count == 0 {
            return Err(Error::Config("sweep_count must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml("[material]\nomega = 9.0\nomega_p = 13.3\n").unwrap();
        assert_eq!(c.geometry.preset, Some(Preset::SharpTriangle));
        assert_eq!(c.discretization.h, AutoOr::default());
        assert!(c.pml.enabled);
        assert_eq!(c.run.sweep_angles().len(), 24);
        let m = c.material.resolve().unwrap();
        assert!((m.kappa().unwrap().re + 1.18383).abs() < 1e-4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml("[material]\nomega = 9.0\nomega_p = 13.3\ncolour = 1\n").unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        assert!(RunConfig::from_toml("[material]\nomega = 9.0\nomega_p = 13.3\n[extra]\n").is_err());
    }

    #[test]
    fn auto_and_per_corner_values() {
        let text = "[material]\neps_m = [-1.2, 0.0]\nk0 = 30.0\n[pml]\ntheta = [-0.3, -0.2, -0.2]\n[discretization]\nh = 0.01\n";
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.discretization.h.value(), Some(0.01));
        let th = c.pml.theta.value().unwrap();
        assert_eq!(th.get(1, 3).unwrap(), -0.2);
        assert!(th.get(0, 2).is_err());
        assert!(RunConfig::from_toml("[material]\neps_m = [-1.2, 0.0]\nk0 = 30.0\n[pml]\ntheta = \"sometimes\"\n").is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let c = RunConfig::sharp_triangle(11.0);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn conflicting_material_is_rejected() {
        assert!(RunConfig::from_toml("[material]\nomega = 9.0\n").is_err());
        assert!(RunConfig::from_toml("[material]\nomega = 9.0\nomega_p = 13.3\neps_m = [1.0, 0.0]\n").is_err());
        assert!(RunConfig::from_toml("[material]\nomega = -9.0\nomega_p = 13.3\n").is_err());
    }
}
