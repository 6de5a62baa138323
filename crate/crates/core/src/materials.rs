//! Drude permittivity, contrasts and critical intervals.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Speed of light in µm·PHz.
pub const LIGHT_SPEED: f64 = 0.299_792_458;

/// Permittivity model of the inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetalModel {
    /// Directly prescribed permittivity.
    Fixed { eps_m: C64 },
    /// Drude law with plasma frequency and damping.
    Drude { omega_p: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub eps_d: f64,
    pub mu_d: f64,
    pub mu_m: f64,
    pub metal: MetalModel,
    pub omega: f64,
    pub light_speed: f64,
    /// Overrides `omega / light_speed` when present.
    pub k0_override: Option<f64>,
}

impl MaterialConfig {
    pub fn drude(omega: f64, omega_p: f64, gamma: f64) -> Self {
        Self {
            eps_d: 1.0,
            mu_d: 1.0,
            mu_m: 1.0,
            metal: MetalModel::Drude { omega_p, gamma },
            omega,
            light_speed: LIGHT_SPEED,
            k0_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.eps_d, "eps_d")?;
        positive(self.mu_d, "mu_d")?;
        positive(self.mu_m, "mu_m")?;
        positive(self.omega, "omega")?;
        positive(self.light_speed, "light_speed")?;
        if let Some(k0) = self.k0_override {
            positive(k0, "k0")?;
        }
        match self.metal {
            MetalModel::Drude { omega_p, gamma } => {
                positive(omega_p, "omega_p")?;
                if !(gamma >= 0.0) {
                    return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
                }
            }
            MetalModel::Fixed { eps_m } => {
                if eps_m.norm() == 0.0 || !eps_m.norm().is_finite() {
                    return Err(Error::Domain("eps_m must be finite and nonzero".into()));
                }
            }
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        self.k0_override.unwrap_or(self.omega / self.light_speed)
    }

    /// Wavenumber in the dielectric.
    pub fn k(&self) -> f64 {
        self.k0() * (self.eps_d * self.mu_d).sqrt()
    }

    pub fn eps_m(&self) -> Result<C64> {
        match self.metal {
            MetalModel::Fixed { eps_m } => Ok(eps_m),
            MetalModel::Drude { omega_p, gamma } => drude_lossy(self.omega, omega_p, gamma),
        }
    }

    /// Contrast `ε_m / ε_d`.
    pub fn kappa(&self) -> Result<C64> {
        Ok(self.eps_m()? / self.eps_d)
    }
}

fn check_freq(omega: f64, omega_p: f64) -> Result<()> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    if !(omega_p > 0.0) {
        return Err(Error::Domain(format!("plasma frequency must be positive, got {omega_p}")));
    }
    Ok(())
}

/// `1 - ω_p² / ω²`.
pub fn drude_lossless(omega: f64, omega_p: f64) -> Result<f64> {
    check_freq(omega, omega_p)?;
    Ok(1.0 - omega_p * omega_p / (omega * omega))
}

/// `1 - ω_p² / (ω² + iωγ)`.
pub fn drude_lossy(omega: f64, omega_p: f64, gamma: f64) -> Result<C64> {
    check_freq(omega, omega_p)?;
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("damping must be nonnegative, got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(C64::new(drude_lossless(omega, omega_p)?, 0.0));
    }
    Ok(1.0 - omega_p * omega_p / C64::new(omega * omega, omega * gamma))
}

/// Damping `γ ∈ (0, ω)` for which the lossy Drude permittivity has the
/// requested imaginary part. Errors when the target exceeds the attainable
/// maximum `ω_p² / (2ω²)`.
pub fn drude_damping_for_imag(omega: f64, omega_p: f64, target_im: f64) -> Result<f64> {
    check_freq(omega, omega_p)?;
    let im = |g: f64| drude_lossy(omega, omega_p, g).map(|e| e.im);
    let peak = im(omega)?;
    if !(target_im > 0.0) || target_im > peak {
        return Err(Error::Domain(format!(
            "imaginary part {target_im} not attainable (maximum {peak})"
        )));
    }
    let (mut lo, mut hi) = (0.0, omega);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if im(mid)? < target_im {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Contrast interval `[-b, -1/b]` in which corners create black-hole waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalInterval {
    pub b: f64,
    pub lo: f64,
    pub hi: f64,
}

impl CriticalInterval {
    pub fn from_b(b: f64) -> Self {
        Self { b, lo: -b, hi: -1.0 / b }
    }

    /// Strict membership in the open interval, excluding `-1`.
    pub fn contains_open(&self, kappa: f64) -> bool {
        kappa > self.lo && kappa < self.hi && kappa != -1.0
    }
}

fn check_aperture(phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi < 2.0 * PI) || phi == PI {
        return Err(Error::Domain(format!("aperture must lie in (0, 2π) minus π, got {phi}")));
    }
    Ok(())
}

/// Ratio `(2π - φ) / φ` of dielectric to metal opening.
pub fn wedge_ratio(phi: f64) -> f64 {
    (2.0 * PI - phi) / phi
}

/// `max(b, 1/b)` for one corner.
pub fn corner_b(phi: f64) -> Result<f64> {
    check_aperture(phi)?;
    let b = wedge_ratio(phi);
    Ok(b.max(1.0 / b))
}

pub fn critical_interval(apertures: &[f64]) -> Result<CriticalInterval> {
    let mut b = 1.0_f64;
    for &phi in apertures {
        b = b.max(corner_b(phi)?);
    }
    Ok(CriticalInterval::from_b(b))
}

/// Frequencies for which the lossless Drude contrast lies in the critical interval.
pub fn critical_band(omega_p: f64, b: f64) -> Result<(f64, f64)> {
    if !(omega_p > 0.0) || !(b >= 1.0) {
        return Err(Error::Domain(format!("need ω_p > 0 and b ≥ 1, got {omega_p}, {b}")));
    }
    Ok((omega_p / (1.0 + b).sqrt(), omega_p / (1.0 + 1.0 / b).sqrt()))
}
