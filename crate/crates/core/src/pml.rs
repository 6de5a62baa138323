//! Complex stretching of the log-unfolded corner strips.

use crate::corner_modes::Root;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Per-corner layer data in strip coordinates `(z, θ) = (ln r, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlSpec {
    pub rho: f64,
    /// Total strip length.
    pub l: f64,
    /// Depth at which the stretch starts.
    pub l0: f64,
    pub theta: f64,
}

impl PmlSpec {
    pub fn alpha(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }

    /// `ln ρ`, the end glued to the hole boundary.
    pub fn z_right(&self) -> f64 {
        self.rho.ln()
    }

    /// Start of the stretched region.
    pub fn z_onset(&self) -> f64 {
        self.rho.ln() - self.l0
    }

    /// Truncation end carrying the natural boundary condition.
    pub fn z_left(&self) -> f64 {
        self.rho.ln() - self.l
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.l0 > 0.0) || !(self.l >= self.l0) {
            return Err(Error::Domain(format!(
                "invalid layer geometry: ρ = {}, L₀ = {}, L = {}",
                self.rho, self.l0, self.l
            )));
        }
        if !(self.theta.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!("stretch angle {} outside (−π/2, π/2)", self.theta)));
        }
        Ok(())
    }

    /// Complex coordinate `z̃` along which the stretched fields are analytic
    /// continuations of the physical ones.
    pub fn stretched_z(&self, z: f64) -> C64 {
        let z0 = self.z_onset();
        if z > z0 {
            C64::new(z, 0.0)
        } else {
            z0 + (z - z0) / self.alpha()
        }
    }
}

/// Coefficients `(a_z, a_θ, m)` of the strip form at depth `z`.
pub fn stretched_coeffs(z: f64, spec: &PmlSpec) -> Result<(C64, C64, C64)> {
    let tol = 1e-12 * (1.0 + spec.l);
    if z < spec.z_left() - tol || z > spec.z_right() + tol {
        return Err(Error::Domain(format!(
            "z = {z} outside the strip ({}, {})",
            spec.z_left(),
            spec.z_right()
        )));
    }
    let one = C64::new(1.0, 0.0);
    if z > spec.z_onset() {
        Ok((one, one, C64::new((2.0 * z).exp(), 0.0)))
    } else {
        let a = spec.alpha();
        let inv = a.inv();
        Ok((a, inv, inv * (2.0 * z * inv).exp()))
    }
}

/// Open interval of admissible stretch angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaInterval {
    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    /// Midpoint, clipped to `|ϑ| ≤ π/8`.
    pub fn default_theta(&self) -> f64 {
        let m = 0.5 * (self.lo + self.hi);
        m.clamp(-PI / 8.0, PI / 8.0)
    }
}

/// Angles `ϑ` with `Re(λ e^{−iϑ}) > 0` for every exponent of positive real
/// part and for the outgoing exponent.
pub fn admissible_theta(roots: &[Root], lambda_out: C64) -> Result<ThetaInterval> {
    if lambda_out.im == 0.0 {
        return Err(Error::Domain("outgoing exponent must be purely imaginary".into()));
    }
    let args: Vec<f64> = roots.iter().filter(|r| r.lambda.re > 0.0).map(|r| r.lambda.arg()).collect();
    let iv = if lambda_out.im < 0.0 {
        let max_arg = args.iter().copied().fold(0.0_f64, f64::max);
        ThetaInterval { lo: -FRAC_PI_2 + max_arg, hi: 0.0 }
    } else {
        let min_arg = args.iter().copied().fold(0.0_f64, f64::min);
        ThetaInterval { lo: 0.0, hi: FRAC_PI_2 + min_arg }
    };
    if iv.lo >= iv.hi {
        let offending: Vec<String> = roots
            .iter()
            .filter(|r| r.lambda.re > 0.0 && r.lambda.arg().abs() >= FRAC_PI_2 - 1e-9)
            .map(|r| format!("{}", r.lambda))
            .collect();
        return Err(Error::EmptyAdmissibleInterval(format!(
            "exponents too close to the imaginary axis: [{}]",
            offending.join(", ")
        )));
    }
    Ok(iv)
}

/// Checks `Re(λ/α) > 0` for every listed exponent and the outgoing one.
pub fn is_admissible(theta: f64, roots: &[Root], lambda_out: C64) -> bool {
    let a = C64::from_polar(1.0, theta);
    (lambda_out / a).re > 0.0 && roots.iter().filter(|r| r.lambda.re > 0.0).all(|r| (r.lambda / a).re > 0.0)
}

/// Decay thresholds for the layer geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerTolerances {
    /// Bound on `(k₀ ρ e^{−L₀})²`.
    pub tau1: f64,
    /// Attenuation of the outgoing wave across the layer.
    pub tau2: f64,
}

impl Default for LayerTolerances {
    fn default() -> Self {
        Self { tau1: 1e-8, tau2: 1e-8 }
    }
}

/// `(L₀, L)` from the decay requirements.
pub fn default_strip_geometry(k0: f64, rho: f64, eta: f64, theta: f64, tol: LayerTolerances) -> Result<(f64, f64)> {
    if !(k0 > 0.0 && rho > 0.0 && eta > 0.0) {
        return Err(Error::Domain("k₀, ρ and η must be positive".into()));
    }
    if !(tol.tau1 > 0.0 && tol.tau1 < 1.0 && tol.tau2 > 0.0 && tol.tau2 <= 1.0) {
        return Err(Error::Domain("tolerances must lie in (0, 1)".into()));
    }
    if theta == 0.0 {
        return Err(Error::InfiniteLayer);
    }
    let l0 = (k0 * rho).ln().max(0.0) + 0.5 * tol.tau1.ln().abs();
    let l = l0 + tol.tau2.ln().abs() / (eta * theta.sin().abs());
    Ok((l0, l))
}
