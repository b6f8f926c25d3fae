//! Spectral densities `J(ω) = (2/π) m γ0 ω (ω/Λ)^{n−1} θ(Λ−ω)` and their
//! discretization into a finite set of bath oscillators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, ModeOrdering};

/// Fraction of the recurrence time a simulation may use.
pub const RECURRENCE_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    /// Ohmicity exponent `n`.
    pub exponent: f64,
    pub gamma0: f64,
    pub cutoff: f64,
    /// System mass entering the prefactor.
    pub mass: f64,
}

impl SpectralDensity {
    pub fn new(exponent: f64, gamma0: f64, cutoff: f64, mass: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::param(
                "spectral.n",
                format!("exponent must be positive (counterterm diverges otherwise), got {exponent}"),
            ));
        }
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::param("spectral.gamma0", format!("must be positive, got {gamma0}")));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::param("spectral.cutoff", format!("must be positive, got {cutoff}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param("system.mass", format!("must be positive, got {mass}")));
        }
        Ok(Self {
            exponent,
            gamma0,
            cutoff,
            mass,
        })
    }

    pub fn ohmic(gamma0: f64, cutoff: f64, mass: f64) -> Result<Self> {
        Self::new(1.0, gamma0, cutoff, mass)
    }

    pub fn sub_ohmic(gamma0: f64, cutoff: f64, mass: f64) -> Result<Self> {
        Self::new(0.5, gamma0, cutoff, mass)
    }

    pub fn super_ohmic(gamma0: f64, cutoff: f64, mass: f64) -> Result<Self> {
        Self::new(3.0, gamma0, cutoff, mass)
    }

    pub fn j(&self, omega: f64) -> f64 {
        if omega <= 0.0 || omega > self.cutoff {
            return 0.0;
        }
        2.0 / PI * self.mass * self.gamma0 * omega * (omega / self.cutoff).powf(self.exponent - 1.0)
    }

    /// `δω²(∞) = −(4/m) ∫₀^Λ J(ω)/ω dω = −8γ0Λ/(πn)`.
    pub fn counterterm(&self) -> f64 {
        -8.0 * self.gamma0 * self.cutoff / (PI * self.exponent)
    }

    /// Asymptotic position-coupling damping `2γ0 (Ω/Λ)^{n−1}`.
    pub fn asymptotic_gamma(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0 && omega < self.cutoff) {
            return Err(Error::param(
                "system.omega",
                format!("must lie in (0, cutoff = {}), got {omega}", self.cutoff),
            ));
        }
        Ok(2.0 * self.gamma0 * (omega / self.cutoff).powf(self.exponent - 1.0))
    }

    /// Uniform right-endpoint grid `w_k = kΛ/N`, `m_k = 1`, `c_k² = 2 m_k w_k J(w_k) Δw`.
    pub fn discretize(&self, modes: usize) -> Result<DiscreteBath> {
        if modes == 0 {
            return Err(Error::param("bath.modes", "at least one bath mode is required"));
        }
        let dw = self.cutoff / modes as f64;
        let frequencies: Vec<f64> = (1..=modes).map(|k| k as f64 * dw).collect();
        let masses = vec![1.0; modes];
        let couplings = frequencies
            .iter()
            .zip(&masses)
            .map(|(&w, &mk)| (2.0 * mk * w * self.j(w) * dw).sqrt())
            .collect();
        Ok(DiscreteBath {
            frequencies,
            masses,
            couplings,
            temperature: 0.0,
            spacing: dw,
        })
    }
}

/// Smallest mode count whose recurrence time leaves `t_max` inside the allowed window.
pub fn auto_mode_count(cutoff: f64, t_max: f64) -> usize {
    ((cutoff * t_max / (2.0 * PI * RECURRENCE_FRACTION)).ceil() as usize).max(1)
}

/// `coth(w/2T)`, equal to 1 at `T = 0`.
pub fn thermal_factor(w: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 1.0;
    }
    let x = w / (2.0 * temperature);
    if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBath {
    frequencies: Vec<f64>,
    masses: Vec<f64>,
    couplings: Vec<f64>,
    temperature: f64,
    spacing: f64,
}

impl DiscreteBath {
    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::param("bath.temperature", format!("must be >= 0, got {temperature}")));
        }
        self.temperature = temperature;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `t_rec = 2π/Δw`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// Static shift `κ = Σ c_k²/(m_k w_k²)` felt by a coordinate coupled with unit weight.
    pub fn static_shift(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.masses)
            .zip(&self.couplings)
            .map(|((&w, &mk), &c)| c * c / (mk * w * w))
            .sum()
    }

    /// Discrete counterterm `−(4/m) Σ c_k²/(2 m_k w_k²)`.
    pub fn counterterm(&self, mass: f64) -> f64 {
        -2.0 * self.static_shift() / mass
    }

    /// Per-mode `(δq², δπ²)` of the thermal state.
    pub fn thermal_variances(&self) -> Vec<(f64, f64)> {
        self.frequencies
            .iter()
            .zip(&self.masses)
            .map(|(&w, &mk)| {
                let c = thermal_factor(w, self.temperature);
                (c / (2.0 * mk * w), 0.5 * mk * w * c)
            })
            .collect()
    }

    pub fn thermal_bath_covariance(&self) -> CovarianceMatrix {
        let n = self.len();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for (k, (q, p)) in self.thermal_variances().into_iter().enumerate() {
            m[(2 * k, 2 * k)] = q;
            m[(2 * k + 1, 2 * k + 1)] = p;
        }
        CovarianceMatrix::from_parts(m, ModeOrdering::Bath { modes: n })
    }
}
