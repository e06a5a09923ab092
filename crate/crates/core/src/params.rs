//! Physical model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcmolError};
use crate::units;

/// Model parameters at the configuration boundary (eV, Debye, V/nm, fs).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PhysicalParams {
    pub photon_energy_ev: f64,
    pub emitter_energy_ev: f64,
    pub mu_a_debye: f64,
    pub field_v_per_nm: f64,
    pub n_emitters: usize,
    pub reduced_mass_me: f64,
    pub kappa_per_fs: f64,
    pub gamma_per_fs: f64,
    pub duration_fs: f64,
    pub dt_au: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            photon_energy_ev: 8.27,
            emitter_energy_ev: 8.27,
            mu_a_debye: 1.5,
            field_v_per_nm: 3.00,
            n_emitters: 0,
            reduced_mass_me: 12498.0,
            kappa_per_fs: 0.01,
            gamma_per_fs: 0.0,
            duration_fs: 500.0,
            dt_au: 0.5,
        }
    }
}

/// Model parameters in atomic units, validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Photon energy hbar*omega_c (hartree).
    pub photon_energy: f64,
    /// Two-level transition energy hbar*omega_a (hartree).
    pub emitter_energy: f64,
    /// Two-level transition dipole (atomic units).
    pub mu_a: f64,
    /// Vacuum field strength at N = 0 (atomic units).
    pub field_base: f64,
    pub n_emitters: usize,
    /// Nuclear reduced mass (electron masses).
    pub reduced_mass: f64,
    /// Photon decay rate (inverse atomic time).
    pub kappa: f64,
    /// Per-emitter pure dephasing rate (inverse atomic time).
    pub gamma: f64,
    /// Total propagation time (atomic time).
    pub duration: f64,
    /// Propagation time step (atomic time).
    pub dt: f64,
}

impl ModelParams {
    pub fn from_physical(p: &PhysicalParams) -> Result<Self> {
        let params = Self {
            photon_energy: units::ev_to_hartree(p.photon_energy_ev),
            emitter_energy: units::ev_to_hartree(p.emitter_energy_ev),
            mu_a: units::debye_to_au(p.mu_a_debye),
            field_base: units::v_per_nm_to_au(p.field_v_per_nm),
            n_emitters: p.n_emitters,
            reduced_mass: p.reduced_mass_me,
            kappa: units::per_fs_to_au(p.kappa_per_fs),
            gamma: units::per_fs_to_au(p.gamma_per_fs),
            duration: units::fs_to_au(p.duration_fs),
            dt: p.dt_au,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("photon_energy", self.photon_energy),
            ("emitter_energy", self.emitter_energy),
            ("mu_a", self.mu_a),
            ("field_base", self.field_base),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("duration", self.duration),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TcmolError::Config(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        if !(self.reduced_mass > 0.0) {
            return Err(TcmolError::Config(format!(
                "reduced mass must be positive, got {}",
                self.reduced_mass
            )));
        }
        if !(self.dt > 0.0) {
            return Err(TcmolError::Config(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Effective vacuum field E_c(N) = field_base / sqrt(N + 1).
    pub fn effective_field(&self) -> f64 {
        self.field_base / ((self.n_emitters + 1) as f64).sqrt()
    }

    /// Cavity quality factor Q = omega_c / kappa.
    pub fn quality_factor(&self) -> f64 {
        self.photon_energy / self.kappa
    }

    /// Collective Rabi splitting 2 E_c(N) sqrt(N mu_a^2 + mu_m^2) in hartree,
    /// for a given molecular transition dipole at the resonance point.
    pub fn collective_splitting(&self, mu_m_at_resonance: f64) -> f64 {
        let n = self.n_emitters as f64;
        2.0 * self.effective_field()
            * (n * self.mu_a * self.mu_a + mu_m_at_resonance * mu_m_at_resonance).sqrt()
    }
}
