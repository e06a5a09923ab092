//! Model bundle: everything one trajectory needs, assembled once and shared
//! read-only by all workers.

use num_complex::Complex64;

use crate::basis::{initial_state, BasisLayout, StateVector};
use crate::curves::GriddedCurves;
use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;
use crate::hamiltonian::{HamWorkspace, HamiltonianOperator};
use crate::jumps::JumpOperatorSet;
use crate::params::ModelParams;
use crate::vibration::vibrational_ground;

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub basis: BasisLayout,
    pub grid: SpatialGrid,
    pub curves: GriddedCurves,
    pub params: ModelParams,
    pub hamiltonian: HamiltonianOperator,
    pub jumps: JumpOperatorSet,
    pub initial: StateVector,
    /// Energy of the initial nuclear factor on the Sigma surface, evaluated
    /// with the same spectral kinetic operator the dynamics uses. With the
    /// photon-excited initial state, E_initial - zero_point_energy equals the
    /// photon energy exactly.
    pub zero_point_energy: f64,
}

impl ModelBundle {
    /// Standard molecular model: the initial nuclear state is the vibrational
    /// ground state of V_Sigma, carried by the photon channel.
    pub fn molecular(params: ModelParams, curves: GriddedCurves) -> Result<Self> {
        curves.grid.ensure_simulation_resolution()?;
        let basis = BasisLayout::new(params.n_emitters);
        let hamiltonian = HamiltonianOperator::assemble(basis, &curves, &params)?;
        let (_, phi) = vibrational_ground(&curves.grid, &curves.v_sigma, params.reduced_mass)?;
        let phi_c: Vec<Complex64> = phi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let initial = initial_state(basis, &curves.grid, &phi_c)?;
        let zero_point_energy =
            scalar_channel_energy(&hamiltonian, &curves.v_sigma, &phi_c, curves.grid.spacing());
        let jumps = JumpOperatorSet {
            n_emitters: params.n_emitters,
            gamma: params.gamma,
            kappa: params.kappa,
        };
        Ok(Self {
            basis,
            grid: curves.grid.clone(),
            curves,
            params,
            hamiltonian,
            jumps,
            initial,
            zero_point_energy,
        })
    }

    /// Model with an explicit initial state; used by reduced test models and
    /// oracle comparisons.
    pub fn with_initial_state(
        params: ModelParams,
        curves: GriddedCurves,
        initial: StateVector,
    ) -> Result<Self> {
        let basis = BasisLayout::new(params.n_emitters);
        let hamiltonian = HamiltonianOperator::assemble(basis, &curves, &params)?;
        if initial.n_channels() != basis.n_channels()
            || initial.n_points() != curves.grid.n_points()
        {
            return Err(TcmolError::Config(
                "initial state layout does not match the model".into(),
            ));
        }
        if (initial.norm_sq() - 1.0).abs() > 1e-10 {
            return Err(TcmolError::Config(format!(
                "initial state must be normalized, |psi|^2 = {}",
                initial.norm_sq()
            )));
        }
        let zero_point_energy = {
            // Energy of the photon channel's nuclear factor if present,
            // otherwise zero; retention is then relative to bare V_Sigma.
            let packet: Vec<Complex64> = initial.channel(crate::basis::PHOTON).to_vec();
            let w: f64 = curves.grid.spacing() * packet.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if w > 1e-12 {
                let normed: Vec<Complex64> =
                    packet.iter().map(|z| z / Complex64::new(w.sqrt(), 0.0)).collect();
                scalar_channel_energy(&hamiltonian, &curves.v_sigma, &normed, curves.grid.spacing())
            } else {
                0.0
            }
        };
        let jumps = JumpOperatorSet {
            n_emitters: params.n_emitters,
            gamma: params.gamma,
            kappa: params.kappa,
        };
        Ok(Self {
            basis,
            grid: curves.grid.clone(),
            curves,
            params,
            hamiltonian,
            jumps,
            initial,
            zero_point_energy,
        })
    }

    /// CO surrogate on the production grid (96 points, 0.90..2.12 A).
    pub fn surrogate_default(params: ModelParams) -> Result<Self> {
        let surrogate = crate::curves::SurrogateParams::carbon_monoxide();
        let sampled = crate::curves::surrogate_curves(&surrogate)?;
        let grid = SpatialGrid::build(0.90, 2.12, 96)?;
        let gridded = crate::curves::interpolate_to_grid(&sampled, &grid)?;
        Self::molecular(params, gridded)
    }

    pub fn n_steps(&self) -> usize {
        (self.params.duration / self.params.dt).round().max(0.0) as usize
    }
}

/// <phi| T + V |phi> with the spectral kinetic operator, grid-weighted.
pub fn scalar_channel_energy(
    op: &HamiltonianOperator,
    potential: &[f64],
    phi: &[Complex64],
    spacing: f64,
) -> f64 {
    let mut ws = HamWorkspace::new(op);
    let mut out = vec![Complex64::new(0.0, 0.0); phi.len()];
    op.scalar_channel_apply(potential, phi, &mut out, &mut ws);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in phi.iter().zip(&out) {
        acc += a.conj() * b;
    }
    (acc * spacing).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PhysicalParams;

    #[test]
    fn initial_energy_is_zero_point_plus_photon() {
        let params = ModelParams::from_physical(&PhysicalParams {
            n_emitters: 2,
            gamma_per_fs: 0.05,
            ..Default::default()
        })
        .unwrap();
        let bundle = ModelBundle::surrogate_default(params).unwrap();
        let e = bundle.hamiltonian.expectation_energy(&bundle.initial).unwrap();
        let expected = bundle.zero_point_energy + bundle.params.photon_energy;
        assert!(
            (e - expected).abs() < 1e-10,
            "initial energy {e} vs {expected}"
        );
        // The zero point itself is close to the Sigma well's half quantum.
        let omega_e = crate::units::wavenumber_to_hartree(2170.0);
        assert!((bundle.zero_point_energy / (omega_e / 2.0) - 1.0).abs() < 0.05);
    }
}
