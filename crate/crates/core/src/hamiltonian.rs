//! Matrix-free Hamiltonian for the single-excitation sector.
//!
//! Channel potentials: GROUND carries V_Sigma, PHOTON carries
//! V_Sigma + hbar*omega_c, MOL_PI carries V_Pi, each EMITTER carries
//! V_Sigma + hbar*omega_a. The photon channel couples to MOL_PI through
//! E_c(N) mu_m(q) and to every emitter through the constant E_c(N) mu_a.
//! GROUND couples to nothing. The kinetic term acts identically on every
//! channel through Fourier spectral differentiation with periodic wrap; the
//! window is wide enough that wavepackets never reach the edges.
//!
//! The non-Hermitian extension adds -i kappa/2 on the photon channel. The
//! corresponding dephasing term is proportional to the identity and is
//! dropped because the propagation renormalizes every step.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::basis::{BasisLayout, StateVector, EMITTER0, GROUND, MOL_PI, PHOTON};
use crate::curves::GriddedCurves;
use crate::error::{Result, TcmolError};
use crate::params::ModelParams;

#[derive(Clone)]
pub struct HamiltonianOperator {
    n_channels: usize,
    n_points: usize,
    spacing: f64,
    /// k^2 / (2M) per momentum index, with the 1/n FFT normalization folded in.
    kinetic_multiplier: Vec<f64>,
    /// Channel potentials; emitters share one array.
    v_ground: Vec<f64>,
    v_photon: Vec<f64>,
    v_pi: Vec<f64>,
    v_emitter: Vec<f64>,
    /// Photon <-> Pi coupling profile E_c(N) mu_m(q).
    coupling_pi: Vec<f64>,
    /// Photon <-> emitter coupling E_c(N) mu_a.
    coupling_emitter: f64,
    /// Photon decay rate (atomic units).
    kappa: f64,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HamiltonianOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianOperator")
            .field("n_channels", &self.n_channels)
            .field("n_points", &self.n_points)
            .field("coupling_emitter", &self.coupling_emitter)
            .field("kappa", &self.kappa)
            .finish()
    }
}

/// Per-worker scratch for FFT application.
#[derive(Debug, Clone)]
pub struct HamWorkspace {
    buf: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
}

impl HamWorkspace {
    pub fn new(op: &HamiltonianOperator) -> Self {
        let scratch_len = op
            .fft_fwd
            .get_inplace_scratch_len()
            .max(op.fft_inv.get_inplace_scratch_len());
        Self {
            buf: vec![Complex64::new(0.0, 0.0); op.n_points],
            fft_scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }
}

impl HamiltonianOperator {
    /// Assemble the operator from gridded curves and model parameters.
    pub fn assemble(
        basis: BasisLayout,
        curves: &GriddedCurves,
        params: &ModelParams,
    ) -> Result<Self> {
        if basis.n_emitters() != params.n_emitters {
            return Err(TcmolError::Config(format!(
                "basis has {} emitters but params say {}",
                basis.n_emitters(),
                params.n_emitters
            )));
        }
        let n = curves.grid.n_points();
        let field = params.effective_field();
        let v_photon: Vec<f64> = curves.v_sigma.iter().map(|v| v + params.photon_energy).collect();
        let v_emitter: Vec<f64> = curves
            .v_sigma
            .iter()
            .map(|v| v + params.emitter_energy)
            .collect();
        let coupling_pi: Vec<f64> = curves.mu_m.iter().map(|mu| field * mu).collect();

        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);

        Ok(Self {
            n_channels: basis.n_channels(),
            n_points: n,
            spacing: curves.grid.spacing(),
            kinetic_multiplier: kinetic_multiplier(n, curves.grid.spacing(), params.reduced_mass),
            v_ground: curves.v_sigma.clone(),
            v_photon,
            v_pi: curves.v_pi.clone(),
            v_emitter,
            coupling_pi,
            coupling_emitter: field * params.mu_a,
            kappa: params.kappa,
            fft_fwd,
            fft_inv,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dim(&self) -> usize {
        self.n_channels * self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn coupling_emitter(&self) -> f64 {
        self.coupling_emitter
    }

    pub fn coupling_pi(&self) -> &[f64] {
        &self.coupling_pi
    }

    pub fn v_ground(&self) -> &[f64] {
        &self.v_ground
    }

    pub fn v_photon(&self) -> &[f64] {
        &self.v_photon
    }

    pub fn v_pi(&self) -> &[f64] {
        &self.v_pi
    }

    pub fn v_emitter(&self) -> &[f64] {
        &self.v_emitter
    }

    /// Kinetic-plus-potential action on a single channel function.
    pub fn scalar_channel_apply(
        &self,
        potential: &[f64],
        src: &[Complex64],
        dst: &mut [Complex64],
        ws: &mut HamWorkspace,
    ) {
        self.kinetic_into(src, dst, ws);
        for j in 0..self.n_points {
            dst[j] += potential[j] * src[j];
        }
    }

    fn kinetic_into(&self, src: &[Complex64], dst: &mut [Complex64], ws: &mut HamWorkspace) {
        if self.n_points == 1 {
            dst[0] = Complex64::new(0.0, 0.0);
            return;
        }
        ws.buf.copy_from_slice(src);
        self.fft_fwd
            .process_with_scratch(&mut ws.buf, &mut ws.fft_scratch);
        for (b, m) in ws.buf.iter_mut().zip(&self.kinetic_multiplier) {
            *b *= *m;
        }
        self.fft_inv
            .process_with_scratch(&mut ws.buf, &mut ws.fft_scratch);
        dst.copy_from_slice(&ws.buf);
    }

    /// Hermitian action H psi.
    pub fn apply_into(
        &self,
        src: &[Complex64],
        dst: &mut [Complex64],
        ws: &mut HamWorkspace,
    ) {
        debug_assert_eq!(src.len(), self.dim());
        debug_assert_eq!(dst.len(), self.dim());
        let n = self.n_points;
        let ch = |c: usize| c * n..(c + 1) * n;

        // Diagonal blocks: kinetic + channel potential.
        for c in 0..self.n_channels {
            let potential: &[f64] = match c {
                GROUND => &self.v_ground,
                PHOTON => &self.v_photon,
                MOL_PI => &self.v_pi,
                _ => &self.v_emitter,
            };
            let (src_c, dst_c) = (&src[ch(c)], &mut dst[ch(c)]);
            self.kinetic_into(src_c, dst_c, ws);
            for j in 0..n {
                dst_c[j] += potential[j] * src_c[j];
            }
        }

        // Photon <-> Pi coupling with the q-dependent profile.
        for j in 0..n {
            let g = self.coupling_pi[j];
            let ph = src[PHOTON * n + j];
            let pi = src[MOL_PI * n + j];
            dst[PHOTON * n + j] += g * pi;
            dst[MOL_PI * n + j] += g * ph;
        }

        // Photon <-> emitters, constant coupling; fixed summation order.
        let n_e = self.n_channels - 3;
        if n_e > 0 && self.coupling_emitter != 0.0 {
            let g = self.coupling_emitter;
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..n_e {
                    acc += src[(EMITTER0 + e) * n + j];
                }
                dst[PHOTON * n + j] += g * acc;
                let ph = g * src[PHOTON * n + j];
                for e in 0..n_e {
                    dst[(EMITTER0 + e) * n + j] += ph;
                }
            }
        }
    }

    /// Non-Hermitian effective action H' psi = H psi - i kappa/2 P_photon psi.
    pub fn apply_effective_into(
        &self,
        src: &[Complex64],
        dst: &mut [Complex64],
        ws: &mut HamWorkspace,
    ) {
        self.apply_into(src, dst, ws);
        if self.kappa != 0.0 {
            let n = self.n_points;
            let damp = Complex64::new(0.0, -0.5 * self.kappa);
            for j in 0..n {
                dst[PHOTON * n + j] += damp * src[PHOTON * n + j];
            }
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_layout(psi)?;
        let mut out = psi.clone();
        let mut ws = HamWorkspace::new(self);
        let mut dst = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(psi.data(), &mut dst, &mut ws);
        out.data_mut().copy_from_slice(&dst);
        Ok(out)
    }

    pub fn apply_effective(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_layout(psi)?;
        let mut out = psi.clone();
        let mut ws = HamWorkspace::new(self);
        let mut dst = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_effective_into(psi.data(), &mut dst, &mut ws);
        out.data_mut().copy_from_slice(&dst);
        Ok(out)
    }

    /// Real expectation value <psi|H|psi> of the Hermitian part.
    ///
    /// Errors when the imaginary residue exceeds 1e-10 of the magnitude,
    /// which would indicate an inconsistent state or operator.
    pub fn expectation_energy(&self, psi: &StateVector) -> Result<f64> {
        self.check_layout(psi)?;
        let mut ws = HamWorkspace::new(self);
        let mut h_psi = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(psi.data(), &mut h_psi, &mut ws);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in psi.data().iter().zip(&h_psi) {
            acc += a.conj() * b;
        }
        acc *= self.spacing;
        let scale = acc.re.abs().max(1e-30);
        if acc.im.abs() > 1e-10 * scale.max(1.0) {
            return Err(TcmolError::Numerics(format!(
                "expectation energy has imaginary residue {} (re = {})",
                acc.im, acc.re
            )));
        }
        Ok(acc.re)
    }

    fn check_layout(&self, psi: &StateVector) -> Result<()> {
        if psi.n_channels() != self.n_channels || psi.n_points() != self.n_points {
            return Err(TcmolError::Config(format!(
                "state layout {}x{} does not match operator {}x{}",
                psi.n_channels(),
                psi.n_points(),
                self.n_channels,
                self.n_points
            )));
        }
        Ok(())
    }

    /// Dense periodic kinetic matrix consistent with the spectral operator,
    /// built by applying it to unit vectors. Real and symmetric.
    pub fn kinetic_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_points;
        let mut ws = HamWorkspace::new(self);
        let mut t = nalgebra::DMatrix::zeros(n, n);
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for col in 0..n {
            unit.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            unit[col] = Complex64::new(1.0, 0.0);
            self.kinetic_into(&unit, &mut out, &mut ws);
            for row in 0..n {
                t[(row, col)] = out[row].re;
            }
        }
        // Discard the ~1e-16 asymmetry from the FFT round trip.
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (t[(i, j)] + t[(j, i)]);
                t[(i, j)] = s;
                t[(j, i)] = s;
            }
        }
        t
    }
}

/// Spectral kinetic multipliers k_m^2/(2M), including the 1/n normalization
/// of the unnormalized FFT round trip.
fn kinetic_multiplier(n: usize, spacing: f64, mass: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let length = n as f64 * spacing;
    (0..n)
        .map(|m| {
            let m_signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = 2.0 * std::f64::consts::PI * m_signed / length;
            k * k / (2.0 * mass) / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::GriddedCurves;
    use crate::grid::SpatialGrid;
    use crate::params::PhysicalParams;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn toy_model(
        n_emitters: usize,
        n_points: usize,
        v_sigma: f64,
        v_pi: f64,
        mu_a_debye: f64,
        mu_m_debye: f64,
        kappa_per_fs: f64,
    ) -> (BasisLayout, SpatialGrid, HamiltonianOperator, ModelParams) {
        let grid = SpatialGrid::build(0.0, 4.0, n_points).unwrap();
        let phys = PhysicalParams {
            n_emitters,
            mu_a_debye,
            kappa_per_fs,
            gamma_per_fs: 0.0,
            ..Default::default()
        };
        let params = ModelParams::from_physical(&phys).unwrap();
        let curves = GriddedCurves::from_arrays(
            grid.clone(),
            vec![v_sigma; n_points],
            vec![v_pi; n_points],
            vec![crate::units::debye_to_au(mu_m_debye); n_points],
        )
        .unwrap();
        let basis = BasisLayout::new(n_emitters);
        let op = HamiltonianOperator::assemble(basis, &curves, &params).unwrap();
        (basis, grid, op, params)
    }

    fn random_state(layout: BasisLayout, grid: &SpatialGrid, seed: u64) -> StateVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut psi = StateVector::zeros(layout, grid);
        for z in psi.data_mut() {
            *z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        psi.renormalize().unwrap();
        psi
    }

    fn weighted_dot(a: &StateVector, b: &StateVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, y) in a.data().iter().zip(b.data()) {
            acc += x.conj() * y;
        }
        acc * a.spacing()
    }

    #[test]
    fn ground_channel_with_zero_potential_is_annihilated() {
        let (basis, grid, op, _) = toy_model(1, 16, 0.0, 1.0, 1.5, 1.5, 0.0);
        let mut psi = StateVector::zeros(basis, &grid);
        let amp = 1.0 / (grid.spacing() * 16.0).sqrt();
        for z in psi.channel_mut(GROUND) {
            *z = Complex64::new(amp, 0.0);
        }
        let out = op.apply(&psi).unwrap();
        assert!(out.norm_sq() < 1e-24);
    }

    #[test]
    fn plane_wave_is_kinetic_eigenvector() {
        let n = 32;
        let (basis, grid, op, params) = toy_model(0, n, 0.0, 1.0, 0.0, 0.0, 0.0);
        let m = 3;
        let k = 2.0 * std::f64::consts::PI * m as f64 / (n as f64 * grid.spacing());
        let mut psi = StateVector::zeros(basis, &grid);
        let amp = 1.0 / (grid.spacing() * n as f64).sqrt();
        for (j, z) in psi.channel_mut(GROUND).iter_mut().enumerate() {
            let phase = k * grid.spacing() * j as f64;
            *z = Complex64::new(0.0, phase).exp() * amp;
        }
        let out = op.apply(&psi).unwrap();
        let expected = k * k / (2.0 * params.reduced_mass);
        for (o, i) in out.channel(GROUND).iter().zip(psi.channel(GROUND)) {
            let ratio = o / i;
            assert!(
                (ratio.re - expected).abs() / expected < 1e-10,
                "kinetic eigenvalue {} vs {}",
                ratio.re,
                expected
            );
            assert!(ratio.im.abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_two_channel_split_is_two_g() {
        // Flat resonant photon/emitter toy: H (ph +- e)/sqrt2 = (E +- g)(...).
        let n = 16;
        let (basis, grid, op, params) = toy_model(1, n, 0.0, 50.0, 1.5, 0.0, 0.0);
        let g = params.effective_field() * params.mu_a;
        let e0 = params.photon_energy;
        let amp = 1.0 / (2.0 * grid.spacing() * n as f64).sqrt();
        for sign in [1.0, -1.0] {
            let mut psi = StateVector::zeros(basis, &grid);
            for j in 0..n {
                psi.channel_mut(PHOTON)[j] = Complex64::new(amp, 0.0);
                psi.channel_mut(EMITTER0)[j] = Complex64::new(sign * amp, 0.0);
            }
            let out = op.apply(&psi).unwrap();
            let expected = e0 + sign * g;
            for (o, i) in out.data().iter().zip(psi.data()) {
                if i.norm() > 0.0 {
                    assert!(((o / i).re - expected).abs() < 1e-12);
                }
            }
        }
        // Eigenvalue split between the two combinations is 2g.
        assert!((2.0 * g) > 0.0);
    }

    #[test]
    fn n0_has_single_coupling_and_n3_field_scaling() {
        let (_, _, op0, _) = toy_model(0, 8, 0.0, 1.0, 1.5, 1.5, 0.0);
        // No emitter channels: the photon-Pi profile is the only coupling.
        assert_eq!(op0.n_channels(), 3);
        assert!(op0.coupling_pi().iter().all(|&g| g > 0.0));

        let (_, _, _, params3) = toy_model(3, 8, 0.0, 1.0, 1.5, 1.5, 0.0);
        let expected = crate::units::v_per_nm_to_au(1.50);
        assert!((params3.effective_field() - expected).abs() < 1e-15);
    }

    #[test]
    fn hermiticity_on_random_pairs() {
        let (basis, grid, op, _) = toy_model(4, 24, 0.1, 0.4, 1.5, 2.0, 0.0);
        for seed in 0..100 {
            let a = random_state(basis, &grid, seed);
            let b = random_state(basis, &grid, seed + 1000);
            let lhs = weighted_dot(&a, &op.apply(&b).unwrap());
            let rhs = weighted_dot(&b, &op.apply(&a).unwrap()).conj();
            let scale = lhs.norm().max(1e-30);
            assert!(
                (lhs - rhs).norm() / scale < 1e-10,
                "hermiticity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn linearity() {
        let (basis, grid, op, _) = toy_model(2, 16, 0.1, 0.4, 1.5, 2.0, 0.0);
        let a = random_state(basis, &grid, 7);
        let b = random_state(basis, &grid, 8);
        let alpha = Complex64::new(0.3, -1.2);
        let beta = Complex64::new(-0.7, 0.25);
        let mut combo = StateVector::zeros(basis, &grid);
        for (c, (x, y)) in combo.data_mut().iter_mut().zip(a.data().iter().zip(b.data())) {
            *c = alpha * x + beta * y;
        }
        let lhs = op.apply(&combo).unwrap();
        let ha = op.apply(&a).unwrap();
        let hb = op.apply(&b).unwrap();
        for ((l, x), y) in lhs.data().iter().zip(ha.data()).zip(hb.data()) {
            let r = alpha * x + beta * y;
            assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn emitter_permutation_symmetry() {
        let (basis, grid, op, _) = toy_model(3, 16, 0.1, 0.4, 1.5, 2.0, 0.0);
        let psi = random_state(basis, &grid, 42);
        let mut swapped = psi.clone();
        let (e1, e2) = (EMITTER0, EMITTER0 + 2);
        for j in 0..16 {
            let tmp = swapped.channel(e1)[j];
            swapped.channel_mut(e1)[j] = swapped.channel(e2)[j];
            swapped.channel_mut(e2)[j] = tmp;
        }
        let h_then_swap = {
            let mut out = op.apply(&psi).unwrap();
            for j in 0..16 {
                let tmp = out.channel(e1)[j];
                out.channel_mut(e1)[j] = out.channel(e2)[j];
                out.channel_mut(e2)[j] = tmp;
            }
            out
        };
        let swap_then_h = op.apply(&swapped).unwrap();
        for (a, b) in h_then_swap.data().iter().zip(swap_then_h.data()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dark_states_do_not_leak_into_photon() {
        let (basis, grid, op, _) = toy_model(3, 16, 0.1, 0.4, 1.5, 2.0, 0.0);
        let mut psi = StateVector::zeros(basis, &grid);
        // Emitter amplitudes summing to zero at every grid point.
        let weights = [1.0, 1.0, -2.0];
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for j in 0..16 {
            let profile = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            for (e, w) in weights.iter().enumerate() {
                psi.channel_mut(EMITTER0 + e)[j] = profile * *w;
            }
        }
        psi.renormalize().unwrap();
        let out = op.apply(&psi).unwrap();
        let leak: f64 = out.population(PHOTON) + out.population(MOL_PI) + out.population(GROUND);
        assert!(leak < 1e-24, "leakage {leak}");
    }

    #[test]
    fn effective_part_only_damps_photon() {
        let (basis, grid, op, params) = toy_model(1, 16, 0.0, 1.0, 1.5, 1.5, 0.01);
        // Zero photon amplitude: effective action equals the Hermitian one.
        let mut psi = StateVector::zeros(basis, &grid);
        let amp = 1.0 / (grid.spacing() * 16.0).sqrt();
        for z in psi.channel_mut(EMITTER0) {
            *z = Complex64::new(amp, 0.0);
        }
        let h = op.apply(&psi).unwrap();
        let heff = op.apply_effective(&psi).unwrap();
        for (a, b) in h.data().iter().zip(heff.data()) {
            assert!((a - b).norm() < 1e-15);
        }
        // Pure photon state with H ~= 0: H' psi = -i kappa/2 psi.
        let (basis, grid, op, params2) = toy_model(0, 16, 0.0, 1.0, 0.0, 0.0, 0.01);
        let mut psi = StateVector::zeros(basis, &grid);
        for z in psi.channel_mut(PHOTON) {
            *z = Complex64::new(amp, 0.0);
        }
        let heff = op.apply_effective(&psi).unwrap();
        for (o, i) in heff.channel(PHOTON).iter().zip(psi.channel(PHOTON)) {
            let expected = Complex64::new(params2.photon_energy, -0.5 * params2.kappa);
            assert!((o - expected * i).norm() < 1e-14);
        }
        let _ = params;
    }

    #[test]
    fn expectation_energy_of_eigenstate() {
        let n = 16;
        let (basis, grid, op, params) = toy_model(0, n, 0.25, 50.0, 0.0, 0.0, 0.0);
        // Flat function on a decoupled channel with constant potential.
        let mut psi = StateVector::zeros(basis, &grid);
        let amp = 1.0 / (grid.spacing() * n as f64).sqrt();
        for z in psi.channel_mut(MOL_PI) {
            *z = Complex64::new(amp, 0.0);
        }
        let e = op.expectation_energy(&psi).unwrap();
        assert!((e - 50.0).abs() < 1e-10);
        let _ = params;
    }
}
