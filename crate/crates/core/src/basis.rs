//! Single-excitation channel structure and state vectors.
//!
//! The total number of excitations is limited to one, which truncates the
//! joint (cavity x emitters x molecule) Hilbert space to N+3 channels, each
//! carrying a nuclear wave function on the spatial grid:
//!
//! | index | tag        | photons | emitters     | molecule |
//! |-------|------------|---------|--------------|----------|
//! | 0     | GROUND     | 0       | all ground   | Sigma    |
//! | 1     | PHOTON     | 1       | all ground   | Sigma    |
//! | 2     | MOL_PI     | 0       | all ground   | Pi       |
//! | 3+n   | EMITTER(n) | 0       | n-th excited | Sigma    |
//!
//! Emitter indices run n = 0..N-1. This ordering is fixed; every operator in
//! the crate assumes it.

use num_complex::Complex64;

use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;

/// Channel tag in the single-excitation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Ground,
    Photon,
    MolPi,
    Emitter(usize),
}

impl Channel {
    pub fn index(&self) -> usize {
        match self {
            Channel::Ground => 0,
            Channel::Photon => 1,
            Channel::MolPi => 2,
            Channel::Emitter(n) => 3 + n,
        }
    }
}

/// Channel layout for N emitters: N+3 channels in the documented order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLayout {
    n_emitters: usize,
}

impl BasisLayout {
    pub fn new(n_emitters: usize) -> Self {
        Self { n_emitters }
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    pub fn n_channels(&self) -> usize {
        self.n_emitters + 3
    }

    pub fn channels(&self) -> Vec<Channel> {
        let mut v = vec![Channel::Ground, Channel::Photon, Channel::MolPi];
        v.extend((0..self.n_emitters).map(Channel::Emitter));
        v
    }

    pub fn channel_at(&self, index: usize) -> Option<Channel> {
        match index {
            0 => Some(Channel::Ground),
            1 => Some(Channel::Photon),
            2 => Some(Channel::MolPi),
            n if n < self.n_channels() => Some(Channel::Emitter(n - 3)),
            _ => None,
        }
    }
}

pub const GROUND: usize = 0;
pub const PHOTON: usize = 1;
pub const MOL_PI: usize = 2;
pub const EMITTER0: usize = 3;

/// Pure state of one trajectory: complex amplitudes indexed by
/// (channel, grid point), channel-major.
///
/// Norms use the grid quadrature weight: |psi|^2 = spacing * sum |a|^2.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Vec<Complex64>,
    n_channels: usize,
    n_points: usize,
    spacing: f64,
}

impl StateVector {
    pub fn zeros(layout: BasisLayout, grid: &SpatialGrid) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); layout.n_channels() * grid.n_points()],
            n_channels: layout.n_channels(),
            n_points: grid.n_points(),
            spacing: grid.spacing(),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_emitters(&self) -> usize {
        self.n_channels - 3
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.n_points..(c + 1) * self.n_points]
    }

    #[inline]
    pub fn channel_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.n_points..(c + 1) * self.n_points]
    }

    pub fn norm_sq(&self) -> f64 {
        self.spacing * self.data.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Population of one channel.
    pub fn population(&self, c: usize) -> f64 {
        self.spacing * self.channel(c).iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn renormalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(TcmolError::Numerics(format!(
                "cannot renormalize state with norm {n}"
            )));
        }
        let inv = 1.0 / n;
        for z in &mut self.data {
            *z *= inv;
        }
        Ok(n)
    }

    pub fn scale(&mut self, factor: f64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn same_layout(&self, other: &StateVector) -> bool {
        self.n_channels == other.n_channels
            && self.n_points == other.n_points
            && self.spacing == other.spacing
    }

    /// Bright collective emitter amplitude s(q) = sum_n psi_n(q) / sqrt(N).
    pub fn bright_amplitude(&self) -> Vec<Complex64> {
        let n_e = self.n_emitters();
        let mut s = vec![Complex64::new(0.0, 0.0); self.n_points];
        if n_e == 0 {
            return s;
        }
        for n in 0..n_e {
            for (sj, a) in s.iter_mut().zip(self.channel(EMITTER0 + n)) {
                *sj += a;
            }
        }
        let inv = 1.0 / (n_e as f64).sqrt();
        for sj in &mut s {
            *sj *= inv;
        }
        s
    }

    /// Population of the bright collective emitter mode |<S|psi>|^2.
    pub fn bright_population(&self) -> f64 {
        self.spacing
            * self
                .bright_amplitude()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
    }

    /// Total population of the dark emitter manifold: the emitter-sector
    /// weight orthogonal to the symmetric combination at every grid point.
    pub fn dark_population(&self) -> f64 {
        let n_e = self.n_emitters();
        if n_e < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut sym = 0.0;
        for j in 0..self.n_points {
            let mut sum = Complex64::new(0.0, 0.0);
            for n in 0..n_e {
                let a = self.channel(EMITTER0 + n)[j];
                total += a.norm_sqr();
                sum += a;
            }
            sym += sum.norm_sqr() / n_e as f64;
        }
        self.spacing * (total - sym)
    }
}

/// Prepare the initial state: single photon, all emitters ground, molecule on
/// the Sigma surface, nuclear factor given by `vib_ground`.
pub fn initial_state(
    layout: BasisLayout,
    grid: &SpatialGrid,
    vib_ground: &[Complex64],
) -> Result<StateVector> {
    if vib_ground.len() != grid.n_points() {
        return Err(TcmolError::Config(format!(
            "nuclear function length {} does not match grid ({})",
            vib_ground.len(),
            grid.n_points()
        )));
    }
    let norm_sq: f64 = grid.spacing() * vib_ground.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(TcmolError::Config(format!(
            "nuclear function must be normalized, got |phi|^2 = {norm_sq}"
        )));
    }
    let mut psi = StateVector::zeros(layout, grid);
    psi.channel_mut(PHOTON).copy_from_slice(vib_ground);
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts() {
        assert_eq!(BasisLayout::new(0).n_channels(), 3);
        assert_eq!(BasisLayout::new(2).n_channels(), 5);
        assert_eq!(BasisLayout::new(60).n_channels(), 63);
    }

    #[test]
    fn channel_ordering_is_documented_order() {
        let layout = BasisLayout::new(2);
        let ch = layout.channels();
        assert_eq!(
            ch,
            vec![
                Channel::Ground,
                Channel::Photon,
                Channel::MolPi,
                Channel::Emitter(0),
                Channel::Emitter(1)
            ]
        );
        for (i, c) in ch.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    fn flat_nuclear(grid: &SpatialGrid) -> Vec<Complex64> {
        let a = 1.0 / (grid.spacing() * grid.n_points() as f64).sqrt();
        vec![Complex64::new(a, 0.0); grid.n_points()]
    }

    #[test]
    fn initial_state_is_pure_photon() {
        for n_emitters in [0usize, 2, 5] {
            let grid = SpatialGrid::build(0.9, 2.12, 16).unwrap();
            let layout = BasisLayout::new(n_emitters);
            let phi = flat_nuclear(&grid);
            let psi = initial_state(layout, &grid, &phi).unwrap();
            assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
            assert!((psi.population(PHOTON) - 1.0).abs() < 1e-12);
            assert!(psi.population(GROUND) < 1e-15);
            assert!(psi.population(MOL_PI) < 1e-15);
            assert!(psi.dark_population() < 1e-12);
        }
    }

    #[test]
    fn initial_state_rejects_unnormalized() {
        let grid = SpatialGrid::build(0.9, 2.12, 16).unwrap();
        let phi = vec![Complex64::new(1.0, 0.0); 16];
        assert!(initial_state(BasisLayout::new(1), &grid, &phi).is_err());
    }

    #[test]
    fn dark_population_of_antisymmetric_state_is_full() {
        let grid = SpatialGrid::build(0.9, 2.12, 16).unwrap();
        let layout = BasisLayout::new(2);
        let phi = flat_nuclear(&grid);
        let mut psi = StateVector::zeros(layout, &grid);
        let inv = 1.0 / 2.0f64.sqrt();
        for j in 0..16 {
            psi.channel_mut(EMITTER0)[j] = phi[j] * inv;
            psi.channel_mut(EMITTER0 + 1)[j] = -phi[j] * inv;
        }
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        assert!((psi.dark_population() - 1.0).abs() < 1e-12);
        assert!(psi.bright_population() < 1e-15);
    }
}
