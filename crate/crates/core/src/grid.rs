//! Uniform spatial grid for the nuclear coordinate.

use crate::error::{Result, TcmolError};
use crate::units;

/// Uniform grid over the internuclear distance q, stored in bohr.
///
/// Molecular simulations use at least [`SpatialGrid::MIN_SIMULATION_POINTS`]
/// points; that bound is enforced by the operations that actually need
/// spatial resolution (vibrational eigensolve, curve interpolation). Smaller
/// grids, including the degenerate single-point grid, are valid for reduced
/// test models where the nuclear coordinate is frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
    spacing: f64,
}

impl SpatialGrid {
    pub const MIN_SIMULATION_POINTS: usize = 8;

    /// Build a uniform grid from endpoints in Angstrom (inclusive).
    pub fn build(q_min_angstrom: f64, q_max_angstrom: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(TcmolError::Config(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(q_max_angstrom > q_min_angstrom) {
            return Err(TcmolError::Config(format!(
                "grid span must be positive: q_min = {q_min_angstrom} A, q_max = {q_max_angstrom} A"
            )));
        }
        let q_min = units::angstrom_to_bohr(q_min_angstrom);
        let q_max = units::angstrom_to_bohr(q_max_angstrom);
        let spacing = (q_max - q_min) / (n_points - 1) as f64;
        Ok(Self {
            q_min,
            q_max,
            n_points,
            spacing,
        })
    }

    /// Degenerate one-point grid with unit quadrature weight, for reduced
    /// models with a frozen nuclear coordinate.
    pub fn single_point(q_angstrom: f64) -> Self {
        let q = units::angstrom_to_bohr(q_angstrom);
        Self {
            q_min: q,
            q_max: q,
            n_points: 1,
            spacing: 1.0,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid spacing in bohr. For the single-point grid this is the unit
    /// quadrature weight.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn spacing_angstrom(&self) -> f64 {
        if self.n_points == 1 {
            self.spacing
        } else {
            units::bohr_to_angstrom(self.spacing)
        }
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    /// Grid point j in bohr.
    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        if self.n_points == 1 {
            self.q_min
        } else {
            self.q_min + self.spacing * j as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.point(j))
    }

    pub fn points_angstrom(&self) -> impl Iterator<Item = f64> + '_ {
        self.points().map(units::bohr_to_angstrom)
    }

    pub fn ensure_simulation_resolution(&self) -> Result<()> {
        if self.n_points < Self::MIN_SIMULATION_POINTS {
            return Err(TcmolError::Config(format!(
                "molecular simulation needs at least {} grid points, got {}",
                Self::MIN_SIMULATION_POINTS,
                self.n_points
            )));
        }
        Ok(())
    }
}
