//! Vibrational eigenstates from a dense Fourier-grid Hamiltonian.
//!
//! The bound-state solver uses the hard-wall (sine basis) Fourier grid: the
//! n grid points are the interior points of a box with walls one spacing
//! outside each end of the grid, so the box length is L = (n + 1) * spacing.
//! For V = 0 this reproduces the particle-in-a-box spectrum exactly; for
//! bound wells whose wave functions vanish at the grid edges it is spectrally
//! accurate.

use nalgebra::DMatrix;

use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;

/// Lowest vibrational eigenpair of -(1/2M) d^2/dq^2 + V(q).
///
/// The returned eigenfunction is real, nodeless, positive, and normalized
/// with the grid quadrature weight (spacing * sum phi^2 = 1).
pub fn vibrational_ground(grid: &SpatialGrid, v: &[f64], mass: f64) -> Result<(f64, Vec<f64>)> {
    grid.ensure_simulation_resolution()?;
    let n = grid.n_points();
    if v.len() != n {
        return Err(TcmolError::Config(format!(
            "potential length {} does not match grid ({n})",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(TcmolError::Config("potential must be finite".into()));
    }
    if !(mass > 0.0) {
        return Err(TcmolError::Config(format!("mass must be positive, got {mass}")));
    }

    let h = sine_dvr_kinetic(n, grid.spacing(), mass);
    let mut h = h;
    for j in 0..n {
        h[(j, j)] += v[j];
    }
    let eig = nalgebra::SymmetricEigen::new(h);

    // Locate the two lowest eigenvalues.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let (i0, i1) = (idx[0], idx[1]);
    let e0 = eig.eigenvalues[i0];
    let e1 = eig.eigenvalues[i1];
    let scale = e0.abs().max(e1.abs()).max(1.0);
    if (e1 - e0) / scale < 1e-12 {
        return Err(TcmolError::Numerics(format!(
            "degenerate vibrational ground state: E0 = {e0}, E1 = {e1}"
        )));
    }

    let mut phi: Vec<f64> = eig.eigenvectors.column(i0).iter().cloned().collect();
    // Quadrature normalization and global sign.
    let norm = (grid.spacing() * phi.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let peak = phi
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap();
    let sign = if peak < 0.0 { -1.0 } else { 1.0 };
    for x in &mut phi {
        *x *= sign / norm;
    }

    if count_nodes(&phi) != 0 {
        return Err(TcmolError::Numerics(
            "vibrational ground state has nodes; the grid does not resolve the well".into(),
        ));
    }
    Ok((e0, phi))
}

/// Number of sign changes, ignoring near-zero tail values.
pub fn count_nodes(phi: &[f64]) -> usize {
    let peak = phi.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let floor = peak * 1e-8;
    let mut nodes = 0;
    let mut last = 0.0f64;
    for &x in phi {
        if x.abs() < floor {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            nodes += 1;
        }
        last = x;
    }
    nodes
}

/// Dense kinetic matrix of the hard-wall sine DVR with n interior points.
fn sine_dvr_kinetic(n: usize, spacing: f64, mass: f64) -> DMatrix<f64> {
    let nn = (n + 1) as f64;
    let l = nn * spacing;
    // Basis transform S[j][k] = sqrt(2/(n+1)) sin(pi (k+1)(j+1)/(n+1)),
    // kinetic eigenvalues T_k = ((k+1) pi / L)^2 / (2 M).
    let norm = (2.0 / nn).sqrt();
    let mut t = DMatrix::zeros(n, n);
    let tk: Vec<f64> = (0..n)
        .map(|k| {
            let kk = (k + 1) as f64 * std::f64::consts::PI / l;
            kk * kk / (2.0 * mass)
        })
        .collect();
    for j in 0..n {
        for jp in j..n {
            let mut sum = 0.0;
            for k in 0..n {
                let sj = (std::f64::consts::PI * (k + 1) as f64 * (j + 1) as f64 / nn).sin();
                let sjp = (std::f64::consts::PI * (k + 1) as f64 * (jp + 1) as f64 / nn).sin();
                sum += tk[k] * sj * sjp;
            }
            let val = norm * norm * sum;
            t[(j, jp)] = val;
            t[(jp, j)] = val;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::SurrogateParams;
    use crate::units;

    #[test]
    fn particle_in_a_box() {
        let grid = SpatialGrid::build(0.0, 1.0, 64).unwrap();
        let mass = 1836.0;
        let v = vec![0.0; 64];
        let (e0, phi) = vibrational_ground(&grid, &v, mass).unwrap();
        // Hard walls sit one spacing outside the grid ends.
        let l = (64.0 + 1.0) * grid.spacing();
        let exact = std::f64::consts::PI.powi(2) / (2.0 * mass * l * l);
        assert!(
            ((e0 - exact) / exact).abs() < 1e-3,
            "box ground energy {e0} vs {exact}"
        );
        assert_eq!(count_nodes(&phi), 0);
    }

    #[test]
    fn harmonic_oscillator_zero_point() {
        // omega chosen so the grid resolves the oscillator comfortably.
        let grid = SpatialGrid::build(0.90, 2.12, 96).unwrap();
        let mass = 12498.0;
        let omega = 0.01;
        let q0 = 0.5 * (grid.q_min() + grid.q_max());
        let v: Vec<f64> = grid
            .points()
            .map(|q| 0.5 * mass * omega * omega * (q - q0).powi(2))
            .collect();
        let (e0, phi) = vibrational_ground(&grid, &v, mass).unwrap();
        assert!(
            ((e0 - omega / 2.0) / (omega / 2.0)).abs() < 1e-6,
            "harmonic zero point {e0} vs {}",
            omega / 2.0
        );
        assert_eq!(count_nodes(&phi), 0);
        let norm: f64 = grid.spacing() * phi.iter().map(|x| x * x).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surrogate_sigma_zero_point_matches_morse() {
        let params = SurrogateParams::carbon_monoxide();
        let grid = SpatialGrid::build(0.90, 2.12, 96).unwrap();
        let mass = 12498.0;
        let v: Vec<f64> = grid
            .points_angstrom()
            .map(|q| units::ev_to_hartree(params.sigma.eval_ev(q)))
            .collect();
        let (e0, _) = vibrational_ground(&grid, &v, mass).unwrap();

        // Morse closed form: E0 = omega_e/2 - omega_e x_e / 4,
        // with omega_e x_e = omega_e^2 / (4 D_e).
        let omega_e = units::wavenumber_to_hartree(2170.0);
        let d_e = units::ev_to_hartree(params.sigma.d_e_ev);
        let exact = omega_e / 2.0 - omega_e * omega_e / (16.0 * d_e);
        assert!(
            ((e0 - exact) / exact).abs() < 0.02,
            "Morse zero point {e0} vs {exact}"
        );
        // Also the coarse anchor from the harmonic level.
        let half = omega_e / 2.0;
        assert!(((e0 - half) / half).abs() < 0.02);
        // Ground energy sits below the well minimum plus one quantum.
        let v_min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(e0 < v_min + omega_e);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = SpatialGrid::build(0.0, 1.0, 16).unwrap();
        assert!(vibrational_ground(&grid, &vec![0.0; 16], -1.0).is_err());
        assert!(vibrational_ground(&grid, &vec![0.0; 8], 1.0).is_err());
        assert!(vibrational_ground(&grid, &vec![f64::NAN; 16], 1.0).is_err());
    }
}
