//! Polaritonic-surface analysis.
//!
//! Pointwise diagonalization of the excited-sector potential matrix (kinetic
//! energy omitted, GROUND omitted since it couples to nothing) yields the
//! upper/middle/lower polaritonic surfaces and the dark manifold. The
//! excited-sector matrix is an arrowhead: only the photon row couples, to the
//! Pi channel with E_c(N) mu_m(q) and to each emitter with E_c(N) mu_a. Its
//! eigenstructure splits exactly:
//!
//! * the (N-1)-fold dark manifold at V_Sigma + hbar*omega_a, spanned by
//!   emitter combinations with zero sum: no photon or Pi component at all;
//! * two (N = 0) or three bright states living in the (photon, Pi, symmetric
//!   emitter) block, with the symmetric combination coupled at sqrt(N) E_c mu_a.
//!
//! The bright block is diagonalized per grid point; the dark manifold is kept
//! as a projector, because any orthonormal basis inside the degenerate
//! manifold is equally valid. A test cross-checks this construction against a
//! dense diagonalization of the full (N+2) x (N+2) matrix.
//!
//! Eigenvector tracking reorders the bright states point-to-point by overlap
//! so that uncoupled surfaces may cross instead of being forced into
//! adiabatic order.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::basis::{StateVector, GROUND, MOL_PI, PHOTON};
use crate::curves::GriddedCurves;
use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;
use crate::hamiltonian::HamiltonianOperator;
use crate::params::ModelParams;

/// Labels for the tracked bright surfaces, in slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrightLabel {
    Lower,
    Middle,
    Upper,
}

impl BrightLabel {
    pub fn column_name(&self) -> &'static str {
        match self {
            BrightLabel::Lower => "lp",
            BrightLabel::Middle => "mp",
            BrightLabel::Upper => "up",
        }
    }
}

/// A logged near-ambiguous tracking assignment.
#[derive(Debug, Clone)]
pub struct TieEvent {
    pub point: usize,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PolaritonSurfaces {
    pub n_emitters: usize,
    pub grid: SpatialGrid,
    /// 2 bright states for N = 0, otherwise 3.
    pub n_bright: usize,
    /// energies[point][slot], in hartree.
    pub energies: Vec<Vec<f64>>,
    /// vectors[point][slot] = [photon, pi, symmetric-emitter] components.
    pub vectors: Vec<Vec<[f64; 3]>>,
    /// Flat dark-manifold energy V_Sigma + hbar*omega_a per point.
    pub dark_energy: Vec<f64>,
    /// N - 1 (zero for N <= 1).
    pub dark_multiplicity: usize,
    /// Ground-surface energy V_Sigma per point (reported alongside).
    pub ground_energy: Vec<f64>,
    pub tracked: bool,
    /// After tracking: physical label per slot; identity order before.
    pub labels: Vec<BrightLabel>,
    pub tie_log: Vec<TieEvent>,
}

/// Pointwise diagonalization of the excited-sector potential matrix.
/// States are in ascending energy order per point ("adiabatic" order).
pub fn pointwise_diagonalize(
    curves: &GriddedCurves,
    params: &ModelParams,
) -> Result<PolaritonSurfaces> {
    let n_em = params.n_emitters;
    let n_bright = if n_em == 0 { 2 } else { 3 };
    let field = params.effective_field();
    let g_collective = (n_em as f64).sqrt() * field * params.mu_a;
    let n_points = curves.grid.n_points();

    let mut energies = Vec::with_capacity(n_points);
    let mut vectors = Vec::with_capacity(n_points);
    let mut dark_energy = Vec::with_capacity(n_points);

    for j in 0..n_points {
        let d_photon = curves.v_sigma[j] + params.photon_energy;
        let d_pi = curves.v_pi[j];
        let d_bright = curves.v_sigma[j] + params.emitter_energy;
        let g_m = field * curves.mu_m[j];

        let dim = n_bright;
        let mut block = DMatrix::<f64>::zeros(dim, dim);
        block[(0, 0)] = d_photon;
        block[(1, 1)] = d_pi;
        block[(0, 1)] = g_m;
        block[(1, 0)] = g_m;
        if n_em > 0 {
            block[(2, 2)] = d_bright;
            block[(0, 2)] = g_collective;
            block[(2, 0)] = g_collective;
        }
        let eig = SymmetricEigen::new(block);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let mut e_row = Vec::with_capacity(dim);
        let mut v_row = Vec::with_capacity(dim);
        for &k in &order {
            e_row.push(eig.eigenvalues[k]);
            let col = eig.eigenvectors.column(k);
            let mut v = [col[0], col[1], 0.0];
            if n_em > 0 {
                v[2] = col[2];
            }
            v_row.push(v);
        }
        energies.push(e_row);
        vectors.push(v_row);
        dark_energy.push(d_bright);
    }

    Ok(PolaritonSurfaces {
        n_emitters: n_em,
        grid: curves.grid.clone(),
        n_bright,
        energies,
        vectors,
        dark_energy,
        dark_multiplicity: n_em.saturating_sub(1),
        ground_energy: curves.v_sigma.clone(),
        tracked: false,
        labels: default_labels(n_bright),
        tie_log: Vec::new(),
    })
}

fn default_labels(n_bright: usize) -> Vec<BrightLabel> {
    if n_bright == 2 {
        vec![BrightLabel::Lower, BrightLabel::Upper]
    } else {
        vec![BrightLabel::Lower, BrightLabel::Middle, BrightLabel::Upper]
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Reorder states point-to-point by eigenvector overlap (greedy assignment,
/// largest overlaps first) so that weakly coupled surfaces cross smoothly,
/// and fix the gauge so consecutive overlaps are positive. Labels are
/// assigned by energy order at the most strongly mixed point.
pub fn track_eigenvectors(mut s: PolaritonSurfaces) -> Result<PolaritonSurfaces> {
    let n_points = s.grid.n_points();
    if n_points < 2 {
        s.tracked = true;
        return Ok(s);
    }
    let dim = s.n_bright;
    let mut tie_log = Vec::new();

    for j in 1..n_points {
        // Overlap of previous (tracked) states with current adiabatic states.
        let prev = s.vectors[j - 1].clone();
        let cur_v = s.vectors[j].clone();
        let cur_e = s.energies[j].clone();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                pairs.push((dot3(&prev[a], &cur_v[b]).abs(), a, b));
            }
        }
        pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

        let mut assign = vec![usize::MAX; dim];
        let mut used = vec![false; dim];
        for (i, &(ov, a, b)) in pairs.iter().enumerate() {
            if assign[a] != usize::MAX || used[b] {
                continue;
            }
            // Tie handling: a competing assignment within 1e-6 is resolved
            // toward the energetically closer state and logged.
            if let Some(&(ov2, _, b2)) = pairs[i + 1..]
                .iter()
                .find(|&&(_, a2, b2)| a2 == a && !used[b2])
            {
                if (ov - ov2).abs() < 1e-6 && b != b2 {
                    let e_prev = s.energies[j - 1][a];
                    let better = if (cur_e[b] - e_prev).abs() <= (cur_e[b2] - e_prev).abs() {
                        b
                    } else {
                        b2
                    };
                    tie_log.push(TieEvent {
                        point: j,
                        detail: format!(
                            "state {a}: overlaps {ov:.8} vs {ov2:.8}; chose by energy proximity"
                        ),
                    });
                    assign[a] = better;
                    used[better] = true;
                    continue;
                }
            }
            assign[a] = b;
            used[b] = true;
        }

        // Apply the permutation and the sign gauge.
        let mut new_e = vec![0.0; dim];
        let mut new_v = vec![[0.0; 3]; dim];
        for a in 0..dim {
            let b = assign[a];
            new_e[a] = cur_e[b];
            let mut v = cur_v[b];
            if dot3(&s.vectors[j - 1][a], &v) < 0.0 {
                v = [-v[0], -v[1], -v[2]];
            }
            new_v[a] = v;
        }
        s.energies[j] = new_e;
        s.vectors[j] = new_v;
    }

    // Label slots by energy order where the bright states are most mixed
    // (maximum total coupling), which is where UP/MP/LP are well separated.
    let j_star = (0..n_points)
        .max_by(|&a, &b| {
            let ca = s.vectors[a]
                .iter()
                .map(|v| v[0].abs().min(1.0 - v[0].abs()))
                .fold(0.0f64, f64::max);
            let cb = s.vectors[b]
                .iter()
                .map(|v| v[0].abs().min(1.0 - v[0].abs()))
                .fold(0.0f64, f64::max);
            ca.partial_cmp(&cb).unwrap()
        })
        .unwrap_or(n_points / 2);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| s.energies[j_star][a].partial_cmp(&s.energies[j_star][b]).unwrap());
    let canonical = default_labels(dim);
    let mut labels = vec![BrightLabel::Lower; dim];
    for (rank, &slot) in order.iter().enumerate() {
        labels[slot] = canonical[rank];
    }

    s.labels = labels;
    s.tie_log = tie_log;
    s.tracked = true;
    Ok(s)
}

/// Per-state populations of a trajectory state in the polaritonic basis.
#[derive(Debug, Clone)]
pub struct PolaritonPopulations {
    pub ground: f64,
    /// One entry per bright slot, in slot order (see `labels`).
    pub bright: Vec<f64>,
    pub dark_sum: f64,
}

impl PolaritonPopulations {
    pub fn total(&self) -> f64 {
        self.ground + self.dark_sum + self.bright.iter().sum::<f64>()
    }
}

/// Project a product-basis state onto the polaritonic surfaces.
pub fn project_populations(
    psi: &StateVector,
    surfaces: &PolaritonSurfaces,
) -> Result<PolaritonPopulations> {
    if psi.n_emitters() != surfaces.n_emitters || psi.n_points() != surfaces.grid.n_points() {
        return Err(TcmolError::Config(format!(
            "state ({} emitters, {} points) does not match surfaces ({}, {})",
            psi.n_emitters(),
            psi.n_points(),
            surfaces.n_emitters,
            surfaces.grid.n_points()
        )));
    }
    let s_amp = psi.bright_amplitude();
    let bright = project_bright_components(
        psi.channel(PHOTON),
        psi.channel(MOL_PI),
        &s_amp,
        surfaces,
        psi.spacing(),
    );
    Ok(PolaritonPopulations {
        ground: psi.population(GROUND),
        bright,
        dark_sum: psi.dark_population(),
    })
}

/// Bright-state populations from the (photon, pi, bright) channel functions.
/// Shared by both trajectory engines.
pub fn project_bright_components(
    photon: &[Complex64],
    pi: &[Complex64],
    bright: &[Complex64],
    surfaces: &PolaritonSurfaces,
    spacing: f64,
) -> Vec<f64> {
    let dim = surfaces.n_bright;
    let mut pops = vec![0.0; dim];
    for j in 0..photon.len() {
        for (slot, pop) in pops.iter_mut().enumerate() {
            let v = &surfaces.vectors[j][slot];
            let amp = photon[j] * v[0] + pi[j] * v[1] + bright[j] * v[2];
            *pop += amp.norm_sqr();
        }
    }
    for p in &mut pops {
        *p *= spacing;
    }
    pops
}

/// Options for the eigenbasis analysis of a dephasing operator.
#[derive(Debug, Clone)]
pub struct DephasingAnalysisOptions {
    /// Energy clustering threshold for the block metric (hartree).
    pub epsilon_block: f64,
    /// Optional cutoff: also report the metric restricted to eigenstates
    /// below this energy (excludes nuclear continuum states).
    pub dissociation_cutoff: Option<f64>,
    /// Refuse dense diagonalization above this dimension.
    pub dim_cap: usize,
}

impl Default for DephasingAnalysisOptions {
    fn default() -> Self {
        Self {
            // One vibrational quantum of the Sigma surrogate (2170 cm^-1).
            epsilon_block: crate::units::wavenumber_to_hartree(2170.0),
            dissociation_cutoff: None,
            dim_cap: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DephasingAnalysis {
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    /// The transformed operator U^T sigma_z^(n) U in the energy-ordered
    /// eigenbasis.
    pub transformed: DMatrix<f64>,
    pub unitarity_residual: f64,
    /// ||transformed||_F / ||sigma_z||_F; exactly 1 for an orthogonal U.
    pub frobenius_ratio: f64,
    pub epsilon_block: f64,
    pub n_clusters: usize,
    /// Fraction of squared matrix mass outside the near-degenerate clusters.
    pub off_block_fraction: f64,
    /// Same, restricted to eigenstates below the dissociation cutoff.
    pub off_block_fraction_below_cutoff: Option<f64>,
    /// Element-level diagnostic: fraction of squared mass off the diagonal
    /// itself. Large here, small off-block: the operator picks up plenty of
    /// off-diagonal structure but stays confined to energy clusters.
    pub off_diagonal_fraction: f64,
}

/// Transform one emitter's dephasing operator to the eigenbasis of the full
/// excited-sector Hamiltonian (kinetic term included, GROUND omitted) and
/// measure how block diagonal it stays.
pub fn eigenbasis_dephasing_matrix(
    curves: &GriddedCurves,
    params: &ModelParams,
    emitter_index: usize,
    opts: &DephasingAnalysisOptions,
) -> Result<DephasingAnalysis> {
    let n_em = params.n_emitters;
    if emitter_index >= n_em {
        return Err(TcmolError::Config(format!(
            "emitter index {emitter_index} out of range ({n_em} emitters)"
        )));
    }
    let n = curves.grid.n_points();
    let n_channels = n_em + 2; // photon, pi, emitters; ground omitted
    let dim = n_channels * n;
    if dim > opts.dim_cap {
        return Err(TcmolError::Config(format!(
            "dense eigenbasis analysis dimension {dim} exceeds the cap {}; \
             reduce N or the grid, or raise the cap",
            opts.dim_cap
        )));
    }

    let basis = crate::basis::BasisLayout::new(n_em);
    let op = HamiltonianOperator::assemble(basis, curves, params)?;
    let kinetic = op.kinetic_matrix();
    let field = params.effective_field();

    // Dense Hermitian (real symmetric) excited-sector Hamiltonian.
    // Channel order here: 0 = photon, 1 = pi, 2 + e = emitter e.
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..n_channels {
        let base = c * n;
        let pot: &[f64] = match c {
            0 => op.v_photon(),
            1 => op.v_pi(),
            _ => op.v_emitter(),
        };
        for j in 0..n {
            for i in 0..n {
                h[(base + i, base + j)] = kinetic[(i, j)];
            }
            h[(base + j, base + j)] += pot[j];
        }
    }
    for j in 0..n {
        let g_m = field * curves.mu_m[j];
        h[(j, n + j)] = g_m;
        h[(n + j, j)] = g_m;
        let g_a = field * params.mu_a;
        for e in 0..n_em {
            let row = (2 + e) * n + j;
            h[(j, row)] = g_a;
            h[(row, j)] = g_a;
        }
    }

    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();

    // U with energy-ordered columns.
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        u.set_column(col, &eig.eigenvectors.column(k));
    }

    let unitarity_residual = {
        let g = u.transpose() * &u;
        let mut r = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let expect = if i == j { 1.0 } else { 0.0 };
                r = r.max((g[(i, j)] - expect).abs());
            }
        }
        r
    };

    // sigma_z diagonal: -1 on the chosen emitter block, +1 elsewhere.
    let sign = |row: usize| -> f64 {
        if row / n == 2 + emitter_index {
            -1.0
        } else {
            1.0
        }
    };
    // transformed = U^T D U computed as (D U) pre-scaling rows.
    let mut du = u.clone();
    for row in 0..dim {
        if sign(row) < 0.0 {
            for col in 0..dim {
                du[(row, col)] = -du[(row, col)];
            }
        }
    }
    let transformed = u.transpose() * du;

    let frob_sigma = (dim as f64).sqrt();
    let frob_t = transformed.iter().map(|x| x * x).sum::<f64>().sqrt();
    let frobenius_ratio = frob_t / frob_sigma;

    // Energy clusters: a new cluster starts where the gap exceeds epsilon.
    let mut cluster = vec![0usize; dim];
    let mut cid = 0usize;
    for k in 1..dim {
        if eigenvalues[k] - eigenvalues[k - 1] > opts.epsilon_block {
            cid += 1;
        }
        cluster[k] = cid;
    }
    let n_clusters = cid + 1;

    let off_fraction = |keep: &dyn Fn(usize) -> bool| -> f64 {
        let mut total = 0.0;
        let mut off = 0.0;
        for i in 0..dim {
            if !keep(i) {
                continue;
            }
            for j in 0..dim {
                if !keep(j) {
                    continue;
                }
                let m2 = transformed[(i, j)] * transformed[(i, j)];
                total += m2;
                if cluster[i] != cluster[j] {
                    off += m2;
                }
            }
        }
        if total > 0.0 {
            off / total
        } else {
            0.0
        }
    };

    let off_block_fraction = off_fraction(&|_| true);
    let off_block_fraction_below_cutoff = opts
        .dissociation_cutoff
        .map(|cut| off_fraction(&|i| eigenvalues[i] <= cut));
    let off_diagonal_fraction = {
        let mut diag = 0.0;
        let mut total = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let m2 = transformed[(i, j)] * transformed[(i, j)];
                total += m2;
                if i == j {
                    diag += m2;
                }
            }
        }
        1.0 - diag / total
    };

    Ok(DephasingAnalysis {
        dim,
        eigenvalues,
        transformed,
        unitarity_residual,
        frobenius_ratio,
        epsilon_block: opts.epsilon_block,
        n_clusters,
        off_block_fraction,
        off_block_fraction_below_cutoff,
        off_diagonal_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{interpolate_to_grid, surrogate_curves, SurrogateParams};
    use crate::params::PhysicalParams;
    use crate::units;

    fn co_setup(n_emitters: usize) -> (GriddedCurves, ModelParams) {
        let curves = surrogate_curves(&SurrogateParams::carbon_monoxide()).unwrap();
        let grid = SpatialGrid::build(0.90, 2.12, 96).unwrap();
        let gridded = interpolate_to_grid(&curves, &grid).unwrap();
        let params = ModelParams::from_physical(&PhysicalParams {
            n_emitters,
            ..Default::default()
        })
        .unwrap();
        (gridded, params)
    }

    /// Exactly resonant flat toy: all excited diagonals equal, so the
    /// arrowhead identity for the splitting is exact.
    fn resonant_flat(n_emitters: usize, mu_m_debye: f64) -> (GriddedCurves, ModelParams) {
        let grid = SpatialGrid::build(0.0, 1.0, 8).unwrap();
        let params = ModelParams::from_physical(&PhysicalParams {
            n_emitters,
            ..Default::default()
        })
        .unwrap();
        let n = grid.n_points();
        let curves = GriddedCurves::from_arrays(
            grid,
            vec![0.0; n],
            vec![params.photon_energy; n],
            vec![units::debye_to_au(mu_m_debye); n],
        )
        .unwrap();
        (curves, params)
    }

    #[test]
    fn arrowhead_splitting_identity() {
        for n_em in [0usize, 1, 2, 60] {
            let (curves, params) = resonant_flat(n_em, 1.5);
            let s = pointwise_diagonalize(&curves, &params).unwrap();
            let split = s.energies[3].last().unwrap() - s.energies[3][0];
            let expected = params.collective_splitting(units::debye_to_au(1.5));
            assert!(
                ((split - expected) / expected).abs() < 1e-10,
                "N = {n_em}: split {split} vs {expected}"
            );
        }
    }

    #[test]
    fn n0_resonance_splitting_from_surrogate() {
        let (curves, params) = co_setup(0);
        let q_star = crate::curves::resonance_position(&curves, params.photon_energy).unwrap();
        let j_star = curves
            .grid
            .points()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a - q_star).abs().partial_cmp(&(b - q_star).abs()).unwrap()
            })
            .unwrap()
            .0;
        let s = pointwise_diagonalize(&curves, &params).unwrap();
        let split = s.energies[j_star][1] - s.energies[j_star][0];
        let expected = 2.0 * params.effective_field() * curves.mu_m[j_star];
        // The grid point sits within half a spacing of the true crossing, so
        // the residual detuning shifts the gap at second order.
        assert!(
            ((split - expected) / expected).abs() < 5e-2,
            "split {split} vs {expected}"
        );
    }

    #[test]
    fn dark_manifold_counting() {
        let (curves, params) = co_setup(2);
        let s = pointwise_diagonalize(&curves, &params).unwrap();
        assert_eq!(s.dark_multiplicity, 1);
        assert_eq!(s.n_bright, 3);
        for j in 0..s.grid.n_points() {
            assert!((s.dark_energy[j] - (curves.v_sigma[j] + params.emitter_energy)).abs() < 1e-14);
        }
        let (curves0, params0) = co_setup(0);
        let s0 = pointwise_diagonalize(&curves0, &params0).unwrap();
        assert_eq!(s0.dark_multiplicity, 0);
        assert_eq!(s0.n_bright, 2);
    }

    #[test]
    fn block_construction_matches_dense_diagonalization() {
        let (curves, params) = co_setup(2);
        let s = pointwise_diagonalize(&curves, &params).unwrap();
        let field = params.effective_field();
        let g_a = field * params.mu_a;
        for j in [0usize, 17, 48, 95] {
            let dim = 4;
            let mut m = DMatrix::<f64>::zeros(dim, dim);
            m[(0, 0)] = curves.v_sigma[j] + params.photon_energy;
            m[(1, 1)] = curves.v_pi[j];
            m[(2, 2)] = curves.v_sigma[j] + params.emitter_energy;
            m[(3, 3)] = curves.v_sigma[j] + params.emitter_energy;
            let g_m = field * curves.mu_m[j];
            m[(0, 1)] = g_m;
            m[(1, 0)] = g_m;
            for e in 0..2 {
                m[(0, 2 + e)] = g_a;
                m[(2 + e, 0)] = g_a;
            }
            let eig = SymmetricEigen::new(m);
            let mut dense: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
            dense.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut block: Vec<f64> = s.energies[j].clone();
            block.push(s.dark_energy[j]);
            block.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in dense.iter().zip(&block) {
                assert!((a - b).abs() < 1e-12, "point {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tracked_surfaces_stay_continuous() {
        let (curves, params) = co_setup(2);
        let s = pointwise_diagonalize(&curves, &params).unwrap();
        let tracked = track_eigenvectors(s).unwrap();
        // At the avoided crossing the mixing angle rotates by up to ~45 deg
        // per grid spacing (detuning slope ~9 eV/A against ~0.05 eV
        // couplings), so adjacent overlaps there cannot reach 0.9 at the
        // production grid resolution. Away from that narrow zone they must.
        let mut below = 0usize;
        for j in 1..tracked.grid.n_points() {
            for slot in 0..tracked.n_bright {
                let ov = dot3(&tracked.vectors[j - 1][slot], &tracked.vectors[j][slot]);
                assert!(ov > 0.5, "tracked overlap {ov} at point {j}, slot {slot}");
                if ov <= 0.9 {
                    below += 1;
                }
            }
        }
        let total = (tracked.grid.n_points() - 1) * tracked.n_bright;
        assert!(
            below * 20 < total,
            "{below}/{total} adjacent overlaps below 0.9"
        );
    }

    #[test]
    fn tracking_lets_decoupled_diabats_cross() {
        // Photon and Pi diabats cross with zero coupling: tracked slots
        // follow their character straight through the crossing.
        let grid = SpatialGrid::build(0.0, 1.0, 16).unwrap();
        let n = grid.n_points();
        let params = ModelParams::from_physical(&PhysicalParams {
            n_emitters: 0,
            mu_a_debye: 0.0,
            ..Default::default()
        })
        .unwrap();
        let v_sigma = vec![0.0; n];
        // V_pi rises through the flat photon level omega_c between j=7 and 8.
        let v_pi: Vec<f64> = (0..n)
            .map(|j| params.photon_energy + 0.02 * (j as f64 - 7.5))
            .collect();
        let curves = GriddedCurves::from_arrays(grid, v_sigma, v_pi, vec![0.0; n]).unwrap();
        let s = pointwise_diagonalize(&curves, &params).unwrap();
        let tracked = track_eigenvectors(s).unwrap();
        // Slot photon-character must stay photon across the crossing.
        let mut photon_slot = None;
        for slot in 0..2 {
            if tracked.vectors[0][slot][0].abs() > 0.99 {
                photon_slot = Some(slot);
            }
        }
        let slot = photon_slot.expect("photon-dominated slot at the left edge");
        for j in 0..n {
            assert!(
                tracked.vectors[j][slot][0].abs() > 0.99,
                "photon character lost at point {j}"
            );
            assert!((tracked.energies[j][slot] - params.photon_energy).abs() < 1e-12);
        }
    }

    #[test]
    fn projections_of_characteristic_states() {
        let (curves, params) = co_setup(2);
        let s = track_eigenvectors(pointwise_diagonalize(&curves, &params).unwrap()).unwrap();
        let bundle = crate::model::ModelBundle::molecular(params, curves).unwrap();

        // Initial photon state: no dark population, bright populations sum to 1.
        let pops = project_populations(&bundle.initial, &s).unwrap();
        assert!(pops.dark_sum < 1e-12);
        assert!((pops.total() - 1.0).abs() < 1e-10);

        // Antisymmetric emitter state: pure dark.
        let mut psi = StateVector::zeros(bundle.basis, &bundle.grid);
        let phi: Vec<Complex64> = bundle.initial.channel(PHOTON).to_vec();
        let inv = 1.0 / 2.0f64.sqrt();
        for j in 0..bundle.grid.n_points() {
            psi.channel_mut(crate::basis::EMITTER0)[j] = phi[j] * inv;
            psi.channel_mut(crate::basis::EMITTER0 + 1)[j] = -phi[j] * inv;
        }
        let pops = project_populations(&psi, &s).unwrap();
        assert!((pops.dark_sum - 1.0).abs() < 1e-10);
        assert!(pops.bright.iter().all(|&b| b < 1e-12));

        // A state concentrated on one tracked eigenvector profile.
        let slot = 1;
        let mut psi = StateVector::zeros(bundle.basis, &bundle.grid);
        for j in 0..bundle.grid.n_points() {
            let v = &s.vectors[j][slot];
            psi.channel_mut(PHOTON)[j] = phi[j] * v[0];
            psi.channel_mut(MOL_PI)[j] = phi[j] * v[1];
            // Emitter components of the bright combination: v[2]/sqrt(N) each.
            let per = phi[j] * (v[2] / 2.0f64.sqrt());
            psi.channel_mut(crate::basis::EMITTER0)[j] = per;
            psi.channel_mut(crate::basis::EMITTER0 + 1)[j] = per;
        }
        psi.renormalize().unwrap();
        let pops = project_populations(&psi, &s).unwrap();
        assert!(
            (pops.bright[slot] - 1.0).abs() < 1e-9,
            "slot population {}",
            pops.bright[slot]
        );
    }

    #[test]
    fn eigenbasis_dephasing_is_orthogonal_and_blocky() {
        let (curves, params) = {
            let curves = surrogate_curves(&SurrogateParams::carbon_monoxide()).unwrap();
            // Coarser grid keeps the dense eigensolve quick in unit tests.
            let grid = SpatialGrid::build(0.90, 2.12, 32).unwrap();
            let gridded = interpolate_to_grid(&curves, &grid).unwrap();
            let params = ModelParams::from_physical(&PhysicalParams {
                n_emitters: 2,
                ..Default::default()
            })
            .unwrap();
            (gridded, params)
        };
        let analysis =
            eigenbasis_dephasing_matrix(&curves, &params, 0, &DephasingAnalysisOptions::default())
                .unwrap();
        assert_eq!(analysis.dim, 4 * 32);
        assert!(analysis.unitarity_residual < 1e-10);
        assert!((analysis.frobenius_ratio - 1.0).abs() < 1e-10);
        assert!(
            analysis.off_block_fraction < 0.1,
            "off-block fraction {}",
            analysis.off_block_fraction
        );
        assert!(analysis.n_clusters > 1);
    }

    #[test]
    fn eigenbasis_dephasing_respects_dim_cap() {
        let (curves, params) = co_setup(60);
        let err = eigenbasis_dephasing_matrix(
            &curves,
            &params,
            0,
            &DephasingAnalysisOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("cap"));
    }
}
