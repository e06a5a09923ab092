//! Dense Lindblad density-matrix integration for small instances.
//!
//! This is the correctness oracle for the trajectory unraveling: classical
//! RK4 on the full master equation
//!
//! ```text
//! d(rho)/dt = -i [H, rho] + sum_k ( L_k rho L_k'  -  1/2 {L_k' L_k, rho} )
//! ```
//!
//! with the dephasing operators entering as elementwise sign masks (they are
//! diagonal) and photon decay moving the photon block onto GROUND. Dimensions
//! stay tiny (single grid point or a handful of points), so everything is
//! dense and transparent. Invariants (hermiticity, trace, positivity) are
//! re-checked every 100 steps; on drift the step is halved and the
//! integration restarts, up to four times.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{StateVector, EMITTER0, GROUND, MOL_PI, PHOTON};
use crate::ensemble::EnsembleStatistics;
use crate::error::{Result, TcmolError};
use crate::hamiltonian::HamWorkspace;
use crate::model::ModelBundle;

pub const ORACLE_DIM_CAP: usize = 1024;

/// Density matrix over the product basis (channel-major, grid index fast),
/// in the discretely normalized convention: amplitudes carry sqrt(spacing),
/// so the trace is a plain sum.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub m: DMatrix<Complex64>,
    pub time: f64,
}

impl DensityMatrix {
    pub fn from_pure_state(psi: &StateVector) -> Self {
        let dim = psi.data().len();
        let w = psi.spacing().sqrt();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = psi.data()[i] * w * (psi.data()[j] * w).conj();
            }
        }
        Self { m, time: 0.0 }
    }

    pub fn trace(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.m.nrows() {
            acc += self.m[(i, i)];
        }
        acc
    }

    pub fn check_invariants(&self) -> Result<()> {
        let dim = self.m.nrows();
        let mut herm = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                herm = herm.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        if herm > 1e-10 {
            return Err(TcmolError::Numerics(format!(
                "density matrix hermiticity drift {herm:.2e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-12 {
            return Err(TcmolError::Numerics(format!(
                "density matrix trace drift: {tr}"
            )));
        }
        let eig = nalgebra::SymmetricEigen::new(self.m.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(TcmolError::Numerics(format!(
                "density matrix lost positivity: min eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }
}

/// A named linear observable Tr(O rho).
pub struct OracleObservable {
    pub name: String,
    pub matrix: DMatrix<Complex64>,
}

/// Dense oracle model built from a bundle.
pub struct OracleModel {
    h: DMatrix<Complex64>,
    /// Sign masks of the dephasing operators (emitters then molecule), each
    /// entering at rate gamma/2.
    sign_masks: Vec<Vec<f64>>,
    gamma: f64,
    kappa: f64,
    n_channels: usize,
    n_points: usize,
}

impl OracleModel {
    pub fn new(bundle: &ModelBundle) -> Result<Self> {
        let dim = bundle.hamiltonian.dim();
        if dim > ORACLE_DIM_CAP {
            return Err(TcmolError::Config(format!(
                "oracle dimension {dim} exceeds the dense cap {ORACLE_DIM_CAP}"
            )));
        }
        // Dense Hermitian H from the matrix-free operator.
        let mut ws = HamWorkspace::new(&bundle.hamiltonian);
        let mut h = DMatrix::zeros(dim, dim);
        let mut unit = vec![Complex64::new(0.0, 0.0); dim];
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for col in 0..dim {
            unit.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            unit[col] = Complex64::new(1.0, 0.0);
            bundle.hamiltonian.apply_into(&unit, &mut out, &mut ws);
            for row in 0..dim {
                h[(row, col)] = out[row];
            }
        }

        let n = bundle.hamiltonian.n_points();
        let n_channels = bundle.hamiltonian.n_channels();
        let n_em = bundle.params.n_emitters;
        let mut sign_masks = Vec::with_capacity(n_em + 1);
        for e in 0..n_em {
            let mut mask = vec![1.0; dim];
            for j in 0..n {
                mask[(EMITTER0 + e) * n + j] = -1.0;
            }
            sign_masks.push(mask);
        }
        let mut mol = vec![1.0; dim];
        for j in 0..n {
            mol[MOL_PI * n + j] = -1.0;
        }
        sign_masks.push(mol);

        Ok(Self {
            h,
            sign_masks,
            gamma: bundle.params.gamma,
            kappa: bundle.params.kappa,
            n_channels,
            n_points: n,
        })
    }

    /// Full Lindblad right-hand side.
    fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let minus_i = Complex64::new(0.0, -1.0);
        let mut out = (&self.h * rho - rho * &self.h) * minus_i;

        // Pure dephasing: for diagonal L = sqrt(g/2) S with S^2 = 1,
        // the dissipator is (g/2) (S rho S - rho), elementwise.
        if self.gamma > 0.0 {
            let half_g = 0.5 * self.gamma;
            for mask in &self.sign_masks {
                for i in 0..rho.nrows() {
                    for j in 0..rho.ncols() {
                        let factor = mask[i] * mask[j] - 1.0;
                        if factor != 0.0 {
                            out[(i, j)] += half_g * factor * rho[(i, j)];
                        }
                    }
                }
            }
        }

        // Photon decay: a rho a' lands the photon block on GROUND, and the
        // anticommutator damps every photon row and column.
        if self.kappa > 0.0 {
            let n = self.n_points;
            let dim = rho.nrows();
            let ph = PHOTON * n;
            let gr = GROUND * n;
            for i in 0..n {
                for j in 0..n {
                    out[(gr + i, gr + j)] += self.kappa * rho[(ph + i, ph + j)];
                }
            }
            let half_k = 0.5 * self.kappa;
            for i in 0..n {
                for j in 0..dim {
                    out[(ph + i, j)] -= half_k * rho[(ph + i, j)];
                    out[(j, ph + i)] -= half_k * rho[(j, ph + i)];
                }
            }
        }
        out
    }

    /// Channel-class populations matching the trajectory columns
    /// [ground, photon, pi, bright, dark] plus the energy.
    pub fn standard_observables(&self, rho: &DensityMatrix) -> Vec<f64> {
        let n = self.n_points;
        let n_em = self.n_channels - 3;
        let block_pop = |c: usize| -> f64 {
            (0..n).map(|j| rho.m[(c * n + j, c * n + j)].re).sum()
        };
        let ground = block_pop(GROUND);
        let photon = block_pop(PHOTON);
        let pi = block_pop(MOL_PI);
        let mut emitter_total = 0.0;
        for e in 0..n_em {
            emitter_total += block_pop(EMITTER0 + e);
        }
        // Bright projector: (1/N) sum_{m,m'} |e_m, j><e_m', j|.
        let mut bright = 0.0;
        if n_em > 0 {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n_em {
                    for mp in 0..n_em {
                        acc += rho.m[((EMITTER0 + m) * n + j, (EMITTER0 + mp) * n + j)];
                    }
                }
                bright += acc.re / n_em as f64;
            }
        }
        let dark = (emitter_total - bright).max(0.0);
        let energy = {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..rho.m.nrows() {
                for k in 0..rho.m.ncols() {
                    acc += self.h[(i, k)] * rho.m[(k, i)];
                }
            }
            acc.re
        };
        vec![ground, photon, pi, bright, dark, energy]
    }

    pub fn standard_observable_names() -> Vec<String> {
        ["pop_ground", "pop_photon", "pop_pi", "pop_bright", "pop_dark", "energy_hartree"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

/// One row of oracle output.
#[derive(Debug, Clone)]
pub struct OracleRow {
    pub time: f64,
    pub values: Vec<f64>,
}

/// Integrate the Lindblad equation, sampling observables at the requested
/// times (which must be ascending, starting at 0).
pub fn integrate_lindblad(
    model: &OracleModel,
    rho0: DensityMatrix,
    sample_times: &[f64],
    dt: f64,
    extra: &[OracleObservable],
) -> Result<(Vec<OracleRow>, DensityMatrix)> {
    if sample_times.is_empty() || sample_times[0] != 0.0 {
        return Err(TcmolError::Config(
            "oracle sample times must start at t = 0".into(),
        ));
    }
    // Bound dt by the fastest Liouvillian frequency: the spectral spread of H.
    let dim = rho0.m.nrows();
    if dim != model.h.nrows() {
        return Err(TcmolError::Config(format!(
            "density matrix dimension {dim} does not match the model ({})",
            model.h.nrows()
        )));
    }
    let mut dt_try = dt;
    'attempt: for attempt in 0..4 {
        let mut rho = rho0.clone();
        let mut rows = Vec::with_capacity(sample_times.len());
        let mut steps_since_check = 0usize;
        let observe = |model: &OracleModel, rho: &DensityMatrix| -> Vec<f64> {
            let mut v = model.standard_observables(rho);
            for o in extra {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..rho.m.nrows() {
                    for k in 0..rho.m.ncols() {
                        acc += o.matrix[(i, k)] * rho.m[(k, i)];
                    }
                }
                v.push(acc.re);
            }
            v
        };
        rows.push(OracleRow {
            time: 0.0,
            values: observe(model, &rho),
        });

        for w in sample_times.windows(2) {
            let span = w[1] - w[0];
            if span <= 0.0 {
                return Err(TcmolError::Config("oracle sample times must increase".into()));
            }
            let n_steps = (span / dt_try).ceil().max(1.0) as usize;
            let h = span / n_steps as f64;
            for _ in 0..n_steps {
                let k1 = model.rhs(&rho.m);
                let k2 = model.rhs(&(&rho.m + &k1 * Complex64::new(0.5 * h, 0.0)));
                let k3 = model.rhs(&(&rho.m + &k2 * Complex64::new(0.5 * h, 0.0)));
                let k4 = model.rhs(&(&rho.m + &k3 * Complex64::new(h, 0.0)));
                rho.m += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                    * Complex64::new(h / 6.0, 0.0);
                rho.time += h;
                steps_since_check += 1;
                if steps_since_check >= 100 {
                    steps_since_check = 0;
                    if rho.check_invariants().is_err() {
                        dt_try *= 0.5;
                        if attempt == 3 {
                            rho.check_invariants()?;
                        }
                        continue 'attempt;
                    }
                }
            }
            rows.push(OracleRow {
                time: rho.time,
                values: observe(model, &rho),
            });
        }
        rho.check_invariants()?;
        return Ok((rows, rho));
    }
    unreachable!("attempt loop either returns or errors")
}

/// Comparison of ensemble statistics against the oracle.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// (column, time_fs, ensemble mean, oracle value, z score)
    pub entries: Vec<(String, f64, f64, f64, f64)>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Per-observable z-scores (ensemble mean - oracle)/stderr at matching
/// sample times; passes when all |z| < 3. Columns missing on either side are
/// an error. For deterministic ensembles (stderr ~ 0) exact agreement within
/// 1e-8 is required instead.
pub fn compare(
    stats: &EnsembleStatistics,
    oracle_rows: &[OracleRow],
    oracle_columns: &[String],
    compare_times: &[f64],
) -> Result<ComparisonReport> {
    let mut entries = Vec::new();
    let mut max_abs_z = 0.0f64;
    let mut pass = true;

    for &t in compare_times {
        let si = stats
            .sample_times
            .iter()
            .position(|&x| (x - t).abs() < 1e-6)
            .ok_or_else(|| {
                TcmolError::Config(format!("ensemble has no sample at t = {t} au"))
            })?;
        let oi = oracle_rows
            .iter()
            .position(|r| (r.time - t).abs() < 1e-6)
            .ok_or_else(|| TcmolError::Config(format!("oracle has no sample at t = {t} au")))?;
        for (ci, name) in oracle_columns.iter().enumerate() {
            let sc = stats.column(name).ok_or_else(|| {
                TcmolError::Config(format!("ensemble statistics lack column {name}"))
            })?;
            let mean = stats.mean[si][sc];
            let err = stats.stderr[si][sc];
            let oracle = oracle_rows[oi].values[ci];
            let z = if err > 1e-12 {
                (mean - oracle) / err
            } else if (mean - oracle).abs() < 1e-8 {
                0.0
            } else {
                f64::INFINITY
            };
            max_abs_z = max_abs_z.max(z.abs());
            if z.abs() >= 3.0 {
                pass = false;
            }
            entries.push((
                name.clone(),
                crate::units::au_to_fs(t),
                mean,
                oracle,
                z,
            ));
        }
    }
    Ok(ComparisonReport {
        entries,
        max_abs_z,
        pass,
    })
}
