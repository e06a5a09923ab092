//! Seeded trajectory ensembles and their statistics.
//!
//! Trajectories are independent work units distributed over a rayon pool.
//! Every trajectory gets its own deterministic RNG stream, the per-sample
//! observable matrices are collected in trajectory order, and the reduction
//! runs in that fixed order, so the output is byte-identical for any worker
//! count or scheduling.

use rayon::prelude::*;

use crate::error::{Result, TcmolError};
use crate::model::ModelBundle;
use crate::polariton::PolaritonSurfaces;
use crate::propagator::PropagatorConfig;
use crate::trajectory::{run_trajectory, TrajectoryOptions, TrajectoryRecord};
use crate::units;

/// Which trajectory engine an ensemble runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// Product-basis state with all N+3 channels.
    Full,
    /// Collective-basis engine: photon, Pi, symmetric emitter mode and lazy
    /// dark bookkeeping. Exact for the photon-excited initial state and much
    /// cheaper for large N.
    Reduced,
    /// Reduced when the model allows it, otherwise full.
    Auto,
}

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// 0 means all available cores.
    pub workers: usize,
    pub sample_stride: usize,
    pub cfg: PropagatorConfig,
    pub engine: EngineKind,
    pub freeze_after_decay: bool,
    pub retain_records: bool,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            n_trajectories: 200,
            master_seed: 1,
            workers: 0,
            sample_stride: 100,
            cfg: PropagatorConfig::default(),
            engine: EngineKind::Auto,
            freeze_after_decay: true,
            retain_records: false,
        }
    }
}

/// Ensemble means and standard errors per sample time and observable column.
#[derive(Debug, Clone)]
pub struct EnsembleStatistics {
    pub n_trajectories: usize,
    /// Sample times (atomic units).
    pub sample_times: Vec<f64>,
    pub columns: Vec<String>,
    /// mean[time][column]
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, same layout; zero for a single trajectory.
    pub stderr: Vec<Vec<f64>>,
    pub records: Option<Vec<TrajectoryRecord>>,
}

impl EnsembleStatistics {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn series(&self, name: &str) -> Option<(Vec<f64>, Vec<f64>)> {
        let idx = self.column(name)?;
        Some((
            self.mean.iter().map(|row| row[idx]).collect(),
            self.stderr.iter().map(|row| row[idx]).collect(),
        ))
    }

    pub fn sample_times_fs(&self) -> Vec<f64> {
        self.sample_times.iter().map(|&t| units::au_to_fs(t)).collect()
    }
}

/// Flatten one record into a per-sample observable matrix; the column layout
/// must match `column_labels`.
fn record_rows(rec: &TrajectoryRecord) -> Vec<Vec<f64>> {
    let n = rec.sample_times.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(8);
        row.extend_from_slice(&rec.populations[i]);
        row.push(rec.energies[i]);
        if let Some(p) = &rec.polariton {
            row.extend_from_slice(&p[i]);
        }
        if let Some(e) = &rec.extra {
            row.extend_from_slice(&e[i]);
        }
        rows.push(row);
    }
    rows
}

fn column_labels(
    surfaces: Option<&PolaritonSurfaces>,
    extra_names: &[String],
) -> Vec<String> {
    let mut cols: Vec<String> = [
        "pop_ground",
        "pop_photon",
        "pop_pi",
        "pop_bright",
        "pop_dark",
        "energy_hartree",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if let Some(s) = surfaces {
        for label in &s.labels {
            cols.push(format!("pol_{}", label.column_name()));
        }
    }
    cols.extend_from_slice(extra_names);
    cols
}

/// Extra observables: named functions of the trajectory state, averaged like
/// the built-in columns. Only supported by the full engine.
pub struct ExtraObservables<'a> {
    pub names: Vec<String>,
    pub eval: &'a (dyn Fn(&crate::basis::StateVector) -> Vec<f64> + Sync),
}

pub struct EnsembleRun<'a> {
    pub bundle: &'a ModelBundle,
    pub surfaces: Option<&'a PolaritonSurfaces>,
    pub extra: Option<ExtraObservables<'a>>,
}

/// Run a seeded ensemble and aggregate statistics.
pub fn run_ensemble(run: EnsembleRun, opts: &EnsembleOptions) -> Result<EnsembleStatistics> {
    if opts.n_trajectories == 0 {
        return Err(TcmolError::Config("ensemble needs at least 1 trajectory".into()));
    }
    let use_reduced = match opts.engine {
        EngineKind::Full => false,
        EngineKind::Reduced => {
            crate::reduced::check_supported(run.bundle, run.extra.is_some())?;
            true
        }
        EngineKind::Auto => {
            run.extra.is_none() && crate::reduced::check_supported(run.bundle, false).is_ok()
        }
    };

    let extra_names: Vec<String> = run
        .extra
        .as_ref()
        .map(|e| e.names.clone())
        .unwrap_or_default();
    let columns = column_labels(run.surfaces, &extra_names);

    let workers = if opts.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        opts.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TcmolError::Config(format!("cannot build worker pool: {e}")))?;

    let run_one = |i: usize| -> Result<(Vec<Vec<f64>>, Vec<f64>, Option<TrajectoryRecord>)> {
        let stream = i as u64;
        let rec = if use_reduced {
            crate::reduced::run_trajectory_reduced(
                run.bundle,
                run.surfaces,
                opts.cfg,
                opts.sample_stride,
                opts.freeze_after_decay,
                opts.master_seed,
                stream,
            )?
        } else {
            let topts = TrajectoryOptions {
                cfg: opts.cfg,
                sample_stride: opts.sample_stride,
                surfaces: run.surfaces,
                extra: run.extra.as_ref().map(|e| e.eval),
                freeze_after_decay: opts.freeze_after_decay && run.extra.is_none(),
                store_snapshots: false,
            };
            run_trajectory(run.bundle, &topts, opts.master_seed, stream)?
        };
        let rows = record_rows(&rec);
        let times = rec.sample_times.clone();
        Ok((rows, times, if opts.retain_records { Some(rec) } else { None }))
    };

    let results: Vec<(Vec<Vec<f64>>, Vec<f64>, Option<TrajectoryRecord>)> = pool.install(|| {
        (0..opts.n_trajectories)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<Vec<_>>>()
    })?;

    // Fixed-order reduction.
    let sample_times = results[0].1.clone();
    let n_times = sample_times.len();
    let n_cols = columns.len();
    let mut sum = vec![vec![0.0f64; n_cols]; n_times];
    let mut sumsq = vec![vec![0.0f64; n_cols]; n_times];
    let mut records = opts.retain_records.then(Vec::new);
    for (rows, times, rec) in results {
        if times != sample_times {
            return Err(TcmolError::Numerics(
                "trajectories returned inconsistent sample times".into(),
            ));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(TcmolError::Numerics(format!(
                    "observable row has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            for (c, v) in row.iter().enumerate() {
                sum[t][c] += v;
                sumsq[t][c] += v * v;
            }
        }
        if let (Some(acc), Some(r)) = (records.as_mut(), rec) {
            acc.push(r);
        }
    }

    let n = opts.n_trajectories as f64;
    let mut mean = vec![vec![0.0f64; n_cols]; n_times];
    let mut stderr = vec![vec![0.0f64; n_cols]; n_times];
    for t in 0..n_times {
        for c in 0..n_cols {
            let m = sum[t][c] / n;
            mean[t][c] = m;
            if opts.n_trajectories > 1 {
                let var = ((sumsq[t][c] - n * m * m) / (n - 1.0)).max(0.0);
                stderr[t][c] = (var / n).sqrt();
            }
        }
    }

    Ok(EnsembleStatistics {
        n_trajectories: opts.n_trajectories,
        sample_times,
        columns,
        mean,
        stderr,
        records,
    })
}

/// Energy retention (E(t) - E0) / (hbar omega_c) with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct RetentionPoint {
    pub time_fs: f64,
    pub retention: f64,
    pub stderr: f64,
}

pub fn energy_retention(
    stats: &EnsembleStatistics,
    params: &crate::params::ModelParams,
    zero_point_energy: f64,
) -> Result<Vec<RetentionPoint>> {
    let (energy, err) = stats
        .series("energy_hartree")
        .ok_or_else(|| TcmolError::Config("statistics carry no energy column".into()))?;
    let mut out = Vec::with_capacity(energy.len());
    for ((e, de), t) in energy.iter().zip(&err).zip(&stats.sample_times) {
        let retention = (e - zero_point_energy) / params.photon_energy;
        if !(-0.01..=1.01).contains(&retention) {
            return Err(TcmolError::Physics(format!(
                "energy retention {retention:.4} at t = {:.2} fs outside [-0.01, 1.01]",
                units::au_to_fs(*t)
            )));
        }
        out.push(RetentionPoint {
            time_fs: units::au_to_fs(*t),
            retention,
            stderr: de / params.photon_energy,
        });
    }
    Ok(out)
}
