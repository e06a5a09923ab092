//! Experiment orchestration: single runs, (N, gamma) sweeps, surface export
//! and the built-in oracle check.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::basis::{BasisLayout, StateVector, PHOTON};
use crate::config::ExperimentConfig;
use crate::curves::GriddedCurves;
use crate::ensemble::{
    energy_retention, run_ensemble, EnsembleOptions, EnsembleRun, EnsembleStatistics,
};
use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;
use crate::model::ModelBundle;
use crate::oracle::{compare, integrate_lindblad, ComparisonReport, DensityMatrix, OracleModel};
use crate::output;
use crate::params::{ModelParams, PhysicalParams};
use crate::polariton::{pointwise_diagonalize, track_eigenvectors, PolaritonSurfaces};
use crate::propagator::PropagatorConfig;
use crate::units;

/// One completed sweep cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub n_emitters: usize,
    pub gamma_per_fs: f64,
    pub retention: f64,
    pub retention_stderr: f64,
    pub file: PathBuf,
}

#[derive(Debug)]
pub struct SweepReport {
    pub cells: Vec<CellResult>,
    /// (N, gamma, error message) for cells that failed; completed cells are
    /// kept either way.
    pub failed: Vec<(usize, f64, String)>,
    pub table_file: PathBuf,
}

fn cell_file_name(n: usize, gamma_per_fs: f64) -> String {
    format!("pop_N{n}_gamma{gamma_per_fs:.6}.csv")
}

fn ensemble_options(config: &ExperimentConfig) -> Result<EnsembleOptions> {
    Ok(EnsembleOptions {
        n_trajectories: config.n_trajectories()?,
        master_seed: config.run.master_seed,
        workers: config.workers(),
        sample_stride: config.run.sample_stride,
        cfg: PropagatorConfig {
            dt: config.model.dt_au,
            ..Default::default()
        },
        engine: config.engine()?,
        freeze_after_decay: true,
        retain_records: false,
    })
}

/// Run one (N, gamma) cell: ensemble, retention, population file.
pub fn run_cell(
    config: &ExperimentConfig,
    curves: &GriddedCurves,
    surfaces: &PolaritonSurfaces,
    n_emitters: usize,
    gamma_per_fs: f64,
    out_dir: &Path,
) -> Result<(CellResult, EnsembleStatistics)> {
    let params = ModelParams::from_physical(&config.physical_params(n_emitters, gamma_per_fs)?)?;
    let bundle = ModelBundle::molecular(params, curves.clone())?;
    let opts = ensemble_options(config)?;
    let stats = run_ensemble(
        EnsembleRun {
            bundle: &bundle,
            surfaces: Some(surfaces),
            extra: None,
        },
        &opts,
    )?;
    let retention = energy_retention(&stats, &bundle.params, bundle.zero_point_energy)?;
    let file = out_dir.join(cell_file_name(n_emitters, gamma_per_fs));
    let mut echo = config.echo_lines();
    echo.push(format!("cell_n_emitters = {n_emitters}"));
    echo.push(format!("cell_gamma_per_fs = {gamma_per_fs}"));
    output::write_population_series(&file, &echo, &stats, &retention)?;
    let last = retention.last().expect("at least one sample");
    Ok((
        CellResult {
            n_emitters,
            gamma_per_fs,
            retention: last.retention,
            retention_stderr: last.stderr,
            file,
        },
        stats,
    ))
}

/// Tracked surfaces for one N on the configured curves.
pub fn surfaces_for(
    config: &ExperimentConfig,
    curves: &GriddedCurves,
    n_emitters: usize,
) -> Result<PolaritonSurfaces> {
    let params = ModelParams::from_physical(&config.physical_params(n_emitters, 0.0)?)?;
    track_eigenvectors(pointwise_diagonalize(curves, &params)?)
}

/// Full (N, gamma) sweep with per-cell outputs and the master retention
/// table. Cell failures are recorded and skipped; complete cells are kept.
pub fn run_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<SweepReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let curves = config.gridded_curves()?;
    let gamma_values = config.gamma_values();
    let n_values = config.sweep.n_values.clone();

    let mut cells = Vec::new();
    let mut failed = Vec::new();
    for &n in &n_values {
        let surfaces = surfaces_for(config, &curves, n)?;
        for &g in &gamma_values {
            match run_cell(config, &curves, &surfaces, n, g, out_dir) {
                Ok((cell, _)) => cells.push(cell),
                Err(e) => failed.push((n, g, e.to_string())),
            }
        }
    }

    let table_file = out_dir.join("retention.csv");
    let lookup = |n: usize, g: f64| -> Option<(f64, f64)> {
        cells
            .iter()
            .find(|c| c.n_emitters == n && c.gamma_per_fs == g)
            .map(|c| (c.retention, c.retention_stderr))
    };
    output::write_retention_table(
        &table_file,
        &config.echo_lines(),
        &gamma_values,
        &n_values,
        &lookup,
    )?;

    Ok(SweepReport {
        cells,
        failed,
        table_file,
    })
}

/// Export tracked polaritonic surfaces for every configured N.
pub fn export_surfaces(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let curves = config.gridded_curves()?;
    let mut files = Vec::new();
    for &n in &config.sweep.n_values {
        let surfaces = surfaces_for(config, &curves, n)?;
        let file = out_dir.join(format!("surfaces_N{n}.csv"));
        let mut echo = config.echo_lines();
        echo.push(format!("cell_n_emitters = {n}"));
        output::write_surfaces(&file, &echo, &surfaces)?;
        files.push(file);
    }
    Ok(files)
}

/// The reduced correctness model: cavity plus two emitters on a frozen
/// nuclear coordinate, molecule decoupled (mu_m = 0).
pub fn oracle_check_bundle(gamma_per_fs: f64, kappa_per_fs: f64) -> Result<ModelBundle> {
    let grid = SpatialGrid::single_point(1.17);
    let params = ModelParams::from_physical(&PhysicalParams {
        n_emitters: 2,
        kappa_per_fs,
        gamma_per_fs,
        duration_fs: 100.0,
        ..Default::default()
    })?;
    let curves = GriddedCurves::from_arrays(
        grid.clone(),
        vec![0.0],
        vec![params.photon_energy],
        vec![0.0],
    )?;
    let mut psi = StateVector::zeros(BasisLayout::new(2), &grid);
    psi.channel_mut(PHOTON)[0] = Complex64::new(1.0, 0.0);
    ModelBundle::with_initial_state(params, curves, psi)
}

/// Trajectory-vs-Lindblad consistency check on the reduced model: ensemble
/// populations at 10, 50 and 100 fs against the dense integrator, all
/// |z| < 3 required.
pub fn oracle_check(
    n_trajectories: usize,
    master_seed: u64,
    workers: usize,
) -> Result<ComparisonReport> {
    let bundle = oracle_check_bundle(0.05, 0.01)?;
    let sample_stride = 100;
    let opts = EnsembleOptions {
        n_trajectories,
        master_seed,
        workers,
        sample_stride,
        engine: crate::ensemble::EngineKind::Full,
        ..Default::default()
    };
    let stats = run_ensemble(
        EnsembleRun {
            bundle: &bundle,
            surfaces: None,
            extra: None,
        },
        &opts,
    )?;

    let model = OracleModel::new(&bundle)?;
    let rho0 = DensityMatrix::from_pure_state(&bundle.initial);
    let compare_times: Vec<f64> = [10.0, 50.0, 100.0]
        .iter()
        .map(|&t_fs| {
            // Snap to the nearest sampled step so both sides share the time.
            let dt = bundle.params.dt;
            let steps = (units::fs_to_au(t_fs) / dt / sample_stride as f64).round()
                * sample_stride as f64;
            steps * dt
        })
        .collect();
    let mut oracle_times = vec![0.0];
    oracle_times.extend_from_slice(&compare_times);
    let (rows, _) = integrate_lindblad(&model, rho0, &oracle_times, 1.0, &[])?;
    compare(
        &stats,
        &rows,
        &OracleModel::standard_observable_names(),
        &compare_times,
    )
}

/// Collective Rabi splitting diagnostics at the resonance point, reported by
/// the CLI alongside surface exports.
pub fn rabi_report(config: &ExperimentConfig, n_emitters: usize) -> Result<String> {
    let curves = config.gridded_curves()?;
    let params = ModelParams::from_physical(&config.physical_params(n_emitters, 0.0)?)?;
    let q_star = crate::curves::resonance_position(&curves, params.photon_energy)?;
    let j_star = curves
        .grid
        .points()
        .enumerate()
        .min_by(|(_, a), (_, b)| (a - q_star).abs().partial_cmp(&(b - q_star).abs()).unwrap())
        .map(|(j, _)| j)
        .ok_or_else(|| TcmolError::Numerics("empty grid".into()))?;
    let mu_m_star = curves.mu_m[j_star];
    let splitting = params.collective_splitting(mu_m_star);
    let rate_per_fs = splitting / units::AU_TIME_FS;
    Ok(format!(
        "resonance at q = {:.4} A; collective splitting 2 E_c sqrt(N mu_a^2 + mu_m^2) = {:.4} eV \
         ({:.3e} fs^-1)",
        units::bohr_to_angstrom(q_star),
        units::hartree_to_ev(splitting),
        rate_per_fs
    ))
}
