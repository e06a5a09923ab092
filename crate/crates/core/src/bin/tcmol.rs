//! Command-line interface: single runs, (N, gamma) sweeps, polaritonic
//! surface export and the trajectory-vs-Lindblad oracle check.
//!
//! Exit codes: 0 success, 1 physics-consistency failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tcmol::config::ExperimentConfig;
use tcmol::error::TcmolError;
use tcmol::sweep;

#[derive(Parser)]
#[command(name = "tcmol", version, about = "Molecular Tavis-Cummings quantum-trajectory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// TOML configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile: desk (N_T=200, 100 fs) or paper (N_T=2500, 500 fs).
    #[arg(long)]
    profile: Option<String>,
    /// Number of two-level emitters N.
    #[arg(long)]
    n_emitters: Option<usize>,
    /// Dephasing rate gamma in fs^-1.
    #[arg(long)]
    gamma: Option<f64>,
    /// Photon decay rate kappa in fs^-1.
    #[arg(long)]
    kappa: Option<f64>,
    /// Photon energy in eV.
    #[arg(long)]
    photon_energy_ev: Option<f64>,
    /// Emitter transition dipole in Debye.
    #[arg(long)]
    mu_a_debye: Option<f64>,
    /// Vacuum field strength at N=0 in V/nm.
    #[arg(long)]
    field_v_per_nm: Option<f64>,
    /// Propagation time step in atomic units.
    #[arg(long)]
    dt_au: Option<f64>,
    /// Total propagation time in fs.
    #[arg(long)]
    duration_fs: Option<f64>,
    /// Trajectories per ensemble.
    #[arg(long)]
    nt: Option<usize>,
    /// Master seed for the trajectory streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: TCMOL_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Observable sampling stride in steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Curve source: "surrogate" or a path to a curve table.
    #[arg(long)]
    curves: Option<String>,
    /// Trajectory engine: auto, full or reduced.
    #[arg(long)]
    engine: Option<String>,
    /// Sweep N values, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Sweep gamma values in fs^-1, comma separated.
    #[arg(long, value_delimiter = ',')]
    gamma_list: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), TcmolError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.profile {
            cfg.profile = v.clone();
        }
        if let Some(v) = self.n_emitters {
            cfg.model.n_emitters = v;
        }
        if let Some(v) = self.gamma {
            cfg.model.gamma_per_fs = v;
        }
        if let Some(v) = self.kappa {
            cfg.model.kappa_per_fs = v;
        }
        if let Some(v) = self.photon_energy_ev {
            cfg.model.photon_energy_ev = v;
        }
        if let Some(v) = self.mu_a_debye {
            cfg.model.mu_a_debye = v;
        }
        if let Some(v) = self.field_v_per_nm {
            cfg.model.field_v_per_nm = v;
        }
        if let Some(v) = self.dt_au {
            cfg.model.dt_au = v;
        }
        if let Some(v) = self.duration_fs {
            cfg.run.duration_fs = Some(v);
        }
        if let Some(v) = self.nt {
            cfg.run.n_trajectories = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.run.master_seed = v;
        }
        if let Some(v) = self.workers {
            cfg.run.workers = v;
        }
        if let Some(v) = self.stride {
            cfg.run.sample_stride = v;
        }
        if let Some(v) = &self.curves {
            cfg.curves.source = v.clone();
        }
        if let Some(v) = &self.engine {
            cfg.run.engine = v.clone();
        }
        if let Some(v) = &self.n_list {
            cfg.sweep.n_values = v.clone();
        }
        if let Some(v) = &self.gamma_list {
            cfg.sweep.gamma_values = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.run.output_dir = v.display().to_string();
        }
        cfg.validate()?;
        let out_dir = PathBuf::from(&cfg.run.output_dir);
        Ok((cfg, out_dir))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (N, gamma) ensemble and write its population series.
    Run(ConfigArgs),
    /// Run the full (N, gamma) sweep and write the master retention table.
    Sweep(ConfigArgs),
    /// Export tracked polaritonic surfaces for the configured N values.
    Surfaces(ConfigArgs),
    /// Compare trajectory statistics against the dense Lindblad integrator
    /// on the reduced two-emitter model.
    OracleCheck {
        /// Trajectories for the comparison ensemble.
        #[arg(long, default_value_t = 2000)]
        nt: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

fn run(cli: Cli) -> Result<(), TcmolError> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, out_dir) = args.resolve()?;
            std::fs::create_dir_all(&out_dir)?;
            let curves = cfg.gridded_curves()?;
            let n = cfg.model.n_emitters;
            let gamma = cfg.model.gamma_per_fs;
            let surfaces = sweep::surfaces_for(&cfg, &curves, n)?;
            let (cell, _) = sweep::run_cell(&cfg, &curves, &surfaces, n, gamma, &out_dir)?;
            println!(
                "N = {n}, gamma = {gamma} fs^-1: retention({:.0} fs) = {:.4} +- {:.4}",
                cfg.duration_fs()?,
                cell.retention,
                cell.retention_stderr
            );
            println!("wrote {}", cell.file.display());
            Ok(())
        }
        Command::Sweep(args) => {
            let (cfg, out_dir) = args.resolve()?;
            let report = sweep::run_sweep(&cfg, &out_dir)?;
            println!(
                "sweep complete: {} cells, {} failed; table at {}",
                report.cells.len(),
                report.failed.len(),
                report.table_file.display()
            );
            for (n, g, msg) in &report.failed {
                eprintln!("cell (N = {n}, gamma = {g}) failed: {msg}");
            }
            if report.failed.is_empty() {
                Ok(())
            } else {
                Err(TcmolError::Physics(format!(
                    "{} sweep cells failed",
                    report.failed.len()
                )))
            }
        }
        Command::Surfaces(args) => {
            let (cfg, out_dir) = args.resolve()?;
            let files = sweep::export_surfaces(&cfg, &out_dir)?;
            for f in &files {
                println!("wrote {}", f.display());
            }
            for &n in &cfg.sweep.n_values {
                println!("N = {n}: {}", sweep::rabi_report(&cfg, n)?);
            }
            Ok(())
        }
        Command::OracleCheck { nt, seed, workers } => {
            let report = sweep::oracle_check(nt, seed, workers)?;
            println!("observable            t/fs      ensemble       oracle        z");
            for (name, t, mean, oracle, z) in &report.entries {
                println!("{name:<20} {t:>7.1} {mean:>13.6} {oracle:>13.6} {z:>8.2}");
            }
            println!("max |z| = {:.2}", report.max_abs_z);
            if report.pass {
                println!("oracle check passed (all |z| < 3)");
                Ok(())
            } else {
                Err(TcmolError::Physics(
                    "trajectory ensemble disagrees with the Lindblad oracle (|z| >= 3)".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
