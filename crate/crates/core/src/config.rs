//! Experiment configuration: TOML file plus command-line overrides.
//!
//! ```toml
//! profile = "desk"            # desk (N_T=200, 100 fs) or paper (2500, 500 fs)
//!
//! [model]
//! photon_energy_ev = 8.27
//! emitter_energy_ev = 8.27
//! mu_a_debye = 1.5
//! field_v_per_nm = 3.0
//! n_emitters = 0
//! reduced_mass_me = 12498.0
//! kappa_per_fs = 0.01
//! gamma_per_fs = 0.0
//! dt_au = 0.5
//!
//! [grid]
//! q_min_angstrom = 0.90
//! q_max_angstrom = 2.12
//! n_points = 96
//!
//! [curves]
//! source = "surrogate"        # or a path to a curve table
//!
//! [sweep]
//! n_values = [0, 1, 2, 3, 5, 8, 13, 22, 36, 60]
//! gamma_values = []           # empty: 24 log-spaced in [1e-3, 1.26] plus 0
//!
//! [run]
//! n_trajectories = 200        # optional; profile default otherwise
//! duration_fs = 100.0         # optional; profile default otherwise
//! master_seed = 1
//! workers = 0                 # 0: all cores (TCMOL_WORKERS overrides)
//! sample_stride = 100
//! output_dir = "out"
//! engine = "auto"             # auto | full | reduced
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curves::{
    interpolate_to_grid, load_curves, surrogate_curves, GriddedCurves, SurrogateParams,
};
use crate::ensemble::EngineKind;
use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;
use crate::params::{ModelParams, PhysicalParams};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ModelSection {
    pub photon_energy_ev: f64,
    pub emitter_energy_ev: Option<f64>,
    pub mu_a_debye: f64,
    pub field_v_per_nm: f64,
    pub n_emitters: usize,
    pub reduced_mass_me: f64,
    pub kappa_per_fs: f64,
    pub gamma_per_fs: f64,
    pub dt_au: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            photon_energy_ev: 8.27,
            emitter_energy_ev: None,
            mu_a_debye: 1.5,
            field_v_per_nm: 3.00,
            n_emitters: 0,
            reduced_mass_me: 12498.0,
            kappa_per_fs: 0.01,
            gamma_per_fs: 0.0,
            dt_au: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GridSection {
    pub q_min_angstrom: f64,
    pub q_max_angstrom: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            q_min_angstrom: 0.90,
            q_max_angstrom: 2.12,
            n_points: 96,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default)]
pub struct CurvesSection {
    /// "surrogate" or a path to a tabulated curve file.
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SweepSection {
    pub n_values: Vec<usize>,
    /// Dephasing rates in fs^-1; empty selects the default logarithmic grid.
    pub gamma_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            n_values: vec![0, 1, 2, 3, 5, 8, 13, 22, 36, 60],
            gamma_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunSection {
    pub n_trajectories: Option<usize>,
    pub duration_fs: Option<f64>,
    pub master_seed: u64,
    pub workers: usize,
    pub sample_stride: usize,
    pub output_dir: String,
    pub engine: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_trajectories: None,
            duration_fs: None,
            master_seed: 1,
            workers: 0,
            sample_stride: 100,
            output_dir: "out".into(),
            engine: "auto".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ExperimentConfig {
    /// "desk" or "paper"; sets trajectory count and duration defaults.
    pub profile: String,
    pub model: ModelSection,
    pub grid: GridSection,
    pub curves: CurvesSection,
    pub sweep: SweepSection,
    pub run: RunSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            profile: "desk".into(),
            model: ModelSection::default(),
            grid: GridSection::default(),
            curves: CurvesSection {
                source: "surrogate".into(),
            },
            sweep: SweepSection::default(),
            run: RunSection::default(),
        }
    }
}

/// Default dephasing grid: 24 log-spaced points in [1e-3, 1.26] fs^-1 plus 0.
pub fn default_gamma_grid() -> Vec<f64> {
    let mut v = vec![0.0];
    let (lo, hi) = (1e-3f64, 1.26f64);
    let n = 24;
    for i in 0..n {
        let x = lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64;
        v.push(x.exp());
    }
    v
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| TcmolError::Config(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn profile_defaults(&self) -> Result<(usize, f64)> {
        match self.profile.as_str() {
            "desk" => Ok((200, 100.0)),
            "paper" => Ok((2500, 500.0)),
            other => Err(TcmolError::Config(format!(
                "unknown profile '{other}' (expected desk or paper)"
            ))),
        }
    }

    pub fn n_trajectories(&self) -> Result<usize> {
        Ok(self.run.n_trajectories.unwrap_or(self.profile_defaults()?.0))
    }

    pub fn duration_fs(&self) -> Result<f64> {
        Ok(self.run.duration_fs.unwrap_or(self.profile_defaults()?.1))
    }

    pub fn engine(&self) -> Result<EngineKind> {
        match self.run.engine.as_str() {
            "auto" => Ok(EngineKind::Auto),
            "full" => Ok(EngineKind::Full),
            "reduced" => Ok(EngineKind::Reduced),
            other => Err(TcmolError::Config(format!(
                "unknown engine '{other}' (expected auto, full or reduced)"
            ))),
        }
    }

    /// Worker count: explicit config, then the TCMOL_WORKERS environment
    /// variable, then all cores.
    pub fn workers(&self) -> usize {
        if self.run.workers != 0 {
            return self.run.workers;
        }
        if let Ok(v) = std::env::var("TCMOL_WORKERS") {
            if let Ok(n) = v.parse::<usize>() {
                if n > 0 {
                    return n;
                }
            }
        }
        0
    }

    /// Physical parameters for one (N, gamma) cell.
    pub fn physical_params(&self, n_emitters: usize, gamma_per_fs: f64) -> Result<PhysicalParams> {
        Ok(PhysicalParams {
            photon_energy_ev: self.model.photon_energy_ev,
            emitter_energy_ev: self
                .model
                .emitter_energy_ev
                .unwrap_or(self.model.photon_energy_ev),
            mu_a_debye: self.model.mu_a_debye,
            field_v_per_nm: self.model.field_v_per_nm,
            n_emitters,
            reduced_mass_me: self.model.reduced_mass_me,
            kappa_per_fs: self.model.kappa_per_fs,
            gamma_per_fs,
            duration_fs: self.duration_fs()?,
            dt_au: self.model.dt_au,
        })
    }

    pub fn build_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::build(
            self.grid.q_min_angstrom,
            self.grid.q_max_angstrom,
            self.grid.n_points,
        )
    }

    /// Load or generate, then interpolate, the molecular curves.
    pub fn gridded_curves(&self) -> Result<GriddedCurves> {
        let grid = self.build_grid()?;
        let sampled = if self.curves.source == "surrogate" {
            surrogate_curves(&SurrogateParams::carbon_monoxide())?
        } else {
            load_curves(&PathBuf::from(&self.curves.source))?
        };
        interpolate_to_grid(&sampled, &grid)
    }

    /// Gamma list with defaults filled in; warns outside the studied range.
    pub fn gamma_values(&self) -> Vec<f64> {
        let v = if self.sweep.gamma_values.is_empty() {
            default_gamma_grid()
        } else {
            self.sweep.gamma_values.clone()
        };
        for &g in &v {
            if !(0.0..=1.26).contains(&g) {
                eprintln!(
                    "warning: dephasing rate {g} fs^-1 lies outside the studied range [0, 1.26]"
                );
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        self.profile_defaults()?;
        self.engine()?;
        if self.sweep.n_values.is_empty() {
            return Err(TcmolError::Config("sweep n_values must be non-empty".into()));
        }
        if self.n_trajectories()? == 0 {
            return Err(TcmolError::Config("n_trajectories must be positive".into()));
        }
        let model = ModelParams::from_physical(&self.physical_params(
            self.model.n_emitters,
            self.model.gamma_per_fs,
        )?)?;
        let _ = model;
        Ok(())
    }

    /// Deterministic key=value echo for output headers. Volatile execution
    /// settings (worker count, output paths) are deliberately excluded so
    /// outputs stay byte-identical across schedulers; see the determinism
    /// contract.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut kv = |k: &str, val: String| v.push(format!("{k} = {val}"));
        kv("profile", self.profile.clone());
        kv("photon_energy_ev", format!("{}", self.model.photon_energy_ev));
        kv(
            "emitter_energy_ev",
            format!(
                "{}",
                self.model
                    .emitter_energy_ev
                    .unwrap_or(self.model.photon_energy_ev)
            ),
        );
        kv("mu_a_debye", format!("{}", self.model.mu_a_debye));
        kv("field_v_per_nm", format!("{}", self.model.field_v_per_nm));
        kv("reduced_mass_me", format!("{}", self.model.reduced_mass_me));
        kv("kappa_per_fs", format!("{}", self.model.kappa_per_fs));
        kv("dt_au", format!("{}", self.model.dt_au));
        kv("grid_q_min_angstrom", format!("{}", self.grid.q_min_angstrom));
        kv("grid_q_max_angstrom", format!("{}", self.grid.q_max_angstrom));
        kv("grid_n_points", format!("{}", self.grid.n_points));
        kv("curves_source", self.curves.source.clone());
        kv(
            "duration_fs",
            self.duration_fs().map(|d| format!("{d}")).unwrap_or_default(),
        );
        kv(
            "n_trajectories",
            self.n_trajectories().map(|n| format!("{n}")).unwrap_or_default(),
        );
        kv("master_seed", format!("{}", self.run.master_seed));
        kv("sample_stride", format!("{}", self.run.sample_stride));
        kv("engine", self.run.engine.clone());
        v
    }
}
