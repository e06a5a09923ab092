//! C ABI for the tcmol simulator.
//!
//! The interface follows the usual opaque-handle pattern: build a simulation
//! from a plain parameter struct, run it, then copy observable series out
//! through caller-provided buffers. Every function returns a status code;
//! `tcmol_last_error_message` returns a thread-local description of the most
//! recent failure. All entry points catch panics at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tcmol::ensemble::{
    energy_retention, run_ensemble, EngineKind, EnsembleOptions, EnsembleRun, EnsembleStatistics,
    RetentionPoint,
};
use tcmol::model::ModelBundle;
use tcmol::polariton::{pointwise_diagonalize, track_eigenvectors, PolaritonSurfaces};
use tcmol::propagator::PropagatorConfig;
use tcmol::{ModelParams, PhysicalParams};

/// Status code returned by every API call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TcmolStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    PhysicsFailure = 3,
    NumericsFailure = 4,
    BufferTooSmall = 5,
    NotRun = 6,
    Panic = 7,
}

/// Simulation parameters in boundary units (eV, Debye, V/nm, fs, au).
#[repr(C)]
#[derive(Clone, Copy)]
pub struct TcmolSimParams {
    pub photon_energy_ev: f64,
    pub emitter_energy_ev: f64,
    pub mu_a_debye: f64,
    pub field_v_per_nm: f64,
    pub reduced_mass_me: f64,
    pub kappa_per_fs: f64,
    pub gamma_per_fs: f64,
    pub duration_fs: f64,
    pub dt_au: f64,
    pub n_emitters: u32,
    pub n_trajectories: u32,
    pub sample_stride: u32,
    pub workers: u32,
    pub master_seed: u64,
}

/// Opaque simulation handle.
pub struct TcmolSim {
    bundle: ModelBundle,
    surfaces: PolaritonSurfaces,
    params: TcmolSimParams,
    stats: Option<EnsembleStatistics>,
    retention: Option<Vec<RetentionPoint>>,
    column_names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &tcmol::TcmolError) -> TcmolStatus {
    use tcmol::TcmolError::*;
    match err {
        Config(_) | CurveIngestion { .. } => TcmolStatus::InvalidArgument,
        Physics(_) | InvalidJump(_) => TcmolStatus::PhysicsFailure,
        Numerics(_) => TcmolStatus::NumericsFailure,
        Io(_) => TcmolStatus::InvalidArgument,
    }
}

fn guard<F: FnOnce() -> TcmolStatus>(f: F) -> TcmolStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic crossed the FFI boundary");
            TcmolStatus::Panic
        }
    }
}

/// Message describing the most recent error on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tcmol_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default parameters: the production model at N = 0, desk-scale ensemble.
#[no_mangle]
pub extern "C" fn tcmol_sim_params_default() -> TcmolSimParams {
    TcmolSimParams {
        photon_energy_ev: 8.27,
        emitter_energy_ev: 8.27,
        mu_a_debye: 1.5,
        field_v_per_nm: 3.00,
        reduced_mass_me: 12498.0,
        kappa_per_fs: 0.01,
        gamma_per_fs: 0.0,
        duration_fs: 100.0,
        dt_au: 0.5,
        n_emitters: 0,
        n_trajectories: 200,
        sample_stride: 100,
        workers: 0,
        master_seed: 1,
    }
}

fn physical_of(p: &TcmolSimParams) -> PhysicalParams {
    PhysicalParams {
        photon_energy_ev: p.photon_energy_ev,
        emitter_energy_ev: p.emitter_energy_ev,
        mu_a_debye: p.mu_a_debye,
        field_v_per_nm: p.field_v_per_nm,
        n_emitters: p.n_emitters as usize,
        reduced_mass_me: p.reduced_mass_me,
        kappa_per_fs: p.kappa_per_fs,
        gamma_per_fs: p.gamma_per_fs,
        duration_fs: p.duration_fs,
        dt_au: p.dt_au,
    }
}

/// Build a simulation on the production grid with the built-in surrogate
/// curves. On success `*out_sim` owns the handle; free with `tcmol_sim_free`.
///
/// # Safety
/// `params` and `out_sim` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_new(
    params: *const TcmolSimParams,
    out_sim: *mut *mut TcmolSim,
) -> TcmolStatus {
    guard(|| {
        if params.is_null() || out_sim.is_null() {
            set_error("null pointer argument");
            return TcmolStatus::NullPointer;
        }
        let p = unsafe { *params };
        if p.n_trajectories == 0 {
            set_error("n_trajectories must be positive");
            return TcmolStatus::InvalidArgument;
        }
        let model = match ModelParams::from_physical(&physical_of(&p)) {
            Ok(m) => m,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let bundle = match ModelBundle::surrogate_default(model) {
            Ok(b) => b,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let surfaces = match pointwise_diagonalize(&bundle.curves, &bundle.params)
            .and_then(track_eigenvectors)
        {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let sim = Box::new(TcmolSim {
            bundle,
            surfaces,
            params: p,
            stats: None,
            retention: None,
            column_names: Vec::new(),
        });
        unsafe { *out_sim = Box::into_raw(sim) };
        TcmolStatus::Ok
    })
}

/// # Safety
/// `sim` must be a handle returned by `tcmol_sim_new` (or null), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_free(sim: *mut TcmolSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Run the seeded trajectory ensemble and store the statistics in the handle.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_run(sim: *mut TcmolSim) -> TcmolStatus {
    guard(|| {
        let Some(sim) = (unsafe { sim.as_mut() }) else {
            set_error("null simulation handle");
            return TcmolStatus::NullPointer;
        };
        let opts = EnsembleOptions {
            n_trajectories: sim.params.n_trajectories as usize,
            master_seed: sim.params.master_seed,
            workers: sim.params.workers as usize,
            sample_stride: sim.params.sample_stride.max(1) as usize,
            cfg: PropagatorConfig {
                dt: sim.params.dt_au,
                ..Default::default()
            },
            engine: EngineKind::Auto,
            freeze_after_decay: true,
            retain_records: false,
        };
        let stats = match run_ensemble(
            EnsembleRun {
                bundle: &sim.bundle,
                surfaces: Some(&sim.surfaces),
                extra: None,
            },
            &opts,
        ) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        let retention =
            match energy_retention(&stats, &sim.bundle.params, sim.bundle.zero_point_energy) {
                Ok(r) => r,
                Err(e) => {
                    set_error(&e.to_string());
                    return status_of(&e);
                }
            };
        sim.column_names = stats
            .columns
            .iter()
            .map(|c| CString::new(c.as_str()).unwrap_or_default())
            .collect();
        sim.stats = Some(stats);
        sim.retention = Some(retention);
        TcmolStatus::Ok
    })
}

/// Number of sample times after a successful run; zero before.
///
/// # Safety
/// `sim` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_sample_count(sim: *const TcmolSim) -> usize {
    unsafe { sim.as_ref() }
        .and_then(|s| s.stats.as_ref())
        .map(|s| s.sample_times.len())
        .unwrap_or(0)
}

/// Number of observable columns after a successful run; zero before.
///
/// # Safety
/// `sim` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_column_count(sim: *const TcmolSim) -> usize {
    unsafe { sim.as_ref() }
        .map(|s| s.column_names.len())
        .unwrap_or(0)
}

/// Name of one observable column; null if out of range. The pointer is owned
/// by the handle and valid until the next `tcmol_sim_run` or free.
///
/// # Safety
/// `sim` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_column_name(
    sim: *const TcmolSim,
    column: usize,
) -> *const c_char {
    unsafe { sim.as_ref() }
        .and_then(|s| s.column_names.get(column))
        .map(|c| c.as_ptr())
        .unwrap_or(std::ptr::null())
}

unsafe fn copy_series(
    sim: *const TcmolSim,
    out: *mut f64,
    len: usize,
    extract: impl Fn(&TcmolSim, usize) -> Option<f64>,
) -> TcmolStatus {
    let Some(sim) = (unsafe { sim.as_ref() }) else {
        set_error("null simulation handle");
        return TcmolStatus::NullPointer;
    };
    if out.is_null() {
        set_error("null output buffer");
        return TcmolStatus::NullPointer;
    }
    let Some(stats) = sim.stats.as_ref() else {
        set_error("simulation has not been run");
        return TcmolStatus::NotRun;
    };
    let n = stats.sample_times.len();
    if len < n {
        set_error("output buffer too small");
        return TcmolStatus::BufferTooSmall;
    }
    for i in 0..n {
        let Some(v) = extract(sim, i) else {
            set_error("column index out of range");
            return TcmolStatus::InvalidArgument;
        };
        unsafe { *out.add(i) = v };
    }
    TcmolStatus::Ok
}

/// Sample times in femtoseconds.
///
/// # Safety
/// `sim` must be a valid handle; `out` must hold at least
/// `tcmol_sim_sample_count` doubles.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_times_fs(
    sim: *const TcmolSim,
    out: *mut f64,
    len: usize,
) -> TcmolStatus {
    guard(|| unsafe {
        copy_series(sim, out, len, |s, i| {
            s.stats.as_ref().map(|st| st.sample_times_fs()[i])
        })
    })
}

/// Ensemble mean of one observable column.
///
/// # Safety
/// As for `tcmol_sim_times_fs`.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_mean(
    sim: *const TcmolSim,
    column: usize,
    out: *mut f64,
    len: usize,
) -> TcmolStatus {
    guard(|| unsafe {
        copy_series(sim, out, len, |s, i| {
            s.stats.as_ref().and_then(|st| st.mean[i].get(column).copied())
        })
    })
}

/// Standard error of one observable column.
///
/// # Safety
/// As for `tcmol_sim_times_fs`.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_stderr(
    sim: *const TcmolSim,
    column: usize,
    out: *mut f64,
    len: usize,
) -> TcmolStatus {
    guard(|| unsafe {
        copy_series(sim, out, len, |s, i| {
            s.stats.as_ref().and_then(|st| st.stderr[i].get(column).copied())
        })
    })
}

/// Energy retention (E(t) - E0)/(hbar omega_c) and its standard error.
///
/// # Safety
/// As for `tcmol_sim_times_fs`; both buffers need `sample_count` doubles.
#[no_mangle]
pub unsafe extern "C" fn tcmol_sim_retention(
    sim: *const TcmolSim,
    out_retention: *mut f64,
    out_stderr: *mut f64,
    len: usize,
) -> TcmolStatus {
    guard(|| {
        let st = unsafe {
            copy_series(sim, out_retention, len, |s, i| {
                s.retention.as_ref().map(|r| r[i].retention)
            })
        };
        if st != TcmolStatus::Ok {
            return st;
        }
        unsafe {
            copy_series(sim, out_stderr, len, |s, i| {
                s.retention.as_ref().map(|r| r[i].stderr)
            })
        }
    })
}

/// Internuclear distance (Angstrom) where the Pi-Sigma gap of the surrogate
/// crosses the photon energy.
///
/// # Safety
/// `params` and `out_q` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tcmol_resonance_position_angstrom(
    params: *const TcmolSimParams,
    out_q: *mut f64,
) -> TcmolStatus {
    guard(|| {
        if params.is_null() || out_q.is_null() {
            set_error("null pointer argument");
            return TcmolStatus::NullPointer;
        }
        let p = unsafe { *params };
        let result = (|| -> tcmol::Result<f64> {
            let model = ModelParams::from_physical(&physical_of(&p))?;
            let bundle = ModelBundle::surrogate_default(model)?;
            let q = tcmol::resonance_position(&bundle.curves, bundle.params.photon_energy)?;
            Ok(tcmol::units::bohr_to_angstrom(q))
        })();
        match result {
            Ok(q) => {
                unsafe { *out_q = q };
                TcmolStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
