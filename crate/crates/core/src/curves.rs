//! Molecular potential and transition-dipole curves.
//!
//! Two sources feed the simulation: tabulated ab initio curves read from a
//! plain-text file, or an analytic surrogate (Morse wells plus a tanh dipole
//! profile) tuned to the CO anchors used throughout: the Pi-Sigma gap matches
//! the 8.27 eV photon at q = 1.17 A, the transition dipole is 1.5 Debye at
//! that point and spans roughly 0..3 Debye, and the Sigma well reproduces the
//! CO ground-state constants (q_e = 1.128 A, omega_e = 2170 cm^-1).
//!
//! Curve files are whitespace-delimited with a mandatory units header:
//!
//! ```text
//! # units: angstrom eV eV debye
//! # q     V_sigma   V_pi     mu_m
//! 0.926   1.234     9.876    2.5
//! ...
//! ```

use std::io::BufRead;
use std::path::Path;

use crate::error::{Result, TcmolError};
use crate::grid::SpatialGrid;
use crate::interp::CubicSpline;
use crate::units;

/// Where a set of curves came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveProvenance {
    Tabulated,
    Surrogate,
}

/// Sampled curves in boundary units (Angstrom, eV, Debye), as read from a
/// file or generated by the surrogate.
#[derive(Debug, Clone)]
pub struct MolecularCurves {
    pub q_samples: Vec<f64>,
    pub v_sigma: Vec<f64>,
    pub v_pi: Vec<f64>,
    pub mu_m: Vec<f64>,
    pub provenance: CurveProvenance,
}

impl MolecularCurves {
    fn validate(&self) -> Result<()> {
        let n = self.q_samples.len();
        if n < 4 {
            return Err(TcmolError::Config(format!(
                "curves need at least 4 samples, got {n}"
            )));
        }
        if self.v_sigma.len() != n || self.v_pi.len() != n || self.mu_m.len() != n {
            return Err(TcmolError::Config(
                "curve arrays must have equal length".into(),
            ));
        }
        for i in 1..n {
            if !(self.q_samples[i] > self.q_samples[i - 1]) {
                return Err(TcmolError::Config(format!(
                    "curve q samples must be strictly increasing at index {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Morse well V(q) = D_e (1 - exp(-a (q - q_e)))^2 + offset, in eV/Angstrom.
#[derive(Debug, Clone, Copy)]
pub struct MorseParams {
    pub d_e_ev: f64,
    pub a_per_angstrom: f64,
    pub q_e_angstrom: f64,
    pub offset_ev: f64,
}

impl MorseParams {
    pub fn eval_ev(&self, q_angstrom: f64) -> f64 {
        let x = 1.0 - (-self.a_per_angstrom * (q_angstrom - self.q_e_angstrom)).exp();
        self.d_e_ev * x * x + self.offset_ev
    }

    /// Morse parameters from well depth and harmonic frequency:
    /// a = omega_e sqrt(M / (2 D_e)).
    pub fn from_spectroscopic(
        d_e_ev: f64,
        omega_e_cm: f64,
        q_e_angstrom: f64,
        mass_me: f64,
    ) -> Self {
        let d_e = units::ev_to_hartree(d_e_ev);
        let omega = units::wavenumber_to_hartree(omega_e_cm);
        let a_bohr = omega * (mass_me / (2.0 * d_e)).sqrt();
        Self {
            d_e_ev,
            a_per_angstrom: a_bohr / units::BOHR_ANGSTROM,
            q_e_angstrom,
            offset_ev: 0.0,
        }
    }
}

/// Analytic surrogate parameters: Morse Sigma and Pi wells and the tanh
/// dipole profile mu(q) = mu0 (1 + tanh((q_d - q)/w)) / 2.
#[derive(Debug, Clone)]
pub struct SurrogateParams {
    pub sigma: MorseParams,
    /// Pi well; `offset_ev` plays the role of the electronic term energy T_e.
    pub pi: MorseParams,
    pub mu0_debye: f64,
    pub q_d_angstrom: f64,
    pub width_angstrom: f64,
    /// Resonance anchor: V_pi - V_sigma must equal this gap at this distance.
    pub resonance_q_angstrom: f64,
    pub resonance_gap_ev: f64,
    /// Sampling window and density used when emitting `MolecularCurves`.
    pub sample_window_angstrom: (f64, f64),
    pub n_samples: usize,
}

impl SurrogateParams {
    /// Default surrogate tuned to the CO anchors (see module docs). The Pi
    /// term energy is solved so the resonance constraint holds exactly; with
    /// the Pi minimum at 1.22 A that puts it a few tens of meV above the
    /// photon-channel minimum, so neither well accumulates population.
    pub fn carbon_monoxide() -> Self {
        let mass_me = 12498.0;
        let sigma = MorseParams::from_spectroscopic(11.226, 2170.0, 1.128, mass_me);
        let mut pi = MorseParams::from_spectroscopic(4.40, 1518.0, 1.22, mass_me);
        let (q_res, gap) = (1.17, 8.27);
        pi.offset_ev = gap + sigma.eval_ev(q_res) - pi.eval_ev(q_res);
        Self {
            sigma,
            pi,
            mu0_debye: 3.0,
            q_d_angstrom: 1.17,
            width_angstrom: 0.45,
            resonance_q_angstrom: q_res,
            resonance_gap_ev: gap,
            sample_window_angstrom: (0.80, 6.50),
            n_samples: 200,
        }
    }

    pub fn mu_debye(&self, q_angstrom: f64) -> f64 {
        self.mu0_debye * (1.0 + ((self.q_d_angstrom - q_angstrom) / self.width_angstrom).tanh())
            / 2.0
    }

    fn validate(&self) -> Result<()> {
        if self.sigma.d_e_ev <= 0.0
            || self.pi.d_e_ev <= 0.0
            || self.sigma.a_per_angstrom <= 0.0
            || self.pi.a_per_angstrom <= 0.0
            || self.width_angstrom <= 0.0
            || self.mu0_debye <= 0.0
        {
            return Err(TcmolError::Config(
                "surrogate well depths, widths and dipole amplitude must be positive".into(),
            ));
        }
        let gap = self.pi.eval_ev(self.resonance_q_angstrom)
            - self.sigma.eval_ev(self.resonance_q_angstrom);
        if (gap - self.resonance_gap_ev).abs() > 1e-3 {
            return Err(TcmolError::Config(format!(
                "surrogate resonance constraint violated: gap at {} A is {:.6} eV, wanted {:.6} eV",
                self.resonance_q_angstrom, gap, self.resonance_gap_ev
            )));
        }
        Ok(())
    }
}

/// Generate sampled curves from the analytic surrogate. Sampling is denser
/// below 2.6 A where the dynamics happens.
pub fn surrogate_curves(params: &SurrogateParams) -> Result<MolecularCurves> {
    params.validate()?;
    let (lo, hi) = params.sample_window_angstrom;
    if !(hi > lo) || params.n_samples < 8 {
        return Err(TcmolError::Config("bad surrogate sampling window".into()));
    }
    let dense_hi = 2.6_f64.min(hi);
    let n_dense = (params.n_samples * 4) / 5;
    let n_tail = params.n_samples - n_dense;
    let mut q_samples = Vec::with_capacity(params.n_samples);
    for i in 0..n_dense {
        q_samples.push(lo + (dense_hi - lo) * i as f64 / n_dense as f64);
    }
    for i in 0..n_tail {
        q_samples.push(dense_hi + (hi - dense_hi) * i as f64 / (n_tail - 1).max(1) as f64);
    }
    let v_sigma: Vec<f64> = q_samples.iter().map(|&q| params.sigma.eval_ev(q)).collect();
    let v_pi: Vec<f64> = q_samples.iter().map(|&q| params.pi.eval_ev(q)).collect();
    let mu_m: Vec<f64> = q_samples.iter().map(|&q| params.mu_debye(q)).collect();
    let curves = MolecularCurves {
        q_samples,
        v_sigma,
        v_pi,
        mu_m,
        provenance: CurveProvenance::Surrogate,
    };
    curves.validate()?;
    Ok(curves)
}

/// Read tabulated curves. Errors carry the offending 1-based row number.
pub fn load_curves(path: &Path) -> Result<MolecularCurves> {
    let file = std::fs::File::open(path)?;
    load_curves_from(std::io::BufReader::new(file))
}

pub fn load_curves_from<R: BufRead>(reader: R) -> Result<MolecularCurves> {
    let mut q_samples = Vec::new();
    let mut v_sigma = Vec::new();
    let mut v_pi = Vec::new();
    let mut mu_m = Vec::new();
    let mut units_seen = false;

    for (idx, line) in reader.lines().enumerate() {
        let row = idx + 1;
        let line = line.map_err(|e| TcmolError::CurveIngestion {
            row,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let c = comment.trim();
            if let Some(u) = c.strip_prefix("units:") {
                if u.split_whitespace().collect::<Vec<_>>() != ["angstrom", "eV", "eV", "debye"] {
                    return Err(TcmolError::CurveIngestion {
                        row,
                        message: format!(
                            "unsupported units declaration '{c}'; expected 'units: angstrom eV eV debye'"
                        ),
                    });
                }
                units_seen = true;
            }
            continue;
        }
        if !units_seen {
            return Err(TcmolError::CurveIngestion {
                row,
                message: "data before the '# units: angstrom eV eV debye' header".into(),
            });
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(TcmolError::CurveIngestion {
                row,
                message: format!("expected 4 columns (q V_sigma V_pi mu_m), got {}", fields.len()),
            });
        }
        let mut vals = [0.0; 4];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.parse::<f64>().map_err(|_| TcmolError::CurveIngestion {
                row,
                message: format!("cannot parse '{f}' as a number"),
            })?;
            if !vals[k].is_finite() {
                return Err(TcmolError::CurveIngestion {
                    row,
                    message: format!("non-finite value '{f}'"),
                });
            }
        }
        if let Some(&prev) = q_samples.last() {
            if vals[0] <= prev {
                return Err(TcmolError::CurveIngestion {
                    row,
                    message: format!("q = {} is not increasing (previous {})", vals[0], prev),
                });
            }
        }
        q_samples.push(vals[0]);
        v_sigma.push(vals[1]);
        v_pi.push(vals[2]);
        mu_m.push(vals[3]);
    }

    if !units_seen {
        return Err(TcmolError::CurveIngestion {
            row: 0,
            message: "missing '# units: angstrom eV eV debye' header".into(),
        });
    }
    if q_samples.len() < 4 {
        return Err(TcmolError::CurveIngestion {
            row: q_samples.len(),
            message: format!("too few samples ({}), need at least 4", q_samples.len()),
        });
    }

    let curves = MolecularCurves {
        q_samples,
        v_sigma,
        v_pi,
        mu_m,
        provenance: CurveProvenance::Tabulated,
    };
    curves.validate()?;
    Ok(curves)
}

/// Curves interpolated onto the simulation grid, in atomic units.
#[derive(Debug, Clone)]
pub struct GriddedCurves {
    pub grid: SpatialGrid,
    /// Sigma potential (hartree) per grid point.
    pub v_sigma: Vec<f64>,
    /// Pi potential (hartree) per grid point.
    pub v_pi: Vec<f64>,
    /// Transition dipole (atomic units) per grid point.
    pub mu_m: Vec<f64>,
}

impl GriddedCurves {
    /// Assemble gridded curves directly from arrays in atomic units. Used by
    /// reduced test models; only finiteness is checked.
    pub fn from_arrays(
        grid: SpatialGrid,
        v_sigma: Vec<f64>,
        v_pi: Vec<f64>,
        mu_m: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.n_points();
        if v_sigma.len() != n || v_pi.len() != n || mu_m.len() != n {
            return Err(TcmolError::Config(
                "gridded curve arrays must match the grid length".into(),
            ));
        }
        for arr in [&v_sigma, &v_pi, &mu_m] {
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(TcmolError::Config("non-finite gridded curve value".into()));
            }
        }
        Ok(Self {
            grid,
            v_sigma,
            v_pi,
            mu_m,
        })
    }
}

/// Cubic-spline interpolation of sampled curves onto the simulation grid,
/// with conversion to atomic units. The grid must lie inside the sampled
/// window; the repulsive wall is never extrapolated.
pub fn interpolate_to_grid(curves: &MolecularCurves, grid: &SpatialGrid) -> Result<GriddedCurves> {
    curves.validate()?;
    grid.ensure_simulation_resolution()?;
    let q_lo = curves.q_samples[0];
    let q_hi = *curves.q_samples.last().unwrap();
    let g_lo = units::bohr_to_angstrom(grid.q_min());
    let g_hi = units::bohr_to_angstrom(grid.q_max());
    if g_lo < q_lo - 1e-12 || g_hi > q_hi + 1e-12 {
        return Err(TcmolError::Config(format!(
            "grid window [{g_lo:.4}, {g_hi:.4}] A extends beyond curve samples \
             [{q_lo:.4}, {q_hi:.4}] A; extend the samples or shrink the grid"
        )));
    }

    let s_sigma = CubicSpline::natural(&curves.q_samples, &curves.v_sigma)?;
    let s_pi = CubicSpline::natural(&curves.q_samples, &curves.v_pi)?;
    let s_mu = CubicSpline::natural(&curves.q_samples, &curves.mu_m)?;

    let mut v_sigma = Vec::with_capacity(grid.n_points());
    let mut v_pi = Vec::with_capacity(grid.n_points());
    let mut mu_m = Vec::with_capacity(grid.n_points());
    for q in grid.points_angstrom() {
        let q = q.clamp(q_lo, q_hi);
        v_sigma.push(units::ev_to_hartree(s_sigma.eval(q)?));
        v_pi.push(units::ev_to_hartree(s_pi.eval(q)?));
        mu_m.push(units::debye_to_au(s_mu.eval(q)?));
    }
    for j in 0..grid.n_points() {
        if v_pi[j] <= v_sigma[j] {
            return Err(TcmolError::Physics(format!(
                "V_pi must stay above V_sigma on the simulation window; violated at grid point {j}"
            )));
        }
    }
    GriddedCurves::from_arrays(grid.clone(), v_sigma, v_pi, mu_m)
}

/// Internuclear distance (bohr) where the Pi-Sigma gap crosses the photon
/// energy, from bisection on a spline through the gridded gap. Tolerance is
/// 1e-4 Angstrom.
pub fn resonance_position(gridded: &GriddedCurves, photon_energy: f64) -> Result<f64> {
    let n = gridded.grid.n_points();
    if n < 4 {
        return Err(TcmolError::Config(
            "resonance search needs at least 4 grid points".into(),
        ));
    }
    let q: Vec<f64> = gridded.grid.points().collect();
    let gap: Vec<f64> = (0..n)
        .map(|j| gridded.v_pi[j] - gridded.v_sigma[j] - photon_energy)
        .collect();
    let spline = CubicSpline::natural(&q, &gap)?;

    let mut bracket = None;
    for j in 0..n - 1 {
        if gap[j] == 0.0 && gap[j + 1] == 0.0 {
            continue; // flat zero stretch has no isolated root
        }
        if gap[j] == 0.0 {
            bracket = Some((q[j], q[j]));
            break;
        }
        if gap[j] * gap[j + 1] < 0.0 {
            bracket = Some((q[j], q[j + 1]));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        TcmolError::Physics(format!(
            "the Pi-Sigma gap does not cross the photon energy ({:.4} eV) anywhere on the grid",
            units::hartree_to_ev(photon_energy)
        ))
    })?;
    if lo == hi {
        return Ok(lo);
    }
    let tol = units::angstrom_to_bohr(1e-4);
    let lo_sign = spline.eval(lo)?.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = spline.eval(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{bohr_to_angstrom, ev_to_hartree};

    fn co_gridded() -> GriddedCurves {
        let params = SurrogateParams::carbon_monoxide();
        let curves = surrogate_curves(&params).unwrap();
        let grid = SpatialGrid::build(0.90, 2.12, 96).unwrap();
        interpolate_to_grid(&curves, &grid).unwrap()
    }

    #[test]
    fn surrogate_hits_resonance_anchor() {
        let params = SurrogateParams::carbon_monoxide();
        let gap = params.pi.eval_ev(1.17) - params.sigma.eval_ev(1.17);
        assert!((gap - 8.27).abs() < 1e-3);
    }

    #[test]
    fn surrogate_dipole_anchors() {
        let params = SurrogateParams::carbon_monoxide();
        assert!((params.mu_debye(1.17) - 1.5).abs() < 0.1);
        assert!(params.mu_debye(0.0) <= 3.2);
        assert!(params.mu_debye(50.0).abs() < 1e-12);
        // monotone decreasing
        let mut prev = f64::INFINITY;
        let mut q = 0.8;
        while q < 3.0 {
            let m = params.mu_debye(q);
            assert!(m < prev);
            prev = m;
            q += 0.05;
        }
    }

    #[test]
    fn surrogate_sigma_matches_co_constants() {
        // Re-expand the fitted Morse to quadratic order by finite differences.
        let params = SurrogateParams::carbon_monoxide();
        let h = 1e-4;
        let q_e = params.sigma.q_e_angstrom;
        assert!((q_e - 1.128).abs() < 1e-12);
        let v = |q: f64| ev_to_hartree(params.sigma.eval_ev(q));
        let second = (v(q_e + h) - 2.0 * v(q_e) + v(q_e - h))
            / (h / crate::units::BOHR_ANGSTROM).powi(2);
        let omega_cm = (second / 12498.0).sqrt() * crate::units::HARTREE_CM;
        assert!(
            (omega_cm - 2170.0).abs() < 2.0,
            "omega_e from curvature = {omega_cm} cm^-1"
        );
    }

    #[test]
    fn surrogate_resonance_violation_is_rejected() {
        let mut params = SurrogateParams::carbon_monoxide();
        params.pi.offset_ev += 0.5;
        assert!(surrogate_curves(&params).is_err());
    }

    #[test]
    fn interpolation_reproduces_analytic_surrogate() {
        let params = SurrogateParams::carbon_monoxide();
        let gridded = co_gridded();
        for (j, q) in gridded.grid.points_angstrom().enumerate() {
            let exact = ev_to_hartree(params.sigma.eval_ev(q));
            assert!(
                (gridded.v_sigma[j] - exact).abs() < 1e-6,
                "spline error at q = {q}"
            );
        }
    }

    #[test]
    fn pi_stays_above_sigma_on_window() {
        let gridded = co_gridded();
        for j in 0..gridded.grid.n_points() {
            assert!(gridded.v_pi[j] > gridded.v_sigma[j]);
        }
    }

    #[test]
    fn resonance_position_matches_anchor() {
        let gridded = co_gridded();
        let q = resonance_position(&gridded, ev_to_hartree(8.27)).unwrap();
        assert!((bohr_to_angstrom(q) - 1.17).abs() < 0.01);
        // A higher photon energy crosses the (decreasing) gap further left.
        let q_up = resonance_position(&gridded, ev_to_hartree(9.27)).unwrap();
        assert!(bohr_to_angstrom(q_up) < 1.17);
    }

    #[test]
    fn resonance_errors_without_crossing() {
        let grid = SpatialGrid::build(0.9, 2.12, 16).unwrap();
        let n = grid.n_points();
        let gap = ev_to_hartree(8.27);
        // constant gap exactly equal to the photon energy: no isolated root
        let gridded = GriddedCurves::from_arrays(
            grid.clone(),
            vec![0.0; n],
            vec![gap; n],
            vec![0.0; n],
        )
        .unwrap();
        assert!(resonance_position(&gridded, gap).is_err());
        // gap nowhere near the photon energy
        let gridded2 =
            GriddedCurves::from_arrays(grid, vec![0.0; n], vec![2.0 * gap; n], vec![0.0; n])
                .unwrap();
        assert!(resonance_position(&gridded2, gap).is_err());
    }

    #[test]
    fn loader_accepts_wellformed_file() {
        let mut text = String::from("# units: angstrom eV eV debye\n# q V_sigma V_pi mu\n");
        let params = SurrogateParams::carbon_monoxide();
        for i in 0..50 {
            let q = 0.926 + (6.35 - 0.926) * i as f64 / 49.0;
            text.push_str(&format!(
                "{:.6} {:.6} {:.6} {:.6}\n",
                q,
                params.sigma.eval_ev(q),
                params.pi.eval_ev(q),
                params.mu_debye(q)
            ));
        }
        let curves = load_curves_from(text.as_bytes()).unwrap();
        assert_eq!(curves.q_samples.len(), 50);
        assert_eq!(curves.provenance, CurveProvenance::Tabulated);
        assert!((curves.q_samples[0] - 0.926).abs() < 1e-9);

        // The paper's grid starts at 0.90 A, left of these samples: this is an
        // extrapolation error by design, not a silent fill.
        let grid = SpatialGrid::build(0.90, 2.12, 96).unwrap();
        let err = interpolate_to_grid(&curves, &grid).unwrap_err();
        assert!(err.to_string().contains("extends beyond curve samples"));
    }

    #[test]
    fn loader_rejects_disorder_with_row_number() {
        let text = "# units: angstrom eV eV debye\n1.0 0 9 1\n1.1 0 9 1\n1.05 0 9 1\n1.2 0 9 1\n";
        let err = load_curves_from(text.as_bytes()).unwrap_err();
        match err {
            TcmolError::CurveIngestion { row, .. } => assert_eq!(row, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn loader_rejects_short_and_malformed_files() {
        let text = "# units: angstrom eV eV debye\n1.0 0 9 1\n1.1 0 9 1\n1.2 0 9 1\n";
        assert!(load_curves_from(text.as_bytes()).is_err());

        let text = "# units: angstrom eV eV debye\n1.0 0 9\n";
        assert!(load_curves_from(text.as_bytes()).is_err());

        let text = "# units: angstrom eV eV debye\n1.0 0 nan 1\n";
        assert!(load_curves_from(text.as_bytes()).is_err());

        let text = "1.0 0 9 1\n1.1 0 9 1\n1.2 0 9 1\n1.3 0 9 1\n";
        assert!(load_curves_from(text.as_bytes()).is_err());
    }
}
