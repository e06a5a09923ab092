//! Lindblad jump operators, per-step jump probabilities and jump application.
//!
//! Three kinds of jumps act on a trajectory:
//!
//! * per-emitter pure dephasing, sqrt(gamma/2) sigma_z on each two-level
//!   system: a sign flip of that emitter channel relative to everything else;
//! * molecular pure dephasing, the same sign flip on the Pi channel;
//! * photon decay, sqrt(kappa) a: the photon channel's nuclear function moves
//!   to GROUND and every other channel is annihilated (in the
//!   single-excitation sector the annihilation operator kills all zero-photon
//!   channels, so the renormalized post-jump state is forced).
//!
//! One uniform number per step decides whether and which jump fires, with
//! cumulative intervals ordered: emitters 0..N-1, molecule, decay. Because
//! sigma_z^dagger sigma_z = 1, every dephasing probability is gamma/2 dt
//! independent of the state; the decay probability is kappa dt times the
//! photon population of the (renormalized) state.

use num_complex::Complex64;

use crate::basis::{StateVector, EMITTER0, GROUND, MOL_PI, PHOTON};
use crate::error::{Result, TcmolError};

/// Validity guard for the first-order per-step Bernoulli sampling.
pub const JUMP_PROBABILITY_GUARD: f64 = 0.1;

/// The full jump-operator set for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOperatorSet {
    pub n_emitters: usize,
    /// Dephasing rate gamma (atomic units); each operator carries gamma/2.
    pub gamma: f64,
    /// Photon decay rate kappa (atomic units).
    pub kappa: f64,
}

/// Which jump fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    EmitterDephase(usize),
    MoleculeDephase,
    PhotonDecay,
}

/// Per-step jump probabilities for the documented ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpProbabilities {
    pub n_emitters: usize,
    /// Probability of each single dephasing jump (same for every emitter and
    /// the molecule): gamma/2 * dt.
    pub dephase_each: f64,
    /// Photon decay probability: kappa * dt * photon population.
    pub decay: f64,
}

impl JumpOperatorSet {
    /// Total jump rate ceiling (photon population at its maximum of one).
    pub fn max_total_rate(&self) -> f64 {
        (self.n_emitters as f64 + 1.0) * 0.5 * self.gamma + self.kappa
    }

    /// Smallest power-of-two step subdivision that keeps dt * (total rate)
    /// under the first-order validity guard.
    pub fn subdivision(&self, dt: f64) -> usize {
        let mut n_sub = 1usize;
        while dt / n_sub as f64 * self.max_total_rate() >= JUMP_PROBABILITY_GUARD {
            n_sub *= 2;
        }
        n_sub
    }
}

/// Jump probabilities for a normalized state over one sub-step.
pub fn jump_probabilities(
    psi: &StateVector,
    set: &JumpOperatorSet,
    dt: f64,
) -> Result<JumpProbabilities> {
    let pop_photon = psi.population(PHOTON);
    jump_probabilities_from_population(pop_photon, set, dt)
}

/// Same, for engines that track the photon population directly.
pub fn jump_probabilities_from_population(
    pop_photon: f64,
    set: &JumpOperatorSet,
    dt: f64,
) -> Result<JumpProbabilities> {
    let total_rate = (set.n_emitters as f64 + 1.0) * 0.5 * set.gamma + set.kappa * pop_photon;
    if dt * total_rate >= JUMP_PROBABILITY_GUARD {
        return Err(TcmolError::Config(format!(
            "dt * total jump rate = {:.3} exceeds the first-order guard {}; \
             use a smaller time step or let the engine subdivide",
            dt * total_rate,
            JUMP_PROBABILITY_GUARD
        )));
    }
    Ok(JumpProbabilities {
        n_emitters: set.n_emitters,
        dephase_each: 0.5 * set.gamma * dt,
        decay: set.kappa * pop_photon * dt,
    })
}

impl JumpProbabilities {
    pub fn total(&self) -> f64 {
        (self.n_emitters as f64 + 1.0) * self.dephase_each + self.decay
    }

    /// Materialized probability list in the documented ordering:
    /// emitters 0..N-1, molecule, decay.
    pub fn as_list(&self) -> Vec<f64> {
        let mut v = vec![self.dephase_each; self.n_emitters + 1];
        v.push(self.decay);
        v
    }

    /// Sample with one uniform number by the cumulative-interval rule.
    pub fn sample(&self, u: f64) -> Option<JumpKind> {
        let deph_total = (self.n_emitters as f64 + 1.0) * self.dephase_each;
        if u < deph_total {
            let k = (u / self.dephase_each) as usize;
            if k < self.n_emitters {
                Some(JumpKind::EmitterDephase(k))
            } else {
                Some(JumpKind::MoleculeDephase)
            }
        } else if u < deph_total + self.decay {
            Some(JumpKind::PhotonDecay)
        } else {
            None
        }
    }
}

/// Cumulative-interval sampling over an explicit probability list; returns
/// the jump index or None for no jump. Deterministic given u.
pub fn sample_jump(probs: &[f64], u: f64) -> Result<Option<usize>> {
    let total: f64 = probs.iter().sum();
    if total >= 1.0 {
        return Err(TcmolError::Config(format!(
            "total jump probability {total} >= 1; the step is too large"
        )));
    }
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Apply a jump operator and renormalize. Dephasing jumps preserve the norm
/// exactly; the decay jump projects onto the photon channel and moves it to
/// GROUND.
pub fn apply_jump(psi: &mut StateVector, kind: JumpKind) -> Result<()> {
    match kind {
        JumpKind::EmitterDephase(n) => {
            if n >= psi.n_emitters() {
                return Err(TcmolError::InvalidJump(format!(
                    "emitter {n} out of range ({} emitters)",
                    psi.n_emitters()
                )));
            }
            for z in psi.channel_mut(EMITTER0 + n) {
                *z = -*z;
            }
        }
        JumpKind::MoleculeDephase => {
            for z in psi.channel_mut(MOL_PI) {
                *z = -*z;
            }
        }
        JumpKind::PhotonDecay => {
            let pop = psi.population(PHOTON);
            if pop <= 0.0 {
                return Err(TcmolError::InvalidJump(
                    "photon decay jump with zero photon population".into(),
                ));
            }
            let n = psi.n_points();
            let mut packet = vec![Complex64::new(0.0, 0.0); n];
            packet.copy_from_slice(psi.channel(PHOTON));
            for z in psi.data_mut() {
                *z = Complex64::new(0.0, 0.0);
            }
            psi.channel_mut(GROUND).copy_from_slice(&packet);
            psi.renormalize()?;
        }
    }
    Ok(())
}
