//! Collective-basis trajectory engine.
//!
//! For the photon-excited initial state the product-basis dynamics has exact
//! structure worth exploiting: the Hamiltonian couples the photon only to the
//! symmetric emitter combination s(q) = sum_n psi_n(q) / sqrt(N), while the
//! orthogonal (dark) emitter components evolve under the bare emitter channel
//! Hamiltonian h = T + V_Sigma + hbar*omega_a, identically for every
//! component and untouched by photon decay. Dephasing jumps are the only
//! operations that exchange bright and dark amplitude.
//!
//! The engine therefore propagates just (photon, Pi, s) plus one auxiliary
//! response channel phi obeying d(phi)/dt = -i (h phi + g_a psi_photon),
//! which is the amplitude every so-far-unjumped emitter shares. For emitter
//! n, after its last jump at time t_n,
//!
//! ```text
//! v_n(t) = U(t - t_n) y_n * exp(L(t) - L(t_n)) + phi(t),
//! ```
//!
//! where U is the exact eigenbasis propagator of h, y_n is a stored snapshot
//! and L tracks the per-step renormalization scale. A dephasing jump on n
//! needs only v_n: it updates s and the scalar dark bookkeeping (norm n_d and
//! energy e_d of the dark manifold, both conserved between jumps because U is
//! unitary and commutes with h).
//!
//! The result is numerically equivalent to the product-basis engine (same
//! RNG stream, same jump decisions, amplitudes equal to propagator accuracy)
//! at a cost independent of N. A test pins the equivalence.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::basis::PHOTON;
use crate::error::{Result, TcmolError};
use crate::hamiltonian::{HamWorkspace, HamiltonianOperator};
use crate::jumps::{jump_probabilities_from_population, JumpKind};
use crate::model::ModelBundle;
use crate::polariton::{project_bright_components, PolaritonSurfaces};
use crate::propagator::{arnoldi_step, KrylovWorkspace, LinearOp, PropagatorConfig};
use crate::trajectory::{trajectory_rng, TrajectoryRecord};

/// Is this bundle eligible for the reduced engine?
pub fn check_supported(bundle: &ModelBundle, has_extra: bool) -> Result<()> {
    if has_extra {
        return Err(TcmolError::Config(
            "extra observables need the full product-basis engine".into(),
        ));
    }
    let psi = &bundle.initial;
    let photon_pop = psi.population(PHOTON);
    if (photon_pop - 1.0).abs() > 1e-12 {
        return Err(TcmolError::Config(
            "the reduced engine requires the photon-excited initial state".into(),
        ));
    }
    Ok(())
}

/// Shared, per-ensemble precomputation for the reduced engine.
pub struct ReducedContext {
    /// Eigenbasis of h = T + V_Sigma + hbar*omega_a (only when dephasing can
    /// fire on emitters: gamma > 0 and N >= 1).
    eigen: Option<EmitterChannelEigen>,
}

pub struct EmitterChannelEigen {
    w: DMatrix<f64>,
    lambda: Vec<f64>,
}

impl EmitterChannelEigen {
    fn new(ham: &HamiltonianOperator) -> Self {
        let n = ham.n_points();
        let mut h = ham.kinetic_matrix();
        for j in 0..n {
            h[(j, j)] += ham.v_emitter()[j];
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        Self {
            lambda: eig.eigenvalues.iter().cloned().collect(),
            w: eig.eigenvectors,
        }
    }

    /// x <- W diag(exp(-i lambda tau)) W^T x, the exact channel propagator.
    fn propagate(&self, x: &[Complex64], tau: f64) -> Vec<Complex64> {
        let n = x.len();
        let mut coef = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.w[(j, k)] * x[j];
            }
            coef[k] = acc * Complex64::new(0.0, -self.lambda[k] * tau).exp();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += self.w[(j, k)] * coef[k];
            }
            out[j] = acc;
        }
        out
    }
}

impl ReducedContext {
    pub fn new(bundle: &ModelBundle) -> Result<Self> {
        check_supported(bundle, false)?;
        let needs_eigen = bundle.params.gamma > 0.0 && bundle.params.n_emitters > 0;
        Ok(Self {
            eigen: needs_eigen.then(|| EmitterChannelEigen::new(&bundle.hamiltonian)),
        })
    }
}

/// The propagated reduced operator: channels [photon, pi, (s), (phi)].
struct ReducedOp<'a> {
    ham: &'a HamiltonianOperator,
    n: usize,
    has_s: bool,
    has_phi: bool,
    g_collective: f64,
    ws: HamWorkspace,
}

impl<'a> ReducedOp<'a> {
    fn new(ham: &'a HamiltonianOperator, n_emitters: usize, gamma: f64) -> Self {
        Self {
            n: ham.n_points(),
            has_s: n_emitters > 0,
            has_phi: n_emitters > 0 && gamma > 0.0,
            g_collective: (n_emitters as f64).sqrt() * ham.coupling_emitter(),
            ws: HamWorkspace::new(ham),
            ham,
        }
    }

    fn n_blocks(&self) -> usize {
        2 + self.has_s as usize + self.has_phi as usize
    }
}

const R_PHOTON: usize = 0;
const R_PI: usize = 1;
const R_S: usize = 2;
const R_PHI: usize = 3;

impl LinearOp for ReducedOp<'_> {
    fn dim(&self) -> usize {
        self.n_blocks() * self.n
    }

    fn apply(&mut self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        let blk = |b: usize| b * n..(b + 1) * n;

        // Diagonal blocks.
        self.ham.scalar_channel_apply(
            self.ham.v_photon(),
            &src[blk(R_PHOTON)],
            &mut dst[blk(R_PHOTON)],
            &mut self.ws,
        );
        self.ham.scalar_channel_apply(
            self.ham.v_pi(),
            &src[blk(R_PI)],
            &mut dst[blk(R_PI)],
            &mut self.ws,
        );
        if self.has_s {
            self.ham.scalar_channel_apply(
                self.ham.v_emitter(),
                &src[blk(R_S)],
                &mut dst[blk(R_S)],
                &mut self.ws,
            );
        }
        if self.has_phi {
            self.ham.scalar_channel_apply(
                self.ham.v_emitter(),
                &src[blk(R_PHI)],
                &mut dst[blk(R_PHI)],
                &mut self.ws,
            );
        }

        // Couplings and the photon damping.
        let g_m = self.ham.coupling_pi();
        let damp = Complex64::new(0.0, -0.5 * self.ham.kappa());
        let g_c = self.g_collective;
        let g_a = self.ham.coupling_emitter();
        let src_ph = &src[blk(R_PHOTON)];
        let src_pi = &src[blk(R_PI)];
        let (dst_ph, rest) = dst[R_PHOTON * n..].split_at_mut(n);
        let (dst_pi, rest) = rest.split_at_mut(n);
        for j in 0..n {
            let ph = src_ph[j];
            dst_ph[j] += g_m[j] * src_pi[j] + damp * ph;
            dst_pi[j] += g_m[j] * ph;
        }
        if self.has_s {
            let src_s = &src[blk(R_S)];
            let (dst_s, rest_phi) = rest.split_at_mut(n);
            for j in 0..n {
                let ph = src_ph[j];
                dst_ph[j] += g_c * src_s[j];
                dst_s[j] += g_c * ph;
            }
            if self.has_phi {
                // One-way drive: phi responds to the photon like any single
                // emitter, but never feeds back.
                let dst_phi = &mut rest_phi[..n];
                for j in 0..n {
                    dst_phi[j] += g_a * src_ph[j];
                }
            }
        }
    }
}

struct DarkRecord {
    y: Vec<Complex64>,
    /// Propagated time at which the snapshot was taken. Jump sub-steps
    /// consume wall time without propagating, so this is not label time.
    tau: f64,
    log_scale: f64,
}

struct ReducedState {
    data: Vec<Complex64>,
    n: usize,
    spacing: f64,
    has_s: bool,
    n_dark: f64,
    e_dark: f64,
    log_scale: f64,
    /// Cumulative propagated time (advances only in propagation sub-steps).
    tau: f64,
    records: Vec<Option<DarkRecord>>,
}

impl ReducedState {
    fn block(&self, b: usize) -> &[Complex64] {
        &self.data[b * self.n..(b + 1) * self.n]
    }

    fn block_mut(&mut self, b: usize) -> &mut [Complex64] {
        &mut self.data[b * self.n..(b + 1) * self.n]
    }

    fn block_norm_sq(&self, b: usize) -> f64 {
        self.spacing * self.block(b).iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Physical norm squared: propagated channels (phi excluded) plus the
    /// dark reservoir.
    fn physical_norm_sq(&self) -> f64 {
        let mut total = self.block_norm_sq(R_PHOTON) + self.block_norm_sq(R_PI);
        if self.has_s {
            total += self.block_norm_sq(R_S);
        }
        total + self.n_dark
    }

    fn renormalize(&mut self) -> Result<()> {
        let r_sq = self.physical_norm_sq();
        if !(r_sq > 0.0) || !r_sq.is_finite() {
            return Err(TcmolError::Numerics(format!(
                "cannot renormalize reduced state with norm^2 {r_sq}"
            )));
        }
        let r = r_sq.sqrt();
        let inv = 1.0 / r;
        for z in &mut self.data {
            *z *= inv;
        }
        self.n_dark /= r_sq;
        self.e_dark /= r_sq;
        self.log_scale -= r.ln();
        Ok(())
    }
}

/// <x|h_channel|x> with the scalar channel Hamiltonian, grid-weighted.
fn channel_energy(
    ham: &HamiltonianOperator,
    potential: &[f64],
    x: &[Complex64],
    spacing: f64,
    ws: &mut HamWorkspace,
    scratch: &mut Vec<Complex64>,
) -> f64 {
    scratch.resize(x.len(), Complex64::new(0.0, 0.0));
    ham.scalar_channel_apply(potential, x, scratch, ws);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in x.iter().zip(scratch.iter()) {
        acc += a.conj() * b;
    }
    (acc * spacing).re
}

/// Run one seeded trajectory with the reduced engine. Consumes the RNG
/// stream exactly like the product-basis engine, so jump decisions match.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectory_reduced(
    bundle: &ModelBundle,
    surfaces: Option<&PolaritonSurfaces>,
    cfg: PropagatorConfig,
    sample_stride: usize,
    freeze_after_decay: bool,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    let ctx = ReducedContext::new(bundle)?;
    run_trajectory_reduced_with(&ctx, bundle, surfaces, cfg, sample_stride, freeze_after_decay, master_seed, stream)
}

#[allow(clippy::too_many_arguments)]
pub fn run_trajectory_reduced_with(
    ctx: &ReducedContext,
    bundle: &ModelBundle,
    surfaces: Option<&PolaritonSurfaces>,
    cfg: PropagatorConfig,
    sample_stride: usize,
    freeze_after_decay: bool,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if !freeze_after_decay {
        return Err(TcmolError::Config(
            "the reduced engine has no ground channel to propagate: \
             freeze_after_decay must stay on"
                .into(),
        ));
    }
    check_supported(bundle, false)?;

    let ham = &bundle.hamiltonian;
    let n = ham.n_points();
    let n_em = bundle.params.n_emitters;
    let gamma = bundle.params.gamma;
    let spacing = bundle.grid.spacing();

    let mut op = ReducedOp::new(ham, n_em, gamma);
    let has_s = op.has_s;
    let n_blocks = op.n_blocks();
    let mut krylov = KrylovWorkspace::new(n_blocks * n, cfg.krylov_order);
    let mut ws = HamWorkspace::new(ham);
    let mut scratch: Vec<Complex64> = Vec::new();

    let mut state = ReducedState {
        data: vec![Complex64::new(0.0, 0.0); n_blocks * n],
        n,
        spacing,
        has_s,
        n_dark: 0.0,
        e_dark: 0.0,
        log_scale: 0.0,
        tau: 0.0,
        records: (0..n_em).map(|_| None).collect(),
    };
    state
        .block_mut(R_PHOTON)
        .copy_from_slice(bundle.initial.channel(PHOTON));

    let mut rng = trajectory_rng(master_seed, stream);
    let dt = cfg.dt;
    let n_steps = (bundle.params.duration / dt).round() as usize;
    let n_sub = bundle.jumps.subdivision(dt);
    let dt_sub = dt / n_sub as f64;
    let stride = sample_stride.max(1);

    let inv_sqrt_n = if n_em > 0 { 1.0 / (n_em as f64).sqrt() } else { 0.0 };

    let mut record = TrajectoryRecord {
        sample_times: Vec::new(),
        populations: Vec::new(),
        energies: Vec::new(),
        polariton: surfaces.map(|_| Vec::new()),
        extra: None,
        jump_log: Vec::new(),
        master_seed,
        stream,
        snapshots: None,
    };
    // Frozen row after photon decay: (populations, energy).
    let mut frozen: Option<([f64; 5], f64)> = None;

    let g_collective = op.g_collective;
    let sample = |state: &ReducedState,
                  frozen: &Option<([f64; 5], f64)>,
                  ws: &mut HamWorkspace,
                  scratch: &mut Vec<Complex64>|
     -> Result<([f64; 5], f64, Option<Vec<f64>>)> {
        if let Some((pops, energy)) = frozen {
            let polariton = surfaces.map(|s| vec![0.0; s.n_bright]);
            return Ok((*pops, *energy, polariton));
        }
        let pop_ph = state.block_norm_sq(R_PHOTON);
        let pop_pi = state.block_norm_sq(R_PI);
        let pop_bright = if has_s { state.block_norm_sq(R_S) } else { 0.0 };
        let pops = [0.0, pop_ph, pop_pi, pop_bright, state.n_dark];
        let total: f64 = pops.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(TcmolError::Physics(format!(
                "reduced populations sum to {total}, expected 1"
            )));
        }
        // Energy: diagonal channel terms, dark reservoir, coupling cross terms.
        let mut energy = channel_energy(ham, ham.v_photon(), state.block(R_PHOTON), spacing, ws, scratch)
            + channel_energy(ham, ham.v_pi(), state.block(R_PI), spacing, ws, scratch)
            + state.e_dark;
        let mut cross = Complex64::new(0.0, 0.0);
        let g_m = ham.coupling_pi();
        for j in 0..n {
            cross += state.block(R_PHOTON)[j].conj() * state.block(R_PI)[j] * g_m[j];
        }
        if has_s {
            energy += channel_energy(ham, ham.v_emitter(), state.block(R_S), spacing, ws, scratch);
            let g_c = g_collective;
            for j in 0..n {
                cross += state.block(R_PHOTON)[j].conj() * state.block(R_S)[j] * g_c;
            }
        }
        energy += 2.0 * (cross * spacing).re;
        let polariton = surfaces.map(|s| {
            let zeros = vec![Complex64::new(0.0, 0.0); n];
            let bright: &[Complex64] = if has_s { state.block(R_S) } else { &zeros };
            project_bright_components(state.block(R_PHOTON), state.block(R_PI), bright, s, spacing)
        });
        Ok((pops, energy, polariton))
    };

    let push = |record: &mut TrajectoryRecord, t: f64, row: ([f64; 5], f64, Option<Vec<f64>>)| {
        record.sample_times.push(t);
        record.populations.push(row.0);
        record.energies.push(row.1);
        if let (Some(acc), Some(p)) = (record.polariton.as_mut(), row.2) {
            acc.push(p);
        }
    };

    let row0 = sample(&state, &frozen, &mut ws, &mut scratch)?;
    push(&mut record, 0.0, row0);

    let context = |step: usize, e: TcmolError| -> TcmolError {
        TcmolError::Physics(format!(
            "reduced trajectory (master_seed {master_seed}, stream {stream}) failed at step {step}: {e}"
        ))
    };

    for step in 1..=n_steps {
        if frozen.is_none() {
            for sub in 0..n_sub {
                let t_now = ((step - 1) as f64 + sub as f64 / n_sub as f64) * dt;
                let pop_ph = state.block_norm_sq(R_PHOTON);
                let probs = jump_probabilities_from_population(pop_ph, &bundle.jumps, dt_sub)
                    .map_err(|e| context(step, e))?;
                let u: f64 = rng.gen();
                match probs.sample(u) {
                    Some(JumpKind::EmitterDephase(e_idx)) => {
                        dephase_emitter(&mut state, ctx, ham, e_idx, inv_sqrt_n, &mut ws, &mut scratch)
                            .map_err(|e| context(step, e))?;
                        record.jump_log.push((t_now, JumpKind::EmitterDephase(e_idx)));
                    }
                    Some(JumpKind::MoleculeDephase) => {
                        for z in state.block_mut(R_PI) {
                            *z = -*z;
                        }
                        record.jump_log.push((t_now, JumpKind::MoleculeDephase));
                    }
                    Some(JumpKind::PhotonDecay) => {
                        if pop_ph <= 0.0 {
                            return Err(context(
                                step,
                                TcmolError::InvalidJump(
                                    "photon decay with zero photon population".into(),
                                ),
                            ));
                        }
                        record.jump_log.push((t_now, JumpKind::PhotonDecay));
                        // Ground packet = renormalized photon packet; its
                        // observables are constant afterwards.
                        let inv = 1.0 / pop_ph.sqrt();
                        let packet: Vec<Complex64> = state
                            .block(R_PHOTON)
                            .iter()
                            .map(|z| z * inv)
                            .collect();
                        let energy =
                            channel_energy(ham, ham.v_ground(), &packet, spacing, &mut ws, &mut scratch);
                        frozen = Some(([1.0, 0.0, 0.0, 0.0, 0.0], energy));
                        break;
                    }
                    None => {
                        arnoldi_step(&mut op, &mut state.data, dt_sub, cfg.krylov_order, &mut krylov)
                            .map_err(|e| context(step, e))?;
                        state.tau += dt_sub;
                        if cfg.renormalize_each_step {
                            state.renormalize().map_err(|e| context(step, e))?;
                        }
                    }
                }
            }
        }

        if step % stride == 0 || step == n_steps {
            let row = sample(&state, &frozen, &mut ws, &mut scratch).map_err(|e| context(step, e))?;
            push(&mut record, step as f64 * dt, row);
        }
    }

    Ok(record)
}

/// Apply the sign-flip dephasing jump on emitter `e_idx`.
fn dephase_emitter(
    state: &mut ReducedState,
    ctx: &ReducedContext,
    ham: &HamiltonianOperator,
    e_idx: usize,
    inv_sqrt_n: f64,
    ws: &mut HamWorkspace,
    scratch: &mut Vec<Complex64>,
) -> Result<()> {
    let n = state.n;
    let spacing = state.spacing;
    let eigen = ctx
        .eigen
        .as_ref()
        .ok_or_else(|| TcmolError::Numerics("dephasing jump without eigen context".into()))?;

    // Reconstruct this emitter's amplitude v = U(tau - tau_rec) y * scale + phi,
    // with tau counting propagated time only.
    let phi: Vec<Complex64> = state.block(R_PHI).to_vec();
    let v: Vec<Complex64> = match &state.records[e_idx] {
        None => phi.clone(),
        Some(rec) => {
            let scale = (state.log_scale - rec.log_scale).exp();
            let propagated = eigen.propagate(&rec.y, state.tau - rec.tau);
            (0..n)
                .map(|j| propagated[j] * scale + phi[j])
                .collect()
        }
    };

    // Bright bookkeeping before/after s -> s - 2 v / sqrt(N).
    let s_norm_old = state.block_norm_sq(R_S);
    let s_h_old = channel_energy(ham, ham.v_emitter(), state.block(R_S), spacing, ws, scratch);
    {
        let s_blk = state.block_mut(R_S);
        for j in 0..n {
            s_blk[j] -= 2.0 * inv_sqrt_n * v[j];
        }
    }
    let s_norm_new = state.block_norm_sq(R_S);
    let s_h_new = channel_energy(ham, ham.v_emitter(), state.block(R_S), spacing, ws, scratch);

    state.n_dark += s_norm_old - s_norm_new;
    state.e_dark += s_h_old - s_h_new;
    // Numerical guard: the dark norm is a difference of norms and must stay
    // non-negative up to rounding.
    if state.n_dark < -1e-9 {
        return Err(TcmolError::Numerics(format!(
            "dark norm went negative: {}",
            state.n_dark
        )));
    }
    state.n_dark = state.n_dark.max(0.0);

    // New snapshot: v' = -v, so y' = -v - phi.
    let y: Vec<Complex64> = (0..n).map(|j| -v[j] - phi[j]).collect();
    state.records[e_idx] = Some(DarkRecord {
        y,
        tau: state.tau,
        log_scale: state.log_scale,
    });
    Ok(())
}
