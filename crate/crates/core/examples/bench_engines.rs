// Rough single-trajectory timing of both engines on the production model.
use std::time::Instant;
use tcmol::*;

fn main() {
    for (n_em, gamma, dur_fs, engine) in [
        (60usize, 0.09f64, 10.0f64, "reduced"),
        (60, 0.0, 10.0, "reduced"),
        (60, 0.09, 10.0, "full"),
    ] {
        let params = ModelParams::from_physical(&PhysicalParams {
            n_emitters: n_em,
            gamma_per_fs: gamma,
            duration_fs: dur_fs,
            ..Default::default()
        })
        .unwrap();
        let bundle = tcmol::model::ModelBundle::surrogate_default(params).unwrap();
        let t0 = Instant::now();
        let rec = if engine == "reduced" {
            tcmol::reduced::run_trajectory_reduced(
                &bundle, None, PropagatorConfig::default(), 100, true, 7, 1,
            ).unwrap()
        } else {
            tcmol::trajectory::run_trajectory(
                &bundle, &tcmol::trajectory::TrajectoryOptions::default(), 7, 1,
            ).unwrap()
        };
        let dt = t0.elapsed();
        let steps = (bundle.params.duration / bundle.params.dt).round();
        println!(
            "{engine:8} N={n_em:3} gamma={gamma:5.3}: {:8.2?}  ({:.1} us/step, {} jumps)",
            dt, dt.as_secs_f64() * 1e6 / steps, rec.jump_log.len()
        );
    }
}
