use num_complex::Complex64;
use std::hint::black_box;
use std::time::Instant;
use tcmol::*;

struct RedOpTimer;

fn main() {
    let params = ModelParams::from_physical(&PhysicalParams {
        n_emitters: 60,
        gamma_per_fs: 0.09,
        duration_fs: 10.0,
        ..Default::default()
    })
    .unwrap();
    let bundle = tcmol::model::ModelBundle::surrogate_default(params).unwrap();
    let ham = &bundle.hamiltonian;

    // Scalar channel apply (the kinetic+potential kernel used 4x per reduced apply)
    let n = ham.n_points();
    let src: Vec<Complex64> = (0..n).map(|i| Complex64::new(0.1 * i as f64, -0.05)).collect();
    let mut dst = vec![Complex64::new(0.0, 0.0); n];
    let mut ws = HamWorkspace::new(ham);
    let reps = 500_000;
    let t0 = Instant::now();
    for _ in 0..reps {
        ham.scalar_channel_apply(ham.v_photon(), black_box(&src), &mut dst, &mut ws);
    }
    println!("scalar_channel_apply: {:.2} us/op", t0.elapsed().as_micros() as f64 / reps as f64);

    // Small complex expm (11x11 Hessenberg-like)
    let m = nalgebra::DMatrix::<Complex64>::from_fn(10, 10, |i, j| {
        if i <= j + 1 {
            Complex64::new(0.02 * (i as f64 - j as f64), -0.15)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let reps = 20_000;
    let t0 = Instant::now();
    for _ in 0..reps {
        black_box(tcmol::matexp::expm(black_box(&m)).unwrap());
    }
    println!("expm 10x10: {:.2} us/op", t0.elapsed().as_micros() as f64 / reps as f64);
    let _ = RedOpTimer;
}
