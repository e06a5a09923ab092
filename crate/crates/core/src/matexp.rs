//! Dense matrix exponential by scaling and squaring with a Pade(13,13)
//! approximant. Used for the small Krylov Hessenberg blocks and as the dense
//! reference in propagator tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TcmolError};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// exp(A) for a square complex matrix.
pub fn expm(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(TcmolError::Numerics("expm needs a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TcmolError::Numerics("expm input has non-finite entries".into()));
    }

    // 1-norm based scaling.
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scale = Complex64::new(0.5f64.powi(s), 0.0);
    let a1 = a * scale;

    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a1 * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| TcmolError::Numerics("expm Pade solve failed (singular system)".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// exp(A) e1 for a small square matrix, by Taylor series with norm-based
/// sub-stepping: y <- sum_j (A/s)^j / j! y, repeated s times. For the Krylov
/// Hessenberg blocks (norm well below 1 after the -i dt scaling) a single
/// sub-step converges in ~12 terms, which is far cheaper than a full dense
/// exponential.
pub fn expm_e1(a: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(TcmolError::Numerics("expm_e1 needs a square matrix".into()));
    }
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    if !norm.is_finite() {
        return Err(TcmolError::Numerics("expm_e1 input has non-finite entries".into()));
    }
    let s = (norm / 0.5).ceil().max(1.0) as usize;
    let inv_s = Complex64::new(1.0 / s as f64, 0.0);

    let mut y = vec![Complex64::new(0.0, 0.0); n];
    y[0] = Complex64::new(1.0, 0.0);
    let mut term = vec![Complex64::new(0.0, 0.0); n];
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..s {
        term.copy_from_slice(&y);
        let y_scale = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for j in 1..=40usize {
            // next = (A/s) term / j
            let factor = inv_s / j as f64;
            for (i, nx) in next.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, t) in term.iter().enumerate() {
                    acc += a[(i, k)] * t;
                }
                *nx = acc * factor;
            }
            std::mem::swap(&mut term, &mut next);
            let mut tnorm = 0.0f64;
            for (yi, t) in y.iter_mut().zip(&term) {
                *yi += t;
                tnorm += t.norm_sqr();
            }
            if tnorm.sqrt() <= 1e-16 * y_scale.max(1.0) {
                break;
            }
            if j == 40 {
                return Err(TcmolError::Numerics(
                    "expm_e1 Taylor series failed to converge".into(),
                ));
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_e1_matches_dense_exponential() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        for n in [2usize, 6, 11] {
            for scale in [0.05, 0.4, 3.0] {
                let a = DMatrix::from_fn(n, n, |_, _| {
                    c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * c(scale, 0.0)
                });
                let dense = expm(&a).unwrap();
                let fast = expm_e1(&a).unwrap();
                for i in 0..n {
                    assert!(
                        (dense[(i, 0)] - fast[i]).norm() < 1e-12,
                        "n={n} scale={scale}: {} vs {}",
                        dense[(i, 0)],
                        fast[i]
                    );
                }
            }
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let z = DMatrix::<Complex64>::zeros(3, 3);
        let e = expm(&z).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e[(i, j)] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.3, -1.0),
            c(-2.0, 0.5),
        ]));
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - c(0.3, -1.0).exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - c(-2.0, 0.5).exp()).norm() < 1e-13);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn nilpotent_and_rotation() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 1)] - c(1.0, 0.0)).norm() < 1e-14);

        let theta = 0.7;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)],
        );
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn large_norm_uses_scaling() {
        // exp(i w t) phases on a Hermitian matrix with norm ~ 60.
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -50.0), c(0.0, -12.0), c(0.0, -12.0), c(0.0, 30.0)],
        );
        let e = expm(&a).unwrap();
        // Unitarity of exp(-i H): columns orthonormal.
        let g = e.adjoint() * &e;
        assert!((g[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((g[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(g[(0, 1)].norm() < 1e-12);
    }
}
