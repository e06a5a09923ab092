//! Natural cubic spline interpolation.

use crate::error::{Result, TcmolError};

/// Natural cubic spline through (x_i, y_i) with zero second derivative at the
/// boundary knots. Evaluation outside the sampled window is an error; the
/// potentials that feed the spectral propagator must never be extrapolated.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(TcmolError::Config(format!(
                "spline needs matching arrays, got {} x and {} y",
                n,
                y.len()
            )));
        }
        if n < 4 {
            return Err(TcmolError::Config(format!(
                "spline needs at least 4 samples, got {n}"
            )));
        }
        for i in 1..n {
            if !(x[i] > x[i - 1]) {
                return Err(TcmolError::Config(format!(
                    "spline abscissae must be strictly increasing at index {i}"
                )));
            }
        }

        // Thomas solve for the interior second derivatives; m[0] = m[n-1] = 0.
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            diag[i] = (h0 + h1) / 3.0;
            upper[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        let mut m = vec![0.0; n];
        // Forward elimination over i = 2..n-2; the lower entry at row i is h_{i-1}/6.
        for i in 2..n - 1 {
            let lower = (x[i] - x[i - 1]) / 6.0;
            let w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
        }

        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn eval(&self, xq: f64) -> Result<f64> {
        if xq < self.x_min() || xq > self.x_max() {
            return Err(TcmolError::Config(format!(
                "spline evaluation at {xq} outside sampled window [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        // Binary search for the segment; xq == x_max falls into the last one.
        let i = match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).expect("finite"))
        {
            Ok(k) => k.min(self.x.len() - 2),
            Err(k) => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}
