//! Periodic cubic spline interpolation on a uniform grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Interpolating `C²` periodic cubic spline through `values[k]` at
/// `x_k = k·period/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpline {
    period: f64,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    curvature: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::Config(format!(
                "periodic spline needs at least 3 samples, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("periodic spline data must be finite".into()));
        }
        let h = period / n as f64;
        // M_{k-1} + 4 M_k + M_{k+1} = 6 (y_{k+1} - 2 y_k + y_{k-1}) / h², cyclic.
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for k in 0..n {
            let (km, kp) = ((k + n - 1) % n, (k + 1) % n);
            a[(k, k)] += 4.0;
            a[(k, km)] += 1.0;
            a[(k, kp)] += 1.0;
            b[k] = 6.0 * (values[kp] - 2.0 * values[k] + values[km]) / (h * h);
        }
        let m = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Solver("periodic spline system is singular".into()))?;
        Ok(PeriodicSpline {
            period,
            values,
            curvature: m.iter().copied().collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let s = x.rem_euclid(self.period) / h;
        let k = (s.floor() as usize).min(n - 1);
        let t = s - k as f64;
        let kp = (k + 1) % n;
        let (y0, y1) = (self.values[k], self.values[kp]);
        let (m0, m1) = (self.curvature[k], self.curvature[kp]);
        let u = 1.0 - t;
        u * y0 + t * y1 + h * h / 6.0 * ((u * u * u - u) * m0 + (t * t * t - t) * m1)
    }

    pub fn knots(&self) -> usize {
        self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reproduces_knots_and_constants() {
        let s = PeriodicSpline::new(2.0, vec![1.0, 3.0, -2.0, 0.5]).unwrap();
        for (k, v) in [1.0, 3.0, -2.0, 0.5].iter().enumerate() {
            assert!((s.eval(0.5 * k as f64) - v).abs() < 1e-14);
            assert!((s.eval(0.5 * k as f64 + 2.0) - v).abs() < 1e-13);
        }
        let c = PeriodicSpline::new(1.0, vec![0.7; 5]).unwrap();
        assert!((c.eval(0.123) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_on_smooth_data() {
        let f = |x: f64| (2.0 * PI * x).sin() + 0.3 * (4.0 * PI * x).cos();
        let err = |n: usize| {
            let s = PeriodicSpline::new(1.0, (0..n).map(|k| f(k as f64 / n as f64)).collect()).unwrap();
            (0..997).map(|i| (s.eval(i as f64 / 997.0) - f(i as f64 / 997.0)).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        let rate = (e1 / e2).log2();
        assert!(rate > 3.7, "{e1} {e2} {rate}");
    }

    #[test]
    fn rejects_short_or_bad_data() {
        assert!(PeriodicSpline::new(1.0, vec![1.0, 2.0]).is_err());
        assert!(PeriodicSpline::new(1.0, vec![1.0, f64::NAN, 0.0]).is_err());
    }
}
