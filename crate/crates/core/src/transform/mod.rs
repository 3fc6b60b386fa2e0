//! The coordinate transformation `ψ(z) = (z1, z2 + g(z1))` that flattens a
//! curved interface, its Jacobian `F`, and the metric `F⁻¹F⁻ᵀ`.
//!
//! Convention: the gradient of a vector field is taken column-wise,
//! `(∇j)_{ik} = ∂_i j_k`, and the divergence of a matrix field acts on
//! columns, `(div M)_k = Σ_i ∂_i M_{ik}`. Every transformed operator in the
//! crate follows this convention.

pub(crate) mod identities;

pub use identities::{
    fd_residuals, verify_identities, IdentityResidual, ResidualReport, DEFAULT_RESOLUTION,
};

use crate::error::{Error, Result};
use crate::jet::Jet;
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// An L-periodic interface curve given by a truncated Fourier series,
/// `g(z) = Σ_{k≥1} a_k cos(2πkz/L) + b_k sin(2πkz/L)`.
///
/// `cos[0]` and `sin[0]` hold the coefficients of the `k = 1` mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    #[serde(rename = "L")]
    pub period: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl CurveSpec {
    /// The flat interface `g ≡ 0`.
    pub fn flat(period: f64) -> Self {
        CurveSpec {
            period,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    /// `g(z) = amplitude · sin(2πz/L)`.
    pub fn sine(period: f64, amplitude: f64) -> Self {
        CurveSpec {
            period,
            cos: Vec::new(),
            sin: vec![amplitude],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!(
                "curve period must be positive, got {}",
                self.period
            )));
        }
        if self.cos.iter().chain(&self.sin).any(|a| !a.is_finite()) {
            return Err(Error::Config("curve coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn is_flat(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|&a| a == 0.0)
    }

    /// Reduces `z1` into `[0, L)`.
    pub fn reduce(&self, z1: f64) -> f64 {
        let r = z1.rem_euclid(self.period);
        if r >= self.period {
            0.0
        } else {
            r
        }
    }

    fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    /// The `n`-th derivative of `g` at `z1`, in closed form.
    pub fn derivative(&self, z1: f64, n: u32) -> f64 {
        let z = self.reduce(z1);
        let shift = n as f64 * PI / 2.0;
        let mut acc = 0.0;
        let modes = self.cos.len().max(self.sin.len());
        for k in 1..=modes {
            let w = self.wavenumber(k);
            let phase = w * z + shift;
            let scale = w.powi(n as i32);
            if let Some(&a) = self.cos.get(k - 1) {
                acc += a * scale * phase.cos();
            }
            if let Some(&b) = self.sin.get(k - 1) {
                acc += b * scale * phase.sin();
            }
        }
        acc
    }

    pub fn g(&self, z1: f64) -> f64 {
        self.derivative(z1, 0)
    }

    pub fn gprime(&self, z1: f64) -> f64 {
        self.derivative(z1, 1)
    }

    pub fn gsecond(&self, z1: f64) -> f64 {
        self.derivative(z1, 2)
    }

    /// `g^{(n)}` composed with a jet, used for exact derivatives of
    /// composite expressions.
    pub(crate) fn derivative_jet(&self, z1: Jet, n: u32) -> Jet {
        let shift = n as f64 * PI / 2.0;
        let mut acc = Jet::constant(0.0);
        let modes = self.cos.len().max(self.sin.len());
        for k in 1..=modes {
            let w = self.wavenumber(k);
            let phase = z1 * w + shift;
            let scale = w.powi(n as i32);
            if let Some(&a) = self.cos.get(k - 1) {
                acc = acc + phase.cos() * (a * scale);
            }
            if let Some(&b) = self.sin.get(k - 1) {
                acc = acc + phase.sin() * (b * scale);
            }
        }
        acc
    }
}

/// `F`, its inverses, and the metric `F⁻¹F⁻ᵀ` at one abscissa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianSample {
    pub gprime: f64,
    pub f: Matrix2<f64>,
    pub f_inv: Matrix2<f64>,
    pub f_inv_t: Matrix2<f64>,
    pub metric: Matrix2<f64>,
    pub eig_lo: f64,
    pub eig_hi: f64,
}

impl JacobianSample {
    /// The sample for a given slope `g'`.
    pub fn from_slope(gp: f64) -> Self {
        let f = Matrix2::new(1.0, 0.0, gp, 1.0);
        let f_inv = Matrix2::new(1.0, 0.0, -gp, 1.0);
        let f_inv_t = Matrix2::new(1.0, -gp, 0.0, 1.0);
        let metric = Matrix2::new(1.0, -gp, -gp, 1.0 + gp * gp);
        let (eig_lo, eig_hi) = metric_eigenvalues(gp);
        JacobianSample {
            gprime: gp,
            f,
            f_inv,
            f_inv_t,
            metric,
            eig_lo,
            eig_hi,
        }
    }

    pub fn det_f(&self) -> f64 {
        self.f.determinant()
    }
}

/// Closed-form eigenvalues `(λ₂, λ₁)` of the metric for slope `g'`.
///
/// The small one is computed as the reciprocal of the large one, which
/// avoids cancellation and keeps `λ₁λ₂ = 1` to roundoff.
pub fn metric_eigenvalues(gp: f64) -> (f64, f64) {
    let s = gp * gp;
    let hi = 1.0 + s / 2.0 + (s + s * s / 4.0).sqrt();
    (1.0 / hi, hi)
}

pub fn jacobian(spec: &CurveSpec, z1: f64) -> JacobianSample {
    JacobianSample::from_slope(spec.gprime(z1))
}

pub fn map_point(spec: &CurveSpec, z: [f64; 2]) -> [f64; 2] {
    [z[0], z[1] + spec.g(z[0])]
}

pub fn unmap_point(spec: &CurveSpec, x: [f64; 2]) -> [f64; 2] {
    [x[0], x[1] - spec.g(x[0])]
}

/// Transformed unit normal `∝ F⁻ᵀν` and unit tangent `∝ Fτ`, where `τ` is
/// `ν` rotated clockwise (so `ν = e₂` gives `τ = e₁`).
pub fn transform_vectors(spec: &CurveSpec, x1: f64, nu: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let jac = jacobian(spec, x1);
    let nu = Vector2::new(nu[0], nu[1]);
    let tau = Vector2::new(nu[1], -nu[0]);
    let n = (jac.f_inv_t * nu).normalize();
    let t = (jac.f * tau).normalize();
    ([n[0], n[1]], [t[0], t[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_curve_gives_identity() {
        let spec = CurveSpec::flat(1.0);
        let j = jacobian(&spec, 0.3);
        assert_eq!(j.f, Matrix2::identity());
        assert_eq!(j.metric, Matrix2::identity());
        assert_eq!((j.eig_lo, j.eig_hi), (1.0, 1.0));
        assert_eq!(map_point(&spec, [0.2, -0.7]), [0.2, -0.7]);
    }

    #[test]
    fn sine_jacobian_at_origin() {
        let a = 0.2;
        let spec = CurveSpec::sine(1.0, a);
        let j = jacobian(&spec, 0.0);
        assert!((j.f[(1, 0)] - 2.0 * PI * a).abs() < 1e-15);
        assert_eq!(j.f[(0, 1)], 0.0);
        assert_eq!(j.det_f(), 1.0);
    }

    #[test]
    fn unit_slope_eigenvalues() {
        let (lo, hi) = metric_eigenvalues(1.0);
        assert!((hi - 2.618034).abs() < 1e-6);
        assert!((lo - 0.381966).abs() < 1e-6);
        assert!((lo * hi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn map_quarter_period() {
        let spec = CurveSpec::sine(1.0, 0.1);
        let x = map_point(&spec, [0.25, 0.0]);
        assert_eq!(x[0], 0.25);
        assert!((x[1] - 0.1).abs() < 1e-16);
    }

    #[test]
    fn flat_normal_and_tangent() {
        let (n, t) = transform_vectors(&CurveSpec::flat(1.0), 0.4, [0.0, 1.0]);
        assert_eq!(n, [0.0, 1.0]);
        assert_eq!(t, [1.0, 0.0]);
    }

    #[test]
    fn unit_slope_normal() {
        // g(z) = sin(z) with L = 2π has g'(0) = 1.
        let spec = CurveSpec::sine(2.0 * PI, 1.0);
        let (n, _) = transform_vectors(&spec, 0.0, [0.0, 1.0]);
        let r = 1.0 / 2f64.sqrt();
        assert!((n[0] + r).abs() < 1e-15 && (n[1] - r).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_hand_formulas() {
        let spec = CurveSpec {
            period: 2.0,
            cos: vec![0.1, -0.05],
            sin: vec![0.2],
        };
        let z: f64 = 0.37;
        let w = PI;
        let g = 0.1 * (w * z).cos() - 0.05 * (2.0 * w * z).cos() + 0.2 * (w * z).sin();
        let gp = -0.1 * w * (w * z).sin() + 0.1 * w * (2.0 * w * z).sin() + 0.2 * w * (w * z).cos();
        let gpp = -0.1 * w * w * (w * z).cos() + 0.2 * w * w * (2.0 * w * z).cos()
            - 0.2 * w * w * (w * z).sin();
        assert!((spec.g(z) - g).abs() < 1e-15);
        assert!((spec.gprime(z) - gp).abs() < 1e-14);
        assert!((spec.gsecond(z) - gpp).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_period() {
        assert!(CurveSpec::flat(0.0).validate().is_err());
        assert!(CurveSpec::flat(-1.0).validate().is_err());
        assert!(CurveSpec::flat(1.0).validate().is_ok());
    }

    fn arb_spec() -> impl Strategy<Value = CurveSpec> {
        (
            0.5f64..3.0,
            prop::collection::vec(-0.2f64..0.2, 0..3),
            prop::collection::vec(-0.2f64..0.2, 0..3),
        )
            .prop_map(|(period, cos, sin)| CurveSpec { period, cos, sin })
    }

    proptest! {
        #[test]
        fn periodic_in_z1(spec in arb_spec(), z in -5.0f64..5.0) {
            let d = spec.g(z + spec.period) - spec.g(z);
            prop_assert!(d.abs() < 1e-12);
        }

        #[test]
        fn round_trip(spec in arb_spec(), z1 in -3.0f64..3.0, z2 in -3.0f64..3.0) {
            let back = unmap_point(&spec, map_point(&spec, [z1, z2]));
            prop_assert!((back[0] - z1).abs() < 1e-14 && (back[1] - z2).abs() < 1e-14);
        }

        #[test]
        fn jacobian_invariants(spec in arb_spec(), z1 in -3.0f64..3.0) {
            let j = jacobian(&spec, z1);
            prop_assert!((j.det_f() - 1.0).abs() < 1e-15);
            prop_assert_eq!(j.metric, j.metric.transpose());
            prop_assert!((j.eig_lo * j.eig_hi - 1.0).abs() < 1e-14);
            prop_assert!(0.0 < j.eig_lo && j.eig_lo <= 1.0 && 1.0 <= j.eig_hi);
            prop_assert!((j.f_inv * j.f - Matrix2::identity()).norm() < 1e-15);
            prop_assert!((j.f_inv * j.f_inv_t - j.metric).norm() < 1e-14);
        }

        #[test]
        fn normal_is_orthogonal_to_tangent(spec in arb_spec(), x1 in 0.0f64..3.0, th in 0.0f64..6.3) {
            let (n, t) = transform_vectors(&spec, x1, [th.cos(), th.sin()]);
            prop_assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-14);
            prop_assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
        }
    }
}
