//! Truncated bivariate Taylor polynomials.
//!
//! A [`Jet`] carries the Taylor coefficients of a smooth function of
//! `(z1, z2)` around a point up to total degree [`ORDER`]. Arithmetic and
//! `sin`/`cos` propagate the coefficients exactly, so derivatives of
//! composite expressions are exact up to roundoff. Each call to [`Jet::d1`]
//! or [`Jet::d2`] lowers the number of trustworthy orders by one.

use std::ops::{Add, Mul, Neg, Sub};

pub const ORDER: usize = 4;
const N: usize = ORDER + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [[f64; N]; N],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [[0.0; N]; N];
        c[0][0] = v;
        Jet { c }
    }

    /// The coordinate function `z1` expanded around `z1`.
    pub fn var1(z1: f64) -> Self {
        let mut j = Jet::constant(z1);
        j.c[1][0] = 1.0;
        j
    }

    /// The coordinate function `z2` expanded around `z2`.
    pub fn var2(z2: f64) -> Self {
        let mut j = Jet::constant(z2);
        j.c[0][1] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    /// Partial derivative with respect to the first variable.
    pub fn d1(&self) -> Self {
        let mut c = [[0.0; N]; N];
        for i in 0..ORDER {
            for j in 0..(ORDER - i) {
                c[i][j] = (i + 1) as f64 * self.c[i + 1][j];
            }
        }
        Jet { c }
    }

    /// Partial derivative with respect to the second variable.
    pub fn d2(&self) -> Self {
        let mut c = [[0.0; N]; N];
        for i in 0..ORDER {
            for j in 0..(ORDER - i) {
                c[i][j] = (j + 1) as f64 * self.c[i][j + 1];
            }
        }
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let (even, odd) = self.nilpotent_series();
        even.scale(s) + odd.scale(c)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let (even, odd) = self.nilpotent_series();
        even.scale(c) - odd.scale(s)
    }

    /// With `d = self - value`, returns `(cos d, sin d)` truncated at [`ORDER`].
    fn nilpotent_series(&self) -> (Jet, Jet) {
        let mut d = *self;
        d.c[0][0] = 0.0;
        let d2 = d * d;
        let d3 = d2 * d;
        let d4 = d2 * d2;
        let even = Jet::constant(1.0) - d2.scale(0.5) + d4.scale(1.0 / 24.0);
        let odd = d - d3.scale(1.0 / 6.0);
        (even, odd)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for i in 0..N {
            for j in 0..(N - i) {
                self.c[i][j] += rhs.c[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for i in 0..N {
            for j in 0..(N - i) {
                self.c[i][j] -= rhs.c[i][j];
            }
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..(N - i) {
                let mut acc = 0.0;
                for p in 0..=i {
                    for q in 0..=j {
                        acc += self.c[p][q] * rhs.c[i - p][j - q];
                    }
                }
                c[i][j] = acc;
            }
        }
        Jet { c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0][0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives_are_exact() {
        // p = z1^2 z2 + 3 z2^3 at (0.7, -0.4)
        let (a, b) = (0.7, -0.4);
        let z1 = Jet::var1(a);
        let z2 = Jet::var2(b);
        let p = z1 * z1 * z2 + z2 * z2 * z2 * 3.0;
        assert!((p.value() - (a * a * b + 3.0 * b * b * b)).abs() < 1e-15);
        assert!((p.d1().value() - 2.0 * a * b).abs() < 1e-15);
        assert!((p.d2().value() - (a * a + 9.0 * b * b)).abs() < 1e-15);
        assert!((p.d1().d2().value() - 2.0 * a).abs() < 1e-15);
        assert!((p.d2().d2().d2().value() - 18.0).abs() < 1e-14);
    }

    #[test]
    fn trig_derivatives_up_to_fourth_order() {
        let x = 0.37;
        let s = Jet::var1(x).sin();
        let expected = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        let mut d = s;
        for e in expected {
            assert!((d.value() - e).abs() < 1e-14);
            d = d.d1();
        }
    }

    #[test]
    fn composition_matches_chain_rule() {
        // cos(z1 * z2): d/dz1 d/dz2 = -sin(z1 z2) - z1 z2 cos(z1 z2)
        let (a, b) = (0.3, 1.1);
        let f = (Jet::var1(a) * Jet::var2(b)).cos();
        let t = a * b;
        let expected = -t.sin() - t * t.cos();
        assert!((f.d1().d2().value() - expected).abs() < 1e-14);
    }
}
