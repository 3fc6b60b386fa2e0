use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Minimum gap between the inclusion and the cell boundary.
pub const MARGIN: f64 = 0.02;

const ARC_SAMPLES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InclusionKind {
    Circle,
    SmoothStar,
}

/// Solid obstacle in the unit cell `Y = (0,1)²`.
///
/// The boundary is the polar curve `r(θ) = radius + Σ_{k≥1} amplitudes[k-1]·cos(kθ)`
/// around `center`; a circle has no amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionSpec {
    pub kind: InclusionKind,
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

impl InclusionSpec {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        InclusionSpec {
            kind: InclusionKind::Circle,
            center,
            radius,
            amplitudes: Vec::new(),
        }
    }

    pub fn centered_circle(radius: f64) -> Self {
        Self::circle([0.5, 0.5], radius)
    }

    pub fn smooth_star(center: [f64; 2], radius: f64, amplitudes: Vec<f64>) -> Self {
        InclusionSpec {
            kind: InclusionKind::SmoothStar,
            center,
            radius,
            amplitudes,
        }
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        let mut r = self.radius;
        for (i, a) in self.amplitudes.iter().enumerate() {
            r += a * ((i + 1) as f64 * theta).cos();
        }
        r
    }

    fn radius_derivative(&self, theta: f64) -> f64 {
        let mut d = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let k = (i + 1) as f64;
            d -= a * k * (k * theta).sin();
        }
        d
    }

    pub fn point_at(&self, theta: f64) -> [f64; 2] {
        let r = self.radius_at(theta);
        [
            self.center[0] + r * theta.cos(),
            self.center[1] + r * theta.sin(),
        ]
    }

    /// Whether `p` (cell coordinates) lies strictly inside the solid.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let rho = dx.hypot(dy);
        rho < self.radius_at(dy.atan2(dx))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().all(|c| c.is_finite())
            && self.radius.is_finite()
            && self.amplitudes.iter().all(|a| a.is_finite());
        if !finite || self.radius <= 0.0 {
            return Err(Error::Geometry(
                "inclusion radius must be positive and finite".into(),
            ));
        }
        if self.kind == InclusionKind::Circle && !self.amplitudes.is_empty() {
            return Err(Error::Geometry(
                "a circular inclusion takes no radial amplitudes".into(),
            ));
        }
        let n = 2048;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..n {
            let th = 2.0 * PI * i as f64 / n as f64;
            if self.radius_at(th) <= 0.05 * self.radius {
                return Err(Error::Geometry(format!(
                    "inclusion boundary degenerates near angle {th:.3}"
                )));
            }
            let p = self.point_at(th);
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let gap = lo[0].min(lo[1]).min(1.0 - hi[0]).min(1.0 - hi[1]);
        if gap < MARGIN {
            return Err(Error::Geometry(format!(
                "inclusion comes within {gap:.4} of the cell boundary (margin {MARGIN})"
            )));
        }
        Ok(())
    }

    /// Invariant under the symmetry group of the square about the cell centre.
    pub fn is_square_symmetric(&self) -> bool {
        self.center == [0.5, 0.5]
            && self
                .amplitudes
                .iter()
                .enumerate()
                .all(|(i, &a)| a == 0.0 || (i + 1) % 4 == 0)
    }

    /// Exact solid area.
    pub fn area(&self) -> f64 {
        // ½∫r² dθ; the integrand is a trigonometric polynomial, so the
        // periodic trapezoidal rule is exact once it has enough nodes.
        let n = 4 * (self.amplitudes.len() + 2);
        let s: f64 = (0..n)
            .map(|i| {
                let r = self.radius_at(2.0 * PI * i as f64 / n as f64);
                r * r
            })
            .sum();
        0.5 * s * 2.0 * PI / n as f64
    }

    pub fn perimeter(&self) -> f64 {
        self.arc_length(0.0, 2.0 * PI)
    }

    fn speed(&self, theta: f64) -> f64 {
        self.radius_at(theta).hypot(self.radius_derivative(theta))
    }

    fn arc_length(&self, t0: f64, t1: f64) -> f64 {
        let n = ARC_SAMPLES;
        let h = (t1 - t0) / n as f64;
        let mut s = 0.5 * (self.speed(t0) + self.speed(t1));
        for i in 1..n {
            s += self.speed(t0 + h * i as f64);
        }
        s * h
    }

    /// Angles splitting the arc `[t0, t1]` into `segments` pieces of equal
    /// arc length (endpoints included).
    pub fn equal_arc_angles(&self, t0: f64, t1: f64, segments: usize) -> Vec<f64> {
        if self.kind == InclusionKind::Circle {
            return (0..=segments)
                .map(|k| t0 + (t1 - t0) * k as f64 / segments as f64)
                .collect();
        }
        let n = ARC_SAMPLES;
        let h = (t1 - t0) / n as f64;
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            let a = t0 + h * i as f64;
            cum[i + 1] = cum[i] + 0.5 * h * (self.speed(a) + self.speed(a + h));
        }
        let total = cum[n];
        let mut out = Vec::with_capacity(segments + 1);
        out.push(t0);
        let mut j = 0;
        for k in 1..segments {
            let target = total * k as f64 / segments as f64;
            while cum[j + 1] < target {
                j += 1;
            }
            let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
            out.push(t0 + h * (j as f64 + frac));
        }
        out.push(t1);
        out
    }

    /// Number of boundary segments on the arc `[t0, t1]` at spacing ≤ `spacing`.
    pub fn segments_for(&self, t0: f64, t1: f64, spacing: f64) -> usize {
        ((self.arc_length(t0, t1) / spacing).ceil() as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_area_and_membership() {
        let inc = InclusionSpec::centered_circle(0.25);
        assert!((inc.area() - PI / 16.0).abs() < 1e-14);
        assert!(inc.contains([0.5, 0.6]));
        assert!(!inc.contains([0.9, 0.9]));
        assert!((inc.perimeter() - 0.5 * PI).abs() < 1e-10);
    }

    #[test]
    fn star_area_matches_closed_form() {
        // ½∫(r0 + a cos 4θ)² = π r0² + π a²/2
        let inc = InclusionSpec::smooth_star([0.5, 0.5], 0.25, vec![0.0, 0.0, 0.0, 0.04]);
        assert!((inc.area() - (PI * 0.0625 + PI * 0.0016 / 2.0)).abs() < 1e-14);
        assert!(inc.is_square_symmetric());
        inc.validate().unwrap();
    }

    #[test]
    fn margin_is_enforced() {
        assert!(InclusionSpec::centered_circle(0.49).validate().is_err());
        assert!(InclusionSpec::centered_circle(0.47).validate().is_ok());
        assert!(InclusionSpec::circle([0.2, 0.5], 0.19).validate().is_err());
    }

    #[test]
    fn equal_arc_sampling_is_uniform() {
        let inc = InclusionSpec::smooth_star([0.5, 0.5], 0.25, vec![0.0, 0.05]);
        let th = inc.equal_arc_angles(0.0, PI, 20);
        let lens: Vec<f64> = th
            .windows(2)
            .map(|w| inc.arc_length(w[0], w[1]))
            .collect();
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        for l in lens {
            assert!((l - mean).abs() < 1e-6 * mean);
        }
    }

    #[test]
    fn off_center_is_not_symmetric() {
        assert!(!InclusionSpec::circle([0.45, 0.5], 0.2).is_square_symmetric());
        assert!(!InclusionSpec::smooth_star([0.5, 0.5], 0.2, vec![0.0, 0.03]).is_square_symmetric());
    }
}
