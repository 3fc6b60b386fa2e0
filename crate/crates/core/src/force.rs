//! Body forces from a small symbolic catalog, given in flat coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyForce {
    /// `f ≡ value`.
    Constant { value: [f64; 2] },
    /// `f = mean + amplitude · sin(2π·mode·x₁/L + phase)`.
    Trigonometric {
        #[serde(default)]
        mean: [f64; 2],
        amplitude: [f64; 2],
        mode: u32,
        #[serde(default)]
        phase: f64,
    },
}

impl BodyForce {
    pub fn constant(value: [f64; 2]) -> Self {
        BodyForce::Constant { value }
    }

    pub fn zero() -> Self {
        BodyForce::constant([0.0, 0.0])
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BodyForce::Constant { value } => value.iter().all(|v| v.is_finite()),
            BodyForce::Trigonometric {
                mean,
                amplitude,
                phase,
                ..
            } => mean.iter().chain(amplitude).chain([phase]).all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("body force has non-finite entries: {self:?}")))
        }
    }

    /// `f(x)` for an `L`-periodic domain.
    pub fn eval(&self, x: [f64; 2], period: f64) -> [f64; 2] {
        match self {
            BodyForce::Constant { value } => *value,
            BodyForce::Trigonometric {
                mean,
                amplitude,
                mode,
                phase,
            } => {
                let s = (2.0 * std::f64::consts::PI * *mode as f64 * x[0] / period + phase).sin();
                [mean[0] + amplitude[0] * s, mean[1] + amplitude[1] * s]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BodyForce::Constant { value } => *value == [0.0, 0.0],
            BodyForce::Trigonometric {
                mean, amplitude, ..
            } => *mean == [0.0, 0.0] && *amplitude == [0.0, 0.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_evaluates_and_parses() {
        let f: BodyForce = toml::from_str("kind = \"constant\"\nvalue = [1.0, 0.0]").unwrap();
        assert_eq!(f.eval([0.3, 0.1], 2.0), [1.0, 0.0]);
        let g: BodyForce =
            toml::from_str("kind = \"trigonometric\"\namplitude = [0.0, 2.0]\nmode = 1").unwrap();
        let v = g.eval([0.5, 0.0], 2.0);
        assert!(v[0] == 0.0 && (v[1] - 2.0).abs() < 1e-15);
        assert!(BodyForce::zero().is_zero());
        assert!(BodyForce::constant([f64::NAN, 0.0]).validate().is_err());
    }
}
