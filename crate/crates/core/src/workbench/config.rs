//! Workbench configuration file (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary_layer::StripSpec;
use crate::dns::MicroParams;
use crate::error::{Error, Result};
use crate::force::BodyForce;
use crate::geometry::{cells_per, InclusionSpec};
use crate::transform::CurveSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Fourier coefficients of the interface curve; the period comes from
/// `box.L`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveShape {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(rename = "L")]
    pub length: f64,
    /// Height of the free part.
    pub h_free: f64,
    /// Depth of the porous part.
    #[serde(rename = "K_depth")]
    pub k_depth: f64,
}

fn default_h_micro() -> f64 {
    0.125
}

fn default_band_layers() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub h_cell: f64,
    pub h_strip: f64,
    pub h_macro: f64,
    /// Element size inside a pore, in cell units.
    #[serde(default = "default_h_micro")]
    pub h_micro_per_pore: f64,
    /// Rows of pore-resolved cells above the interface in the microscale
    /// meshes.
    #[serde(default = "default_band_layers")]
    pub band_layers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripConfig {
    pub n_pore_layers: usize,
    pub top_height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub x1_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub eps_list: Vec<f64>,
}

/// Pass/fail thresholds written next to the checks in the stage outputs.
/// They never change a computed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub identities: f64,
    pub slip: f64,
    pub compatibility: f64,
    pub truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identities: 1e-10,
            slip: 1e-8,
            compatibility: 1e-6,
            truncation: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub curve: CurveShape,
    pub inclusion: InclusionSpec,
    #[serde(rename = "box")]
    pub domain: BoxSpec,
    pub force: BodyForce,
    pub discretization: Discretization,
    pub strip: StripConfig,
    pub sampling: Sampling,
    pub sweep: Sweep,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: WorkbenchConfig = toml::from_str(text).map_err(|e| Error::Parse {
            what: "workbench config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                what: path.display().to_string(),
                message,
            },
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn curve_spec(&self) -> CurveSpec {
        CurveSpec {
            period: self.domain.length,
            cos: self.curve.cos.clone(),
            sin: self.curve.sin.clone(),
        }
    }

    pub fn strip_spec(&self) -> StripSpec {
        StripSpec {
            n_pore_layers: self.strip.n_pore_layers,
            top_height: self.strip.top_height,
            h: self.discretization.h_strip,
        }
    }

    pub fn micro_params(&self) -> MicroParams {
        MicroParams {
            height: self.domain.h_free,
            k_depth: self.domain.k_depth,
            h_micro: self.discretization.h_micro_per_pore,
            h_macro: self.discretization.h_macro,
            band_layers: self.discretization.band_layers,
        }
    }

    /// Every mesh size halved.
    pub fn refined(&self) -> Self {
        let mut c = self.clone();
        let d = &mut c.discretization;
        d.h_cell *= 0.5;
        d.h_strip *= 0.5;
        d.h_macro *= 0.5;
        d.h_micro_per_pore *= 0.5;
        c
    }

    /// Twice as many pore layers in the boundary-layer strip.
    pub fn deepened(&self) -> Self {
        let mut c = self.clone();
        c.strip.n_pore_layers *= 2;
        c
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let spec = self.curve_spec();
        spec.validate()?;
        self.inclusion.validate()?;
        self.force.validate()?;
        let b = &self.domain;
        positive("box.L", b.length)?;
        positive("box.h_free", b.h_free)?;
        positive("box.K_depth", b.k_depth)?;
        let d = &self.discretization;
        positive("discretization.h_cell", d.h_cell)?;
        positive("discretization.h_strip", d.h_strip)?;
        positive("discretization.h_macro", d.h_macro)?;
        positive("discretization.h_micro_per_pore", d.h_micro_per_pore)?;
        if d.band_layers == 0 {
            return Err(Error::Config("discretization.band_layers must be at least 1".into()));
        }
        if self.strip.n_pore_layers < 2 || self.strip.top_height < 2 {
            return Err(Error::Config(format!(
                "strip needs at least 2 pore layers and height 2, got {} and {}",
                self.strip.n_pore_layers, self.strip.top_height
            )));
        }
        if self.sampling.x1_points < 4 {
            return Err(Error::Config(format!(
                "sampling.x1_points must be at least 4, got {}",
                self.sampling.x1_points
            )));
        }
        let eps = &self.sweep.eps_list;
        if eps.is_empty() {
            return Err(Error::Config("sweep.eps_list is empty".into()));
        }
        if eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config(format!("sweep.eps_list must be strictly decreasing: {eps:?}")));
        }
        for &e in eps {
            positive("sweep.eps_list entry", e)?;
            cells_per(b.length, e, "L")?;
            cells_per(b.k_depth, e, "K_depth")?;
            if (d.band_layers as f64) * e >= b.h_free {
                return Err(Error::Config(format!(
                    "ε = {e}: {} pore-resolved rows do not fit below h_free = {}",
                    d.band_layers, b.h_free
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
schema_version = 1

[curve]
sin = [0.1]

[inclusion]
kind = "circle"
center = [0.5, 0.5]
radius = 0.25

[box]
L = 1.0
h_free = 1.0
K_depth = 0.5

[force]
kind = "constant"
value = [1.0, 0.0]

[discretization]
h_cell = 0.0625
h_strip = 0.125
h_macro = 0.0625

[strip]
n_pore_layers = 6
top_height = 3

[sampling]
x1_points = 8

[sweep]
eps_list = [0.25, 0.125, 0.0625]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = WorkbenchConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.discretization.h_micro_per_pore, 0.125);
        assert_eq!(c.discretization.band_layers, 2);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.curve_spec(), CurveSpec::sine(1.0, 0.1));
        let back = WorkbenchConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_incommensurate_eps() {
        let text = SAMPLE.replace("[0.25, 0.125, 0.0625]", "[0.25, 0.3]");
        let e = WorkbenchConfig::from_toml(&text).unwrap_err();
        assert!(e.is_validation(), "{e}");
        let text = SAMPLE.replace("[0.25, 0.125, 0.0625]", "[0.3]");
        assert!(matches!(WorkbenchConfig::from_toml(&text), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_fields() {
        let few = SAMPLE.replace("x1_points = 8", "x1_points = 3");
        assert!(matches!(WorkbenchConfig::from_toml(&few), Err(Error::Config(_))));
        let neg = SAMPLE.replace("h_cell = 0.0625", "h_cell = -0.1");
        assert!(matches!(WorkbenchConfig::from_toml(&neg), Err(Error::Config(_))));
        let unknown = SAMPLE.replace("[sampling]", "[sampling]\nfoo = 1");
        assert!(matches!(WorkbenchConfig::from_toml(&unknown), Err(Error::Parse { .. })));
        let version = SAMPLE.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(WorkbenchConfig::from_toml(&version), Err(Error::Config(_))));
    }

    #[test]
    fn refinement_halves_every_size() {
        let c = WorkbenchConfig::from_toml(SAMPLE).unwrap();
        let f = c.refined();
        assert_eq!(f.discretization.h_cell, 0.03125);
        assert_eq!(f.discretization.h_micro_per_pore, 0.0625);
        assert_eq!(c.deepened().strip.n_pore_layers, 12);
    }
}
