//! Configuration-driven pipeline with on-disk caching of stage outputs.
//!
//! Stages run in a fixed order and talk to each other only through the CSV
//! files they write, so a stage restored from cache feeds exactly the same
//! numbers downstream as a fresh run. A stage is skipped when its cache key
//! (a SHA-256 of the configuration fields it reads plus the keys of the
//! stages it reads from) matches the record in `<out>/.cache` and every
//! recorded output still has the recorded hash.
//!
//! | stage            | reads from                | configuration fields                                   |
//! |------------------|---------------------------|--------------------------------------------------------|
//! | `transform`      |                           | curve, box.L, tolerances.identities                    |
//! | `cell`           |                           | curve, box.L, inclusion, h_cell, x1_points             |
//! | `free_flow`      |                           | curve, box.L, box.h_free, force, h_macro, x1_points    |
//! | `boundary_layer` | free_flow                 | curve, inclusion, strip, h_strip, tolerances.truncation|
//! | `effective`      | cell, boundary_layer      | box, force, h_macro, eps_list, tolerances              |
//! | `darcy`          | effective                 | (none beyond `effective`)                              |
//! | `dns`            | cell, boundary_layer      | box, force, inclusion, discretization, eps_list        |

pub mod config;
mod plots;
mod stages;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use config::WorkbenchConfig;
pub use plots::{export_plots, PLOT_INPUTS};
pub use table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Transform,
    Cell,
    FreeFlow,
    BoundaryLayer,
    Effective,
    Darcy,
    Dns,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Transform,
        Stage::Cell,
        Stage::FreeFlow,
        Stage::BoundaryLayer,
        Stage::Effective,
        Stage::Darcy,
        Stage::Dns,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Transform => "transform",
            Stage::Cell => "cell",
            Stage::FreeFlow => "free_flow",
            Stage::BoundaryLayer => "boundary_layer",
            Stage::Effective => "effective",
            Stage::Darcy => "darcy",
            Stage::Dns => "dns",
        }
    }

    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Transform | Stage::Cell | Stage::FreeFlow => &[],
            Stage::BoundaryLayer => &[Stage::FreeFlow],
            Stage::Effective | Stage::Dns => &[Stage::Cell, Stage::BoundaryLayer],
            Stage::Darcy => &[Stage::Effective],
        }
    }

    /// Files written by the stage, relative to the artifact directory.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Transform => &["transform/identities.csv", "transform/jacobian.csv"],
            Stage::Cell => &["cell/permeability.csv"],
            Stage::FreeFlow => &[
                "free_flow/stress_jump.csv",
                "free_flow/summary.csv",
                "free_flow/u0_field.csv",
            ],
            Stage::BoundaryLayer => &[
                "boundary_layer/cbl.csv",
                "boundary_layer/checks.csv",
                "boundary_layer/decay.csv",
            ],
            Stage::Effective => &[
                "effective/coefficients.csv",
                "effective/slip.csv",
                "effective/summary.csv",
                "effective/ueff_field.csv",
            ],
            Stage::Darcy => &["darcy/flux.csv", "darcy/pressure_field.csv"],
            Stage::Dns => &["dns/errors.csv", "dns/rates.csv"],
        }
    }
}

#[derive(Clone, Debug)]
pub struct StageReport {
    pub stage: Stage,
    pub cached: bool,
    pub seconds: f64,
}

/// Name of the file left in the artifact directory when a stage fails.
pub const FAILURE_FILE: &str = "FAILED";

#[derive(Debug)]
pub struct Workbench {
    pub config: WorkbenchConfig,
    pub out: PathBuf,
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

impl Workbench {
    pub fn new(config: WorkbenchConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        Ok(Workbench {
            config,
            out: out.into(),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn fields(&self, stage: Stage) -> String {
        let c = &self.config;
        let d = &c.discretization;
        match stage {
            Stage::Transform => format!("{:?} {:?} {:?}", c.curve, c.domain.length, c.tolerances.identities),
            Stage::Cell => format!(
                "{:?} {:?} {:?} {:?} {:?}",
                c.curve, c.domain.length, c.inclusion, d.h_cell, c.sampling
            ),
            Stage::FreeFlow => format!(
                "{:?} {:?} {:?} {:?} {:?} {:?}",
                c.curve, c.domain.length, c.domain.h_free, c.force, d.h_macro, c.sampling
            ),
            Stage::BoundaryLayer => format!(
                "{:?} {:?} {:?} {:?} {:?}",
                c.curve, c.inclusion, c.strip, d.h_strip, c.tolerances.truncation
            ),
            Stage::Effective => format!(
                "{:?} {:?} {:?} {:?} {:?}",
                c.domain, c.force, d.h_macro, c.sweep, c.tolerances
            ),
            Stage::Darcy => String::new(),
            Stage::Dns => format!(
                "{:?} {:?} {:?} {:?} {:?}",
                c.domain, c.force, c.inclusion, d, c.sweep
            ),
        }
    }

    /// Cache key of a stage.
    pub fn key(&self, stage: Stage) -> String {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION"));
        h.update(stage.name());
        h.update(self.fields(stage));
        for &up in stage.upstream() {
            h.update(self.key(up));
        }
        hex::encode(h.finalize())
    }

    fn record_path(&self, stage: Stage) -> PathBuf {
        self.out.join(".cache").join(format!("{}.key", stage.name()))
    }

    fn record(&self, stage: Stage) -> Result<String> {
        let mut s = format!("{}\n", self.key(stage));
        for rel in stage.outputs() {
            s.push_str(&format!("{} {rel}\n", file_hash(&self.path(rel))?));
        }
        Ok(s)
    }

    /// True when the stored record matches the current key and outputs.
    pub fn is_cached(&self, stage: Stage) -> bool {
        let Ok(stored) = std::fs::read_to_string(self.record_path(stage)) else {
            return false;
        };
        matches!(self.record(stage), Ok(r) if r == stored)
    }

    /// Runs every stage up to and including `last`, reusing cached ones.
    pub fn run_through(&self, last: Stage) -> Result<Vec<StageReport>> {
        std::fs::create_dir_all(self.out.join(".cache"))?;
        let failed = self.out.join(FAILURE_FILE);
        if failed.exists() {
            std::fs::remove_file(&failed)?;
        }
        let mut reports = Vec::new();
        for stage in Stage::ALL.into_iter().filter(|&s| s <= last) {
            let start = Instant::now();
            let cached = self.is_cached(stage);
            if cached {
                info!("{}: cached", stage.name());
            } else {
                info!("{}: running", stage.name());
                let _ = std::fs::remove_file(self.record_path(stage));
                if let Err(e) = self.compute(stage) {
                    let e = e.in_stage(stage.name());
                    std::fs::write(&failed, format!("{}\n{e}\n", stage.name()))?;
                    return Err(e);
                }
                std::fs::write(self.record_path(stage), self.record(stage)?)?;
            }
            let seconds = start.elapsed().as_secs_f64();
            info!("{}: done in {seconds:.2} s", stage.name());
            reports.push(StageReport {
                stage,
                cached,
                seconds,
            });
        }
        Ok(reports)
    }

    pub fn run_pipeline(&self) -> Result<Vec<StageReport>> {
        self.run_through(Stage::Dns)
    }

    fn compute(&self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Transform => self.transform_stage(),
            Stage::Cell => self.cell_stage(),
            Stage::FreeFlow => self.free_flow_stage(),
            Stage::BoundaryLayer => self.boundary_layer_stage(),
            Stage::Effective => self.effective_stage(),
            Stage::Darcy => self.darcy_stage(),
            Stage::Dns => self.dns_stage(),
        }
    }

    #[cfg(test)]
    fn run_stage_for_test(&self, stage: Stage) -> Result<()> {
        self.compute(stage)
    }

    fn missing(&self, stage: Stage) -> Error {
        Error::MissingArtifact {
            stage: stage.name().into(),
            expected: stage.outputs().iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Reads an upstream output, reporting a missing stage by name.
    fn read(&self, stage: Stage, rel: &str) -> Result<Table> {
        let p = self.path(rel);
        if !p.exists() {
            return Err(self.missing(stage));
        }
        Table::read(&p)
    }
}

#[cfg(test)]
mod tests;
