//! Run configuration: JSON file, then command-line overrides.
//!
//! A config file is either plain JSON or any CSV this tool wrote, whose first
//! line is `# config: {...}`.

use std::fs;
use std::path::Path;

use nvrepeater::chain::{ChainConfig, WaitPolicy};
use nvrepeater::ecc::CodeSpec;
use nvrepeater::levels::NvParams;
use nvrepeater::link::PhysicalParams;
use nvrepeater::mc::SimConfig;
use nvrepeater::multiplex::MultiplexConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const HEADER_PREFIX: &str = "# config: ";

/// Node-count range scanned by sweeps and figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepRange {
    pub n_min: u32,
    pub n_max: u32,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self {
            n_min: 1,
            n_max: 100,
        }
    }
}

/// Grid for the error-correction comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EccGrid {
    pub l_tot_km: f64,
    /// Link count of the uncoded reference chain.
    pub n_ref: u32,
    pub n_max: u32,
    pub r_max: u32,
    pub distances: Vec<u32>,
}

impl Default for EccGrid {
    fn default() -> Self {
        Self {
            l_tot_km: 2000.0,
            n_ref: 10,
            n_max: 200,
            r_max: 200,
            distances: vec![3, 5, 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub physical: PhysicalParams,
    pub nv: NvParams,
    /// Axial magnetic field for the level calculator, mT.
    pub field_mt: f64,
    pub chain: ChainConfig,
    pub wait_policy: WaitPolicy,
    pub sweep: SweepRange,
    pub multiplex: Option<MultiplexConfig>,
    pub code: Option<CodeSpec>,
    pub ecc: EccGrid,
    pub sim: Option<SimConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            physical: PhysicalParams::default(),
            nv: NvParams::default(),
            field_mt: 20.0,
            chain: ChainConfig::default(),
            wait_policy: WaitPolicy::UntilLastLink,
            sweep: SweepRange::default(),
            multiplex: None,
            code: None,
            ecc: EccGrid::default(),
            sim: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("`{path}`: {inner}"))
            }
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "`schema_version`: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads a JSON file or the embedded header of a CSV written by this tool.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        match text.lines().find_map(|l| l.strip_prefix(HEADER_PREFIX)) {
            Some(json) if text.starts_with('#') => Self::from_json(json),
            _ => Self::from_json(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.nv.validate()?;
        self.chain.validate()?;
        if !self.field_mt.is_finite() {
            return Err(CliError::Config("`field_mt`: must be finite".into()));
        }
        if self.sweep.n_min < 1 || self.sweep.n_min > self.sweep.n_max {
            return Err(CliError::Config(format!(
                "`sweep`: need 1 ≤ n_min ≤ n_max, got {}..{}",
                self.sweep.n_min, self.sweep.n_max
            )));
        }
        if let Some(m) = &self.multiplex {
            m.validate()?;
        }
        if let Some(c) = &self.code {
            c.validate()?;
        }
        if let Some(s) = &self.sim {
            s.validate()?;
        }
        if self.ecc.n_ref < 1 || self.ecc.n_max < 1 || self.ecc.r_max < 1 {
            return Err(CliError::Config(
                "`ecc`: link counts must be at least 1".into(),
            ));
        }
        if !(self.ecc.l_tot_km > 0.0) {
            return Err(CliError::Config("`ecc.l_tot_km`: must be positive".into()));
        }
        Ok(())
    }

    /// Compact JSON used in output headers.
    pub fn to_header(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sim_mut(&mut self) -> &mut SimConfig {
        self.sim.get_or_insert_with(SimConfig::default)
    }

    pub fn multiplex_mut(&mut self) -> &mut MultiplexConfig {
        self.multiplex.get_or_insert_with(MultiplexConfig::default)
    }
}
