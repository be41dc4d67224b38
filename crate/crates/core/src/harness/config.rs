//! Experiment config files.
//!
//! A config is a TOML document carrying a `schema` string, a `[system]`
//! table and an optional `[sweep]` table:
//!
//! ```toml
//! schema = "cran-dimred/sweep-v1"
//!
//! [system]
//! users = 8
//! receivers = 4
//! antennas = 8
//! dimension = 2
//! snr_db = 15.0
//! fronthaul_rate = 10.0
//! # pilot_snr_db = 30.0      # omit for perfect CSI
//! seed = 1
//!
//! [sweep]
//! variable = "fronthaul_rate"  # fronthaul_rate | snr_db | dimension | pilot_snr_db
//! values = [2.0, 4.0, 6.0]
//! trials = 500
//! n_candidates = [1, 2, 3, 4]
//! outputs = ["sum_capacity", "user_capacity", "mi_proportion", "cutset", "baseline"]
//! ```
//!
//! Every `[system]` key is optional and falls back to
//! [`SystemConfig::default`]. SNR values are given in dB in the file; [`SystemConfig`] stores them
//! linear.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{db_to_linear, PilotSnr, SystemConfig};

pub const SCHEMA: &str = "cran-dimred/sweep-v1";

pub const DEFAULT_TRIALS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    FronthaulRate,
    SnrDb,
    Dimension,
    PilotSnrDb,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::FronthaulRate => "fronthaul_rate",
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Dimension => "dimension",
            SweepVariable::PilotSnrDb => "pilot_snr_db",
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        match self {
            SweepVariable::FronthaulRate => cfg.fronthaul_rate = value,
            SweepVariable::SnrDb => cfg.rho = db_to_linear(value),
            SweepVariable::Dimension => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Config(format!("dimension {value} is not a positive integer")));
                }
                cfg.dimension = value as usize;
            }
            SweepVariable::PilotSnrDb => cfg.pilot_snr = PilotSnr::from_db(value),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    SumCapacity,
    UserCapacity,
    MiProportion,
    Cutset,
    Baseline,
}

impl Output {
    pub const ALL: [Output; 5] = [
        Output::SumCapacity,
        Output::UserCapacity,
        Output::MiProportion,
        Output::Cutset,
        Output::Baseline,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    pub outputs: Vec<Output>,
    /// Reduced dimensions evaluated at every point; the best one is reported
    /// as the `best_n` scheme.
    pub n_candidates: Vec<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep values must not be empty".into()));
        }
        let t = self.base.full_dimension();
        if self.variable != SweepVariable::Dimension
            && (self.n_candidates.is_empty() || self.n_candidates.iter().any(|&n| n == 0 || n > t))
        {
            return Err(Error::Config(format!("n_candidates must lie in [1, {t}]")));
        }
        for &v in &self.values {
            self.variable.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemTable {
    #[serde(default = "defaults::users")]
    users: usize,
    #[serde(default = "defaults::receivers")]
    receivers: usize,
    #[serde(default = "defaults::antennas")]
    antennas: usize,
    #[serde(default = "defaults::dimension")]
    dimension: usize,
    #[serde(default = "defaults::snr_db")]
    snr_db: f64,
    #[serde(default = "defaults::fronthaul_rate")]
    fronthaul_rate: f64,
    #[serde(default)]
    pilot_snr_db: Option<f64>,
    #[serde(default = "defaults::area")]
    area_side_m: f64,
    #[serde(default = "defaults::user_height")]
    user_height_m: f64,
    #[serde(default = "defaults::rx_height")]
    rx_height_m: f64,
    #[serde(default = "defaults::exponent")]
    pathloss_exponent: f64,
    #[serde(default = "defaults::shadow")]
    shadow_sigma_db: f64,
    #[serde(default)]
    lloyd_max: bool,
    #[serde(default = "defaults::seed")]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    variable: SweepVariable,
    values: Vec<f64>,
    #[serde(default = "defaults::trials")]
    trials: usize,
    #[serde(default)]
    n_candidates: Option<Vec<usize>>,
    #[serde(default)]
    outputs: Option<Vec<Output>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: String,
    system: SystemTable,
    sweep: Option<SweepTable>,
}

mod defaults {
    pub fn users() -> usize {
        8
    }
    pub fn receivers() -> usize {
        4
    }
    pub fn antennas() -> usize {
        8
    }
    pub fn dimension() -> usize {
        2
    }
    pub fn snr_db() -> f64 {
        15.0
    }
    pub fn fronthaul_rate() -> f64 {
        10.0
    }
    pub fn area() -> f64 {
        200.0
    }
    pub fn user_height() -> f64 {
        1.0
    }
    pub fn rx_height() -> f64 {
        6.0
    }
    pub fn exponent() -> f64 {
        2.9
    }
    pub fn shadow() -> f64 {
        5.7
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn trials() -> usize {
        super::DEFAULT_TRIALS
    }
}

impl From<SystemTable> for SystemConfig {
    fn from(t: SystemTable) -> Self {
        SystemConfig {
            users: t.users,
            receivers: t.receivers,
            antennas: t.antennas,
            dimension: t.dimension,
            rho: db_to_linear(t.snr_db),
            fronthaul_rate: t.fronthaul_rate,
            pilot_snr: t.pilot_snr_db.map_or(PilotSnr::Perfect, PilotSnr::from_db),
            area_side_m: t.area_side_m,
            user_height_m: t.user_height_m,
            rx_height_m: t.rx_height_m,
            pathloss_exponent: t.pathloss_exponent,
            shadow_sigma_db: t.shadow_sigma_db,
            lloyd_max: t.lloyd_max,
            rng_seed: t.seed,
        }
    }
}

/// A parsed config: the base system and, when present, the sweep to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub system: SystemConfig,
    pub sweep: Option<SweepSpec>,
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sweep {} over {} values, {} trials, seed {}",
            self.variable.name(),
            self.values.len(),
            self.trials,
            self.base.rng_seed
        )
    }
}

pub fn parse_config(text: &str) -> Result<Experiment> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.schema != SCHEMA {
        return Err(Error::Config(format!(
            "unsupported schema {:?}, expected {SCHEMA:?}",
            file.schema
        )));
    }
    let system: SystemConfig = file.system.into();
    system.validate()?;
    let sweep = file
        .sweep
        .map(|s| {
            let spec = SweepSpec {
                n_candidates: s
                    .n_candidates
                    .unwrap_or_else(|| (1..=system.full_dimension()).collect()),
                outputs: s.outputs.unwrap_or_else(|| Output::ALL.to_vec()),
                base: system.clone(),
                variable: s.variable,
                values: s.values,
                trials: s.trials,
            };
            spec.validate().map(|_| spec)
        })
        .transpose()?;
    Ok(Experiment { system, sweep })
}

pub fn load_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
