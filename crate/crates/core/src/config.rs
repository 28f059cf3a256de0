//! Top-level configuration and its TOML form.
//!
//! Scenario keys live at the top level; every other module has its own
//! table:
//!
//! ```toml
//! n_agents = 10
//! arena_size = [300.0, 300.0]
//!
//! [radar]
//! wavelength = 2e-3
//!
//! [env]
//! p_max_dbm = 10.0
//! ```
//!
//! Unknown keys are rejected. Omitted keys take their defaults.

use std::f64::consts::PI;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::channel::ChannelConfig;
use crate::diffusion::DiffusionConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricsConfig;
use crate::radar::RadarConfig;
use crate::rl::DdpgHyper;
use crate::scenario::ScenarioConfig;
use crate::scheduler::SchedulerConfig;
use crate::semantics::HeatmapConfig;

/// Section names, in serialisation order.
pub const SECTIONS: [&str; 8] = ["radar", "channel", "semantics", "metrics", "scheduler", "ddpg", "env", "diffusion"];

/// Radar phase noise must stay this many standard deviations inside the
/// unambiguous interval at the widest bearing the arena allows.
pub const PHASE_MARGIN_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub radar: RadarConfig,
    pub channel: ChannelConfig,
    pub semantics: HeatmapConfig,
    pub metrics: MetricsConfig,
    pub scheduler: SchedulerConfig,
    pub ddpg: DdpgHyper,
    pub env: EnvConfig,
    pub diffusion: DiffusionConfig,
}

fn section<T: DeserializeOwned + Default>(table: &mut Table, name: &str) -> Result<T> {
    match table.remove(name) {
        None => Ok(T::default()),
        Some(Value::Table(t)) => t
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(format!("[{name}]: {}", e.message()))),
        Some(_) => Err(Error::config(name, "must be a table")),
    }
}

fn to_table<T: Serialize>(value: &T) -> Table {
    Table::try_from(value).expect("config structs serialise to TOML tables")
}

impl Config {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(mut table: Table) -> Result<Self> {
        let radar = section(&mut table, "radar")?;
        let channel = section(&mut table, "channel")?;
        let semantics = section(&mut table, "semantics")?;
        let metrics = section(&mut table, "metrics")?;
        let scheduler = section(&mut table, "scheduler")?;
        let ddpg = section(&mut table, "ddpg")?;
        let env = section(&mut table, "env")?;
        let diffusion = section(&mut table, "diffusion")?;
        let scenario = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.message().to_string()))?;
        let cfg = Self {
            scenario,
            radar,
            channel,
            semantics,
            metrics,
            scheduler,
            ddpg,
            env,
            diffusion,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_table(&self) -> Table {
        let mut t = to_table(&self.scenario);
        let sections = [
            to_table(&self.radar),
            to_table(&self.channel),
            to_table(&self.semantics),
            to_table(&self.metrics),
            to_table(&self.scheduler),
            to_table(&self.ddpg),
            to_table(&self.env),
            to_table(&self.diffusion),
        ];
        for (name, s) in SECTIONS.iter().zip(sections) {
            t.insert((*name).to_string(), Value::Table(s));
        }
        t
    }

    /// Fully resolved TOML, defaults included.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables serialise")
    }

    /// SHA-256 of the resolved TOML, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Returns a copy with one dotted key replaced, e.g. `env.p_max_dbm` or
    /// `n_agents`. The value uses TOML syntax; bare words are read as strings.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let parsed: Value = match format!("v = {value}").parse::<Table>() {
            Ok(mut t) => t.remove("v").expect("key present"),
            Err(_) => Value::String(value.to_string()),
        };
        let mut table = self.to_table();
        let parts: Vec<&str> = key.split('.').collect();
        let (last, path) = parts.split_last().expect("split yields one part");
        let mut cursor = &mut table;
        for p in path {
            cursor = match cursor.get_mut(*p) {
                Some(Value::Table(t)) => t,
                _ => return Err(Error::config(key, "no such table")),
            };
        }
        // keep floats floats when the user writes `10`
        let value = match (cursor.get(*last), parsed) {
            (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
            (_, v) => v,
        };
        // unset optional keys are absent from the table; unknown ones fail on re-parse
        cursor.insert((*last).to_string(), value);
        Self::from_table(table).map_err(|e| match e {
            Error::ConfigParse(_) => Error::config(key, "no such key"),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.radar.validate()?;
        self.channel.validate()?;
        self.semantics.validate()?;
        self.semantics.validate_arena(self.scenario.arena_size)?;
        self.metrics.validate()?;
        self.scheduler.validate(self.scenario.n_agents)?;
        self.ddpg.validate()?;
        self.env.validate()?;
        self.diffusion.schedule()?;
        self.check_phase_margin()
    }

    /// Largest `|sin ψ|` over the arena as seen from the UAV.
    pub fn max_bearing_sine(&self) -> f64 {
        let s = &self.scenario;
        let [ux, uy] = s.uav_ground_position;
        let dx = (0.0 - ux).max(1e-9);
        let dy = (uy - 0.0).abs().max((s.arena_size[1] - uy).abs());
        dy / dx.hypot(dy)
    }

    fn check_phase_margin(&self) -> Result<()> {
        let r = &self.radar;
        let limit = PI * 2.0 * r.element_spacing / r.wavelength;
        let widest = limit * self.max_bearing_sine();
        if widest + PHASE_MARGIN_SIGMAS * r.phase_noise_rad > limit {
            return Err(Error::config(
                "radar.phase_noise_rad",
                format!(
                    "phase {widest:.4} rad at the widest bearing plus {PHASE_MARGIN_SIGMAS}σ noise exceeds the unambiguous limit {limit:.4} rad"
                ),
            ));
        }
        Ok(())
    }
}
