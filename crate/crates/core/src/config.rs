//! Run configuration for the command-line driver: one JSON document with the
//! shared engine setup and an optional section per command.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bohmengine::{EngineSettings, GuidingFlow, Potential};
use crate::error::{Error, Result};
use crate::experiments::{ErgodicityConfig, ForkConfig, FreeChoiceConfig, GridSpec, StateSpec};
use crate::hapgeometry::HapEvent;

/// Version of the configuration and result layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub engine: EngineSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    /// Events file for `classify` and `causal-graph`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[HapEvent; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<HapEvent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fork: Option<ForkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_choice: Option<FreeChoiceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_change: Option<FrameChangeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ergodicity: Option<ErgodicityConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub duration: f64,
    /// Snapshots written, evenly spaced over the duration including both ends.
    pub snapshots: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            duration: 1.0,
            snapshots: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub samples: usize,
    pub duration: f64,
    /// Keep every `every`-th solver step in the CSV (the last step is always
    /// kept).
    pub every: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            samples: 100,
            duration: 1.0,
            every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumConfig {
    pub samples: usize,
    pub duration: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            samples: 10_000,
            duration: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub v_values: Vec<f64>,
    pub delta_values: Vec<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            v_values: (0..=8).map(|k| k as f64 / 10.0).collect(),
            delta_values: vec![0.2, 0.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameChangeConfig {
    /// Observer velocity relative to the reference frame.
    pub v: Vec<f64>,
    pub event: HapEvent,
    /// Second potential whose flow is compared with the main one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_potential: Option<Potential>,
}

/// Parses a configuration, naming the offending key on failure.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        let key = |name: &str| {
            if path == "." || path.is_empty() {
                name.to_string()
            } else {
                format!("{path}.{name}")
            }
        };
        let named = |prefix: &str| {
            msg.strip_prefix(prefix)
                .and_then(|rest| rest.split('`').next())
                .map(key)
        };
        if let Some(k) = named("missing field `") {
            Error::Config(format!("missing required key `{k}`"))
        } else if let Some(k) = named("unknown field `") {
            Error::Config(format!("unknown key `{k}`: {msg}"))
        } else {
            Error::Config(format!("invalid value at `{path}`: {msg}"))
        }
    })
}

impl RunConfig {
    pub fn grid(&self) -> Result<&GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing required key `grid.points`".into()))
    }

    pub fn state(&self) -> Result<&StateSpec> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Config("missing required key `state`".into()))
    }

    pub fn potential(&self) -> Potential {
        self.potential.clone().unwrap_or(Potential::Free)
    }

    /// Flow of the configured state under the configured potential.
    pub fn flow(&self) -> Result<GuidingFlow> {
        let state = self.state()?;
        let grid = self.grid()?.build(state.ndim()?)?;
        self.engine.validate()?;
        GuidingFlow::new(state.build(&grid)?, self.potential(), self.engine.clone())
    }
}
