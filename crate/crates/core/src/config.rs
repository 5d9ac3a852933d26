//! Run configuration: one JSON file, optionally patched by `key=value`
//! overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::abstraction::{BuildOptions, ChoiceGranularity, DEFAULT_MAX_STATES};
use crate::environment::{Environment, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::faults::{FaultConfig, FaultModel};
use crate::geometry::HyperBox;
use crate::network::{BoundMethod, Network};
use crate::refinement::DEFAULT_MAX_ROUNDS;

// default precision is this fraction of the widest initial dimension
const DEFAULT_EPS_DIVISOR: f64 = 64.0;

fn default_faults() -> FaultConfig {
    FaultConfig::Sticky { p: 0.2 }
}

fn default_horizon() -> usize {
    7
}

fn default_p_safe() -> f64 {
    0.2
}

fn default_rounds() -> usize {
    DEFAULT_MAX_ROUNDS
}

fn default_max_states() -> usize {
    DEFAULT_MAX_STATES
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentSpec,
    /// Policy network file, relative to the configuration file.
    pub network: PathBuf,
    #[serde(default = "default_faults")]
    pub faults: FaultConfig,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_p_safe")]
    pub p_safe: f64,
    /// Initial grid cell widths; one cell per dimension when absent.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "default_rounds")]
    pub refinement_rounds: usize,
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    /// Output directory, relative to the configuration file.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub bound_method: BoundMethod,
    #[serde(default)]
    pub choice_mode: ChoiceGranularity,
    #[serde(default = "default_true")]
    pub action_cache: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str, base: &Path, overrides: &[String]) -> Result<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.network = base.join(&cfg.network);
        cfg.output_dir = base.join(&cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::from_json(&text, base, overrides)
    }

    fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.faults.build(self.environment.num_actions())?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_safe) {
            return Err(Error::Config(format!(
                "p_safe {} outside [0, 1]",
                self.p_safe
            )));
        }
        let eps = self.epsilon();
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::BadPrecision(eps));
        }
        if self.max_states == 0 {
            return Err(Error::Config("max_states must be positive".into()));
        }
        if let Some(g) = &self.grid {
            if g.len() != self.environment.state_dim() {
                return Err(Error::dims(self.environment.state_dim(), g.len()));
            }
        }
        Ok(())
    }

    pub fn init_region(&self) -> &HyperBox {
        self.environment.init_region()
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
            .unwrap_or_else(|| self.init_region().max_width() / DEFAULT_EPS_DIVISOR)
    }

    pub fn grid_widths(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| {
            self.init_region()
                .widths()
                .into_iter()
                .map(|w| if w > 0.0 { w } else { 1.0 })
                .collect()
        })
    }

    pub fn fault_model(&self) -> Result<FaultModel> {
        self.faults.build(self.environment.num_actions())
    }

    pub fn load_network(&self) -> Result<Network> {
        let net = Network::load(&self.network).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!(
                "cannot read network {}: {io}",
                self.network.display()
            )),
            other => other,
        })?;
        self.environment.check_dim(net.input_dim())?;
        if net.output_dim() != self.environment.num_actions() {
            return Err(Error::ShapeMismatch(format!(
                "network has {} outputs, {} has {} actions",
                net.output_dim(),
                self.environment.name(),
                self.environment.num_actions()
            )));
        }
        Ok(net)
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            epsilon: self.epsilon(),
            method: self.bound_method,
            granularity: self.choice_mode,
            max_states: self.max_states,
            use_cache: self.action_cache,
        }
    }
}

/// Sets a dotted key path to a JSON value; values that do not parse as
/// JSON are taken as strings.
fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path {key:?} crosses a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(Error::Config(format!("empty override key in {spec:?}")))
}
