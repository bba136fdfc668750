//! TOML configuration with `[tracker]`, `[simulation]` and `[experiment]`
//! tables, all optional.
//!
//! ```toml
//! [tracker]
//! method = "tri"            # or "bmcf"
//! delta = 1
//! sigma_mode = "per-frame"  # "pooled", "fixed:<v>"
//! sigma_floor = 1e-6
//! default_sigma = 1.0
//! lambda_event = "auto"     # or a number <= 0
//! gate_quantile = 0.99
//! # gate_cost = 400.0       # fixed gate; "disabled" turns gating off
//! space_cap = 1000000
//! incremental = true
//! dt = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::{BipartiteConfig, Gate};
use crate::error::{Error, Result};
use crate::experiment::ExperimentGrid;
use crate::simulator::SimConfig;
use crate::tripartite::{
    DpOptions, LambdaEvent, Method, ReducedSpaceConfig, SigmaMode, TrackerConfig, DEFAULT_SIGMA_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateCost {
    Value(f64),
    Keyword(GateKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKeyword {
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerSection {
    pub method: Method,
    pub delta: usize,
    pub sigma_mode: SigmaMode,
    pub sigma_floor: f64,
    pub default_sigma: f64,
    pub lambda_event: LambdaEvent,
    pub gate_quantile: f64,
    pub gate_cost: Option<GateCost>,
    pub space_cap: usize,
    pub incremental: bool,
    pub dt: f64,
}

impl Default for TrackerSection {
    fn default() -> Self {
        Self {
            method: Method::Tri,
            delta: 1,
            sigma_mode: SigmaMode::PerFrame,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            default_sigma: 1.0,
            lambda_event: LambdaEvent::Auto,
            gate_quantile: 0.99,
            gate_cost: None,
            space_cap: 1_000_000,
            incremental: true,
            dt: 1.0,
        }
    }
}

impl TrackerSection {
    pub fn tracker_config(&self) -> Result<TrackerConfig> {
        let gate = match self.gate_cost {
            None => Gate::Quantile { q: self.gate_quantile },
            Some(GateCost::Value(cost)) => Gate::Fixed { cost },
            Some(GateCost::Keyword(GateKeyword::Disabled)) => Gate::Disabled,
        };
        if let LambdaEvent::Value(v) = self.lambda_event {
            if v > 0.0 {
                return Err(Error::config(format!("lambda_event must be <= 0, got {v}")));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        let cfg = TrackerConfig {
            method: self.method,
            space: ReducedSpaceConfig { delta: self.delta },
            bipartite: BipartiteConfig { gate },
            sigma_mode: self.sigma_mode,
            sigma_floor: self.sigma_floor,
            default_sigma: self.default_sigma,
            lambda_event: self.lambda_event,
            space_cap: self.space_cap,
            dp: DpOptions {
                incremental: self.incremental,
                parallel: true,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tracker: TrackerSection,
    pub simulation: SimConfig,
    pub experiment: ExperimentGrid,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        let t = c.tracker.tracker_config().unwrap();
        assert_eq!(t.bipartite.gate, Gate::Quantile { q: 0.99 });
        assert_eq!(t.space.delta, 1);
    }

    #[test]
    fn tracker_keys() {
        let c = Config::from_toml(
            r#"
            [tracker]
            method = "bmcf"
            delta = 3
            sigma_mode = "fixed:2"
            lambda_event = -20.0
            gate_cost = "disabled"
            incremental = false
            "#,
        )
        .unwrap();
        let t = c.tracker.tracker_config().unwrap();
        assert_eq!(t.method, Method::Bmcf);
        assert_eq!(t.space.delta, 3);
        assert_eq!(t.sigma_mode, SigmaMode::Fixed(2.0));
        assert_eq!(t.lambda_event, LambdaEvent::Value(-20.0));
        assert_eq!(t.bipartite.gate, Gate::Disabled);
        assert!(!t.dp.incremental);
        let c = Config::from_toml("[tracker]\ngate_cost = 250.0\n").unwrap();
        assert_eq!(c.tracker.tracker_config().unwrap().bipartite.gate, Gate::Fixed { cost: 250.0 });
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(matches!(Config::from_toml("[tracker]\ndelta = -1\n"), Err(Error::InvalidConfig(_))));
        assert!(matches!(Config::from_toml("[tracker]\nsigma_mode = \"x\"\n"), Err(Error::InvalidConfig(_))));
        assert!(matches!(Config::from_toml("[tracker]\nunknown = 1\n"), Err(Error::InvalidConfig(_))));
        let c = Config::from_toml("[tracker]\ngate_quantile = 1.5\n").unwrap();
        assert!(matches!(c.tracker.tracker_config(), Err(Error::InvalidConfig(_))));
        let c = Config::from_toml("[tracker]\nlambda_event = 3.0\n").unwrap();
        assert!(c.tracker.tracker_config().is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = Config::default();
        c.tracker.gate_cost = Some(GateCost::Value(12.5));
        c.simulation.seed = 77;
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }
}
