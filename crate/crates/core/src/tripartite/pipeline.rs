//! End-to-end tracking: bipartite baseline, sigma estimate, reduced spaces,
//! chain solver, trajectories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::{nearest_neighbor_sq_distances, quantile, solve_bmcf, BipartiteConfig, Gate};
use crate::candidates::CandidateSpace;
use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::matching::MatchingVector;
use crate::trajectory::{assemble_trajectories, TrajectorySet};

use super::dp::{solve_dp_with, DpOptions, EvalStats};
use super::likelihood::{position_log_density, NoiseModel, DEFAULT_SIGMA_FLOOR};
use super::sigma::{estimate_sigma, SigmaEstimate, SigmaMode};
use super::space::{build_reduced_space_around, ReducedSpaceConfig};

/// Quantile of nearest-neighbour distances used for the event penalty when
/// the bipartite gate is disabled.
const AUTO_LAMBDA_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Bipartite matching of each pair on its own.
    Bmcf,
    /// Chain likelihood over reduced spaces.
    Tri,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bmcf" | "bipartite" => Ok(Method::Bmcf),
            "tri" | "tripartite" => Ok(Method::Tri),
            other => Err(Error::config(format!("unknown method '{other}' (expected bmcf or tri)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bmcf => "bmcf",
            Method::Tri => "tri",
        })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Log-penalty per appearance and per departure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LambdaRepr", into = "LambdaRepr")]
pub enum LambdaEvent {
    /// Position-model log-density at the gate distance.
    Auto,
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LambdaRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<LambdaRepr> for LambdaEvent {
    type Error = Error;
    fn try_from(r: LambdaRepr) -> Result<Self> {
        match r {
            LambdaRepr::Number(v) if v.is_finite() => Ok(LambdaEvent::Value(v)),
            LambdaRepr::Number(v) => Err(Error::config(format!("lambda_event must be finite, got {v}"))),
            LambdaRepr::Text(s) if s.trim() == "auto" => Ok(LambdaEvent::Auto),
            LambdaRepr::Text(s) => s
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(LambdaEvent::Value)
                .ok_or_else(|| Error::config(format!("lambda_event must be \"auto\" or a number, got '{s}'"))),
        }
    }
}

impl From<LambdaEvent> for LambdaRepr {
    fn from(l: LambdaEvent) -> Self {
        match l {
            LambdaEvent::Auto => LambdaRepr::Text("auto".into()),
            LambdaEvent::Value(v) => LambdaRepr::Number(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub method: Method,
    pub space: ReducedSpaceConfig,
    pub bipartite: BipartiteConfig,
    pub sigma_mode: SigmaMode,
    pub sigma_floor: f64,
    /// Used when no object is linked through three frames.
    pub default_sigma: f64,
    pub lambda_event: LambdaEvent,
    /// Largest candidate space accepted for one frame pair.
    pub space_cap: usize,
    pub dp: DpOptions,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            method: Method::Tri,
            space: ReducedSpaceConfig::default(),
            bipartite: BipartiteConfig::default(),
            sigma_mode: SigmaMode::PerFrame,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            default_sigma: 1.0,
            lambda_event: LambdaEvent::Auto,
            space_cap: 1_000_000,
            dp: DpOptions::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.bipartite.validate()?;
        if !(self.sigma_floor.is_finite() && self.sigma_floor > 0.0) {
            return Err(Error::config(format!("sigma_floor must be positive, got {}", self.sigma_floor)));
        }
        if !(self.default_sigma.is_finite() && self.default_sigma > 0.0) {
            return Err(Error::config(format!("default_sigma must be positive, got {}", self.default_sigma)));
        }
        Ok(())
    }
}

/// Everything shared by runs with different methods or deltas on one
/// sequence.
#[derive(Debug, Clone)]
pub struct Baseline {
    /// Gate cost actually used, `None` when gating is disabled.
    pub gate_cost: Option<f64>,
    pub bmcf: Vec<MatchingVector>,
    pub sigma: SigmaEstimate,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub method: Method,
    pub delta: Option<usize>,
    pub gate_cost: Option<f64>,
    pub lambda_event: f64,
    pub sigma_pooled: f64,
    pub sigmas: Vec<f64>,
    pub sigma_fallback: bool,
    pub d_star: Vec<usize>,
    pub space_sizes: Vec<usize>,
    pub evaluations: EvalStats,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub trajectories: TrajectorySet,
    pub matchings: Vec<MatchingVector>,
    /// Candidate space of every pair; singletons for the bipartite method.
    pub spaces: Vec<CandidateSpace>,
    pub diagnostics: Diagnostics,
}

/// Bipartite matching of every pair, the sigma estimate from those links and
/// the resulting noise model.
pub fn prepare(seq: &FrameSequence, cfg: &TrackerConfig) -> Result<Baseline> {
    seq.require_matchable()?;
    cfg.validate()?;
    let resolved = cfg.bipartite.resolve(seq)?;
    let gate_cost = match resolved.gate {
        Gate::Fixed { cost } if cost.is_finite() => Some(cost),
        _ => None,
    };
    let bmcf = seq
        .frames()
        .windows(2)
        .map(|w| solve_bmcf(&w[0], &w[1], &resolved))
        .collect::<Result<Vec<_>>>()?;
    let sigma = estimate_sigma(seq, &bmcf, cfg.sigma_mode, cfg.sigma_floor, cfg.default_sigma)?;
    let lambda = match cfg.lambda_event {
        LambdaEvent::Value(v) => v,
        LambdaEvent::Auto => {
            let t = gate_cost.unwrap_or_else(|| {
                let d = nearest_neighbor_sq_distances(seq.frames().windows(2).map(|w| (&w[0][..], &w[1][..])));
                quantile(&d, AUTO_LAMBDA_QUANTILE).unwrap_or(0.0)
            });
            position_log_density(t, sigma.pooled, seq.dt())
        }
    };
    let noise = NoiseModel::new(sigma.sigmas.clone(), lambda, cfg.sigma_floor)?;
    Ok(Baseline {
        gate_cost,
        bmcf,
        sigma,
        noise,
    })
}

/// Runs the method of `cfg` from a prepared baseline. Only the method, the
/// space and the solver settings of `cfg` are used here.
pub fn track_with(seq: &FrameSequence, base: &Baseline, cfg: &TrackerConfig) -> Result<TrackOutput> {
    let (method, delta) = (cfg.method, cfg.space.delta);
    let d_star: Vec<usize> = base.bmcf.iter().map(MatchingVector::disappeared).collect();
    let (matchings, spaces, evaluations, delta) = match method {
        Method::Bmcf => {
            let spaces = base
                .bmcf
                .iter()
                .enumerate()
                .map(|(k, m)| CandidateSpace::new(seq.frame(k).len(), seq.frame(k + 1).len(), vec![m.clone()]))
                .collect::<Result<Vec<_>>>()?;
            (base.bmcf.clone(), spaces, EvalStats::default(), None)
        }
        Method::Tri => {
            let space_cfg = ReducedSpaceConfig { delta };
            let spaces = base
                .bmcf
                .iter()
                .enumerate()
                .map(|(k, m)| build_reduced_space_around(seq.frame(k), seq.frame(k + 1), m, &space_cfg))
                .collect::<Result<Vec<_>>>()?;
            if let Some(big) = spaces.iter().find(|s| s.len() > cfg.space_cap) {
                return Err(Error::TooLarge {
                    size: big.len() as u128,
                    cap: cfg.space_cap as u128,
                });
            }
            let sol = solve_dp_with(seq, &spaces, &base.noise, cfg.dp)?;
            (sol.matchings, spaces, sol.stats, Some(delta))
        }
    };
    let score = super::likelihood::chain_log_likelihood(seq, &matchings, &base.noise)?;
    let trajectories = assemble_trajectories(seq, &matchings)?;
    let diagnostics = Diagnostics {
        method,
        delta,
        gate_cost: base.gate_cost,
        lambda_event: base.noise.lambda_event(),
        sigma_pooled: base.sigma.pooled,
        sigmas: (0..seq.pair_count()).map(|k| base.noise.sigma(k)).collect(),
        sigma_fallback: base.sigma.fallback,
        d_star,
        space_sizes: spaces.iter().map(CandidateSpace::len).collect(),
        evaluations,
        score,
    };
    Ok(TrackOutput {
        trajectories,
        matchings,
        spaces,
        diagnostics,
    })
}

/// Tracks `seq` with the method and settings of `cfg`.
pub fn track(seq: &FrameSequence, cfg: &TrackerConfig) -> Result<TrackOutput> {
    let base = prepare(seq, cfg)?;
    track_with(seq, &base, cfg)
}
