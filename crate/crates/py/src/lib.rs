//! Python bindings.
//!
//! Frames are lists of `(x, y)` tuples. Matching vectors use the 1-based
//! signed form: entry `i` is the index in the next frame that object `i`
//! links to, or `-1` when it departs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use trimatch::tripartite::{LambdaEvent, ReducedSpaceConfig, SigmaMode};
use trimatch::{BipartiteConfig, Error, FrameSequence, Gate, MatchingVector, Method, Position, TrackerConfig};

type Frames = Vec<Vec<(f64, f64)>>;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn positions(frame: &[(f64, f64)]) -> Vec<Position> {
    frame.iter().map(|&(x, y)| Position::new(x, y)).collect()
}

fn sequence(frames: &Frames, dt: f64) -> PyResult<FrameSequence> {
    FrameSequence::with_dt(frames.iter().map(|f| positions(f)).collect(), dt).map_err(to_py)
}

fn signed(ms: &[MatchingVector]) -> Vec<Vec<i64>> {
    ms.iter().map(MatchingVector::to_signed).collect()
}

fn parse_matchings(seq: &FrameSequence, ms: &[Vec<i64>]) -> PyResult<Vec<MatchingVector>> {
    let counts = seq.counts();
    if ms.len() + 1 != counts.len() {
        return Err(PyValueError::new_err(format!(
            "{} matching vectors for {} frames",
            ms.len(),
            counts.len()
        )));
    }
    ms.iter()
        .zip(&counts[1..])
        .map(|(m, &n)| MatchingVector::from_signed(m, n).map_err(to_py))
        .collect()
}

fn gate(gate_cost: Option<f64>, gate_quantile: f64) -> Gate {
    match gate_cost {
        Some(c) if c.is_infinite() => Gate::Disabled,
        Some(cost) => Gate::Fixed { cost },
        None => Gate::Quantile { q: gate_quantile },
    }
}

/// Configured tracker.
///
/// `gate_cost=None` picks the gate from the data, `float("inf")` disables
/// it. `lambda_event=None` derives the event penalty from the gate.
#[pyclass(frozen, module = "trimatch_py")]
struct Tracker {
    cfg: TrackerConfig,
    dt: f64,
}

#[pymethods]
impl Tracker {
    #[new]
    #[pyo3(signature = (method="tri", delta=1, sigma_mode="per-frame", lambda_event=None, gate_cost=None, gate_quantile=0.99, dt=1.0))]
    fn new(
        method: &str,
        delta: usize,
        sigma_mode: &str,
        lambda_event: Option<f64>,
        gate_cost: Option<f64>,
        gate_quantile: f64,
        dt: f64,
    ) -> PyResult<Self> {
        let cfg = TrackerConfig {
            method: method.parse::<Method>().map_err(to_py)?,
            space: ReducedSpaceConfig { delta },
            bipartite: BipartiteConfig {
                gate: gate(gate_cost, gate_quantile),
            },
            sigma_mode: sigma_mode.parse::<SigmaMode>().map_err(to_py)?,
            lambda_event: lambda_event.map_or(LambdaEvent::Auto, LambdaEvent::Value),
            ..TrackerConfig::default()
        };
        cfg.validate().map_err(to_py)?;
        Ok(Self { cfg, dt })
    }

    fn track(&self, frames: Frames) -> PyResult<TrackResult> {
        let seq = sequence(&frames, self.dt)?;
        let out = trimatch::track(&seq, &self.cfg).map_err(to_py)?;
        let d = &out.diagnostics;
        Ok(TrackResult {
            matchings: signed(&out.matchings),
            tracks: out
                .trajectories
                .tracks()
                .iter()
                .map(|t| t.iter().map(|x| (x.frame, x.object)).collect())
                .collect(),
            score: d.score,
            space_sizes: d.space_sizes.clone(),
            sigmas: d.sigmas.clone(),
            lambda_event: d.lambda_event,
            evaluations: d.evaluations.triple_evaluations,
        })
    }

    fn __repr__(&self) -> String {
        format!("Tracker(method='{}', delta={})", self.cfg.method, self.cfg.space.delta)
    }
}

#[pyclass(frozen, get_all, module = "trimatch_py")]
struct TrackResult {
    matchings: Vec<Vec<i64>>,
    /// `(frame, index)` detections of every track.
    tracks: Vec<Vec<(usize, usize)>>,
    score: f64,
    space_sizes: Vec<usize>,
    sigmas: Vec<f64>,
    lambda_event: f64,
    evaluations: u64,
}

#[pyclass(frozen, get_all, module = "trimatch_py")]
struct Simulation {
    frames: Frames,
    truth_matchings: Vec<Vec<i64>>,
    cells: usize,
}

#[pyclass(frozen, get_all, module = "trimatch_py")]
struct Evaluation {
    precision: f64,
    recall: f64,
    f_beta: f64,
    path_identity: bool,
    pair_identity: Vec<bool>,
    cumulative_f: Vec<f64>,
}

/// Min-cost bipartite matching of two frames.
#[pyfunction]
#[pyo3(signature = (frame_a, frame_b, gate_cost=None, gate_quantile=0.99))]
fn solve_bmcf(frame_a: Vec<(f64, f64)>, frame_b: Vec<(f64, f64)>, gate_cost: Option<f64>, gate_quantile: f64) -> PyResult<Vec<i64>> {
    let cfg = BipartiteConfig {
        gate: gate(gate_cost, gate_quantile),
    };
    let (a, b) = (positions(&frame_a), positions(&frame_b));
    let seq = FrameSequence::new(vec![a.clone(), b.clone()]).map_err(to_py)?;
    let cfg = cfg.resolve(&seq).map_err(to_py)?;
    trimatch::solve_bmcf(&a, &b, &cfg).map(|m| m.to_signed()).map_err(to_py)
}

#[pyfunction]
fn full_space_size(n_from: usize, n_to: usize) -> u128 {
    trimatch::tripartite::full_space_size(n_from, n_to)
}

/// Every valid matching vector from `n_from` to `n_to` objects, sorted.
#[pyfunction]
fn enumerate_space(n_from: usize, n_to: usize) -> PyResult<Vec<Vec<i64>>> {
    let s = trimatch::oracle::enumerate_space(n_from, n_to).map_err(to_py)?;
    Ok(s.iter().map(MatchingVector::to_signed).collect())
}

/// Log-likelihood of a whole chain under a pooled sigma.
#[pyfunction]
#[pyo3(signature = (frames, matchings, sigma, lambda_event, dt=1.0))]
fn chain_log_likelihood(frames: Frames, matchings: Vec<Vec<i64>>, sigma: f64, lambda_event: f64, dt: f64) -> PyResult<f64> {
    let seq = sequence(&frames, dt)?;
    let ms = parse_matchings(&seq, &matchings)?;
    let noise = trimatch::tripartite::NoiseModel::new(
        trimatch::tripartite::Sigmas::Pooled(sigma),
        lambda_event,
        trimatch::tripartite::DEFAULT_SIGMA_FLOOR,
    )
    .map_err(to_py)?;
    trimatch::tripartite::chain_log_likelihood(&seq, &ms, &noise).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n0=15.0, sigma=1.0, frames=50, seed=0))]
fn simulate(n0: f64, sigma: f64, frames: usize, seed: u64) -> PyResult<Simulation> {
    let cfg = trimatch::simulator::SimConfig {
        n0,
        sigma,
        frames,
        seed,
        ..Default::default()
    };
    let out = trimatch::simulator::simulate(&cfg).map_err(to_py)?;
    Ok(Simulation {
        frames: out
            .sequence
            .frames()
            .iter()
            .map(|f| f.iter().map(|p| (p.x, p.y)).collect())
            .collect(),
        truth_matchings: signed(&out.truth_matchings),
        cells: cfg.cell_count(),
    })
}

#[pyfunction]
#[pyo3(signature = (frames, pred, truth, beta=1.0))]
fn evaluate(frames: Frames, pred: Vec<Vec<i64>>, truth: Vec<Vec<i64>>, beta: f64) -> PyResult<Evaluation> {
    let seq = sequence(&frames, 1.0)?;
    let (p, t) = (parse_matchings(&seq, &pred)?, parse_matchings(&seq, &truth)?);
    let r = trimatch::metrics::evaluate(&seq, &p, &t, None, beta).map_err(to_py)?;
    Ok(Evaluation {
        precision: r.summary.whole.precision,
        recall: r.summary.whole.recall,
        f_beta: r.summary.whole.f_beta,
        path_identity: r.summary.path_identity == 1,
        pair_identity: r.rows.iter().map(|x| x.pair_identity == 1).collect(),
        cumulative_f: r.rows.iter().map(|x| x.cumulative_f).collect(),
    })
}

#[pymodule]
pub fn trimatch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tracker>()?;
    m.add_class::<TrackResult>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<Evaluation>()?;
    m.add_function(wrap_pyfunction!(solve_bmcf, m)?)?;
    m.add_function(wrap_pyfunction!(full_space_size, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_space, m)?)?;
    m.add_function(wrap_pyfunction!(chain_log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
