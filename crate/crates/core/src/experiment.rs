//! Seeded experiment grids over simulated videos.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::simulator::{simulate, SimConfig};
use crate::tripartite::{prepare, track_with, EvalStats, Method, TrackerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentGrid {
    pub n0: Vec<f64>,
    pub sigma: Vec<f64>,
    pub replicates: usize,
    pub frames: usize,
    pub methods: Vec<Method>,
    /// Deltas run for the chain method.
    pub deltas: Vec<usize>,
    /// Replicate `r` of every setting uses seed `seed + r`.
    pub seed: u64,
    pub beta: f64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            n0: vec![15.0],
            sigma: vec![1.0],
            replicates: 20,
            frames: 50,
            methods: vec![Method::Bmcf, Method::Tri],
            deltas: vec![0, 1, 2, 3],
            seed: 0,
            beta: 1.0,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n0.is_empty() || self.sigma.is_empty() || self.methods.is_empty() {
            return Err(Error::config("n0, sigma and methods must be non-empty"));
        }
        if self.methods.contains(&Method::Tri) && self.deltas.is_empty() {
            return Err(Error::config("the tri method needs at least one delta"));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be >= 1"));
        }
        if self.frames < 2 {
            return Err(Error::config("frames must be >= 2"));
        }
        Ok(())
    }

    /// `(method, delta)` of every run on one replicate.
    pub fn runs(&self) -> Vec<(Method, Option<usize>)> {
        let mut out = Vec::new();
        for &m in &self.methods {
            match m {
                Method::Bmcf => out.push((m, None)),
                Method::Tri => out.extend(self.deltas.iter().map(|&d| (m, Some(d)))),
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    pub delta: Option<usize>,
    pub report: EvalReport,
    pub evaluations: EvalStats,
    pub space_sizes: Vec<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub n0: f64,
    pub sigma: f64,
    pub replicate: usize,
    pub seed: u64,
    /// Per-pair sigma estimated from the bipartite links.
    pub sigma_hat: Vec<f64>,
    /// Pooled sigma estimated from the true links.
    pub sigma_hat_truth: f64,
    pub detections: usize,
    pub runs: Vec<RunResult>,
}

/// One row per (setting, replicate, run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n0: f64,
    pub sigma: f64,
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub delta: Option<usize>,
    pub whole_precision: f64,
    pub whole_recall: f64,
    pub whole_f1: f64,
    pub path_identity: u8,
    pub mean_pair_identity: f64,
    pub min_pair_identity: u8,
    pub mean_coverage: f64,
    pub mean_space_size: f64,
    pub triple_evaluations: u64,
}

/// Means and 1.96 standard deviations over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n0: f64,
    pub sigma: f64,
    pub method: Method,
    pub delta: Option<usize>,
    pub replicates: usize,
    pub f1_mean: f64,
    pub f1_err: f64,
    pub coverage_mean: f64,
    pub coverage_err: f64,
    pub pair_identity_mean: f64,
    pub pair_identity_err: f64,
    pub evaluations_mean: f64,
    /// Total evaluations at this delta over those at `delta - 1`.
    pub eval_ratio: Option<f64>,
    /// `((delta + 1/2) / (delta - 1/2))^2`.
    pub eval_ratio_theory: Option<f64>,
    /// `(F(delta+1) - F(delta)) / (F(delta) - F(delta-1))` on mean F1.
    pub improvement_ratio: Option<f64>,
}

/// Per frame pair means over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n0: f64,
    pub sigma: f64,
    pub method: Method,
    pub delta: Option<usize>,
    pub t: usize,
    pub coverage_mean: f64,
    pub pair_identity_mean: f64,
    pub cumulative_f1_mean: f64,
    pub sigma_hat_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n0: f64,
    pub sigma: f64,
    pub replicate: usize,
    pub method: Method,
    pub delta: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub replicates: Vec<ReplicateResult>,
}

pub fn theoretical_eval_ratio(delta: usize) -> Option<f64> {
    (delta >= 1).then(|| {
        let d = delta as f64;
        ((d + 0.5) / (d - 0.5)).powi(2)
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn err196(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    1.96 * var.sqrt()
}

/// Runs one replicate: simulate, then every method of the grid on the same
/// video.
pub fn run_replicate(
    sim: &SimConfig,
    tracker: &TrackerConfig,
    runs: &[(Method, Option<usize>)],
    beta: f64,
    replicate: usize,
) -> Result<ReplicateResult> {
    let out = simulate(sim)?;
    let seq = &out.sequence;
    let base = prepare(seq, tracker)?;
    let truth_sigma = crate::tripartite::estimate_sigma(
        seq,
        &out.truth_matchings,
        crate::tripartite::SigmaMode::Pooled,
        tracker.sigma_floor,
        tracker.default_sigma,
    )?;
    let mut results = Vec::with_capacity(runs.len());
    for &(method, delta) in runs {
        let mut cfg = tracker.clone();
        cfg.method = method;
        cfg.space.delta = delta.unwrap_or(0);
        let start = Instant::now();
        let tracked = track_with(seq, &base, &cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let report = evaluate(seq, &tracked.matchings, &out.truth_matchings, Some(&tracked.spaces), beta)?;
        results.push(RunResult {
            method,
            delta,
            report,
            evaluations: tracked.diagnostics.evaluations,
            space_sizes: tracked.diagnostics.space_sizes,
            seconds,
        });
    }
    Ok(ReplicateResult {
        n0: sim.n0,
        sigma: sim.sigma,
        replicate,
        seed: sim.seed,
        sigma_hat: (0..seq.pair_count()).map(|k| base.noise.sigma(k)).collect(),
        sigma_hat_truth: truth_sigma.pooled,
        detections: seq.total_detections(),
        runs: results,
    })
}

/// Runs every (n0, sigma, replicate) of the grid in parallel; results come
/// back in grid order.
pub fn run_experiment(grid: &ExperimentGrid, sim: &SimConfig, tracker: &TrackerConfig) -> Result<ExperimentResults> {
    grid.validate()?;
    let runs = grid.runs();
    let mut jobs = Vec::new();
    for &n0 in &grid.n0 {
        for &sigma in &grid.sigma {
            for r in 0..grid.replicates {
                jobs.push((
                    SimConfig {
                        n0,
                        sigma,
                        frames: grid.frames,
                        seed: grid.seed.wrapping_add(r as u64),
                        ..sim.clone()
                    },
                    r,
                ));
            }
        }
    }
    let replicates = jobs
        .par_iter()
        .map(|(s, r)| run_replicate(s, tracker, &runs, grid.beta, *r))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults { replicates })
}

impl ExperimentResults {
    pub fn rows(&self) -> Vec<ResultRow> {
        let mut out = Vec::new();
        for rep in &self.replicates {
            for run in &rep.runs {
                let s = &run.report.summary;
                out.push(ResultRow {
                    n0: rep.n0,
                    sigma: rep.sigma,
                    replicate: rep.replicate,
                    seed: rep.seed,
                    method: run.method,
                    delta: run.delta,
                    whole_precision: s.whole.precision,
                    whole_recall: s.whole.recall,
                    whole_f1: s.whole.f_beta,
                    path_identity: s.path_identity,
                    mean_pair_identity: s.mean_pair_identity,
                    min_pair_identity: run.report.rows.iter().map(|r| r.pair_identity).min().unwrap_or(1),
                    mean_coverage: s.mean_coverage.unwrap_or(f64::NAN),
                    mean_space_size: run.space_sizes.iter().sum::<usize>() as f64 / run.space_sizes.len() as f64,
                    triple_evaluations: run.evaluations.triple_evaluations,
                });
            }
        }
        out
    }

    pub fn timings(&self) -> Vec<TimingRow> {
        self.replicates
            .iter()
            .flat_map(|rep| {
                rep.runs.iter().map(move |run| TimingRow {
                    n0: rep.n0,
                    sigma: rep.sigma,
                    replicate: rep.replicate,
                    method: run.method,
                    delta: run.delta,
                    seconds: run.seconds,
                })
            })
            .collect()
    }

    /// Settings in grid order.
    fn settings(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.replicates {
            if !out.contains(&(r.n0, r.sigma)) {
                out.push((r.n0, r.sigma));
            }
        }
        out
    }

    fn runs_of(&self, n0: f64, sigma: f64, method: Method, delta: Option<usize>) -> Vec<(&ReplicateResult, &RunResult)> {
        self.replicates
            .iter()
            .filter(|r| r.n0 == n0 && r.sigma == sigma)
            .flat_map(|r| {
                r.runs
                    .iter()
                    .filter(move |x| x.method == method && x.delta == delta)
                    .map(move |x| (r, x))
            })
            .collect()
    }

    fn run_keys(&self) -> Vec<(Method, Option<usize>)> {
        self.replicates
            .first()
            .map(|r| r.runs.iter().map(|x| (x.method, x.delta)).collect())
            .unwrap_or_default()
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut out = Vec::new();
        for (n0, sigma) in self.settings() {
            let keys = self.run_keys();
            let f1_of = |m, d| {
                let v: Vec<f64> = self
                    .runs_of(n0, sigma, m, d)
                    .iter()
                    .map(|(_, x)| x.report.summary.whole.f_beta)
                    .collect();
                (!v.is_empty()).then(|| mean(&v))
            };
            let evals_of = |m, d| -> Option<u64> {
                let v = self.runs_of(n0, sigma, m, d);
                (!v.is_empty()).then(|| v.iter().map(|(_, x)| x.evaluations.triple_evaluations).sum())
            };
            for (method, delta) in keys {
                let runs = self.runs_of(n0, sigma, method, delta);
                let f1: Vec<f64> = runs.iter().map(|(_, x)| x.report.summary.whole.f_beta).collect();
                let cov: Vec<f64> = runs.iter().map(|(_, x)| x.report.summary.mean_coverage.unwrap_or(f64::NAN)).collect();
                let pi: Vec<f64> = runs.iter().map(|(_, x)| x.report.summary.mean_pair_identity).collect();
                let ev: Vec<f64> = runs.iter().map(|(_, x)| x.evaluations.triple_evaluations as f64).collect();
                let (mut eval_ratio, mut theory, mut improvement) = (None, None, None);
                if let (Method::Tri, Some(d)) = (method, delta) {
                    if d >= 1 {
                        if let (Some(a), Some(b)) = (evals_of(method, Some(d)), evals_of(method, Some(d - 1))) {
                            eval_ratio = (b > 0).then(|| a as f64 / b as f64);
                            theory = theoretical_eval_ratio(d);
                        }
                        if let (Some(p), Some(c), Some(n)) =
                            (f1_of(method, Some(d - 1)), f1_of(method, Some(d)), f1_of(method, Some(d + 1)))
                        {
                            improvement = crate::metrics::improvement_ratio(p, c, n).ok();
                        }
                    }
                }
                out.push(AggregateRow {
                    n0,
                    sigma,
                    method,
                    delta,
                    replicates: runs.len(),
                    f1_mean: mean(&f1),
                    f1_err: err196(&f1),
                    coverage_mean: mean(&cov),
                    coverage_err: err196(&cov),
                    pair_identity_mean: mean(&pi),
                    pair_identity_err: err196(&pi),
                    evaluations_mean: mean(&ev),
                    eval_ratio,
                    eval_ratio_theory: theory,
                    improvement_ratio: improvement,
                });
            }
        }
        out
    }

    pub fn series(&self) -> Vec<SeriesRow> {
        let mut out = Vec::new();
        for (n0, sigma) in self.settings() {
            for (method, delta) in self.run_keys() {
                let runs = self.runs_of(n0, sigma, method, delta);
                let pairs = runs.first().map_or(0, |(_, x)| x.report.rows.len());
                for k in 0..pairs {
                    let col = |f: &dyn Fn(&ReplicateResult, &RunResult) -> f64| {
                        mean(&runs.iter().map(|(r, x)| f(r, x)).collect::<Vec<_>>())
                    };
                    out.push(SeriesRow {
                        n0,
                        sigma,
                        method,
                        delta,
                        t: k + 1,
                        coverage_mean: col(&|_, x| x.report.rows[k].coverage.map_or(f64::NAN, f64::from)),
                        pair_identity_mean: col(&|_, x| x.report.rows[k].pair_identity as f64),
                        cumulative_f1_mean: col(&|_, x| x.report.rows[k].cumulative_f),
                        sigma_hat_mean: col(&|r, _| r.sigma_hat[k]),
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentGrid {
        ExperimentGrid {
            replicates: 2,
            frames: 8,
            deltas: vec![0, 1],
            ..ExperimentGrid::default()
        }
    }

    #[test]
    fn theory_constants() {
        assert_eq!(theoretical_eval_ratio(0), None);
        assert!((theoretical_eval_ratio(1).unwrap() - 9.0).abs() < 1e-12);
        assert!((theoretical_eval_ratio(2).unwrap() - 2.78).abs() < 0.005);
        assert!((theoretical_eval_ratio(3).unwrap() - 1.96).abs() < 0.005);
    }

    #[test]
    fn grid_shapes() {
        let res = run_experiment(&tiny(), &SimConfig::default(), &TrackerConfig::default()).unwrap();
        assert_eq!(res.replicates.len(), 2);
        assert_eq!(res.rows().len(), 6);
        let agg = res.aggregate();
        assert_eq!(agg.len(), 3);
        assert!(agg[2].eval_ratio.is_some());
        assert_eq!(res.series().len(), 3 * 7);
    }

    #[test]
    fn deterministic_rows() {
        let a = run_experiment(&tiny(), &SimConfig::default(), &TrackerConfig::default()).unwrap();
        let b = run_experiment(&tiny(), &SimConfig::default(), &TrackerConfig::default()).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.aggregate(), b.aggregate());
    }

    #[test]
    fn invalid_grid() {
        let g = ExperimentGrid {
            replicates: 0,
            ..ExperimentGrid::default()
        };
        assert!(g.validate().is_err());
    }
}
