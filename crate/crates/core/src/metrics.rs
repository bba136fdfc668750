//! Accuracy of predicted associations against ground truth.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateSpace;
use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::matching::MatchingVector;
use crate::trajectory::{assemble_trajectories, Track, TrajectorySet};

/// Weighted harmonic mean of precision and recall; 0 when either is 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision <= 0.0 || recall <= 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) / (1.0 / precision + b2 / recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathScores {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub correct: usize,
    pub predicted: usize,
    pub truth: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// A predicted track counts as correct only if some truth track has exactly
/// the same detections.
pub fn path_accuracy(pred: &TrajectorySet, truth: &TrajectorySet, beta: f64) -> PathScores {
    let truth_set: HashSet<&Track> = truth.tracks().iter().collect();
    let correct = pred.tracks().iter().filter(|t| truth_set.contains(t)).count();
    let precision = ratio(correct, pred.len());
    let recall = ratio(correct, truth.len());
    PathScores {
        precision,
        recall,
        f_beta: f_beta(precision, recall, beta),
        correct,
        predicted: pred.len(),
        truth: truth.len(),
    }
}

fn check_aligned(seq: &FrameSequence, pred: &[MatchingVector], truth: &[MatchingVector]) -> Result<()> {
    if pred.len() != truth.len() || pred.len() != seq.pair_count() {
        return Err(Error::input(format!(
            "{} predicted and {} true matchings for {} frame pairs",
            pred.len(),
            truth.len(),
            seq.pair_count()
        )));
    }
    Ok(())
}

/// Path accuracy of the two-frame video made of frames `k` and `k + 1`.
pub fn pair_accuracy(seq: &FrameSequence, k: usize, pred: &MatchingVector, truth: &MatchingVector, beta: f64) -> Result<PathScores> {
    let sub = FrameSequence::with_dt(vec![seq.frame(k).to_vec(), seq.frame(k + 1).to_vec()], seq.dt())?;
    let p = assemble_trajectories(&sub, std::slice::from_ref(pred))?;
    let t = assemble_trajectories(&sub, std::slice::from_ref(truth))?;
    Ok(path_accuracy(&p, &t, beta))
}

/// Path accuracy of every prefix of `k = 2..=f` frames.
pub fn cumulative_path_accuracy(
    seq: &FrameSequence,
    pred: &[MatchingVector],
    truth: &[MatchingVector],
    beta: f64,
) -> Result<Vec<PathScores>> {
    check_aligned(seq, pred, truth)?;
    (2..=seq.len())
        .map(|k| {
            let sub = seq.prefix(k);
            let p = assemble_trajectories(&sub, &pred[..k - 1])?;
            let t = assemble_trajectories(&sub, &truth[..k - 1])?;
            Ok(path_accuracy(&p, &t, beta))
        })
        .collect()
}

pub fn pair_identity(pred: &MatchingVector, truth: &MatchingVector) -> bool {
    pred == truth
}

pub fn path_identity(pred: &TrajectorySet, truth: &TrajectorySet) -> bool {
    pred == truth
}

/// Whether the true matching is among the candidates.
pub fn coverage(space: &CandidateSpace, truth: &MatchingVector) -> bool {
    space.contains(truth)
}

/// `(F(d+1) - F(d)) / (F(d) - F(d-1))`.
pub fn improvement_ratio(f_prev: f64, f_cur: f64, f_next: f64) -> Result<f64> {
    let den = f_cur - f_prev;
    if den == 0.0 {
        return Err(Error::Undefined(format!(
            "no improvement between consecutive scores ({f_prev} and {f_cur})"
        )));
    }
    Ok((f_next - f_cur) / den)
}

/// Improvement ratio for every interior entry of `scores` (indexed by
/// delta); `None` where undefined.
pub fn improvement_ratios(scores: &[f64]) -> Vec<Option<f64>> {
    scores
        .windows(3)
        .map(|w| improvement_ratio(w[0], w[1], w[2]).ok())
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::input("spearman needs two series of equal length >= 2"));
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Undefined("spearman correlation of a constant series".into()));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// One row per frame pair `t = 1..f-1` (pair `t` links frames `t-1` and
/// `t`); the cumulative columns refer to the first `t + 1` frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub t: usize,
    pub pair_precision: f64,
    pub pair_recall: f64,
    pub pair_f: f64,
    pub pair_identity: u8,
    pub coverage: Option<u8>,
    pub cumulative_precision: f64,
    pub cumulative_recall: f64,
    pub cumulative_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub beta: f64,
    pub frames: usize,
    pub whole: PathScores,
    pub path_identity: u8,
    pub mean_pair_identity: f64,
    pub mean_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: EvalSummary,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row).map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary is plain data")
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Full report for predicted matchings against the truth. `spaces`, when
/// given, adds the truth-coverage column.
pub fn evaluate(
    seq: &FrameSequence,
    pred: &[MatchingVector],
    truth: &[MatchingVector],
    spaces: Option<&[CandidateSpace]>,
    beta: f64,
) -> Result<EvalReport> {
    check_aligned(seq, pred, truth)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::config(format!("beta must be positive, got {beta}")));
    }
    if let Some(s) = spaces {
        if s.len() != pred.len() {
            return Err(Error::input(format!("{} spaces for {} frame pairs", s.len(), pred.len())));
        }
    }
    let cumulative = cumulative_path_accuracy(seq, pred, truth, beta)?;
    let mut rows = Vec::with_capacity(pred.len());
    for k in 0..pred.len() {
        let pair = pair_accuracy(seq, k, &pred[k], &truth[k], beta)?;
        let c = &cumulative[k];
        rows.push(EvalRow {
            t: k + 1,
            pair_precision: pair.precision,
            pair_recall: pair.recall,
            pair_f: pair.f_beta,
            pair_identity: pair_identity(&pred[k], &truth[k]) as u8,
            coverage: spaces.map(|s| coverage(&s[k], &truth[k]) as u8),
            cumulative_precision: c.precision,
            cumulative_recall: c.recall,
            cumulative_f: c.f_beta,
        });
    }
    let whole = *cumulative.last().expect("at least one pair");
    let n = rows.len() as f64;
    let p = assemble_trajectories(seq, pred)?;
    let t = assemble_trajectories(seq, truth)?;
    let summary = EvalSummary {
        beta,
        frames: seq.len(),
        whole,
        path_identity: path_identity(&p, &t) as u8,
        mean_pair_identity: rows.iter().map(|r| r.pair_identity as f64).sum::<f64>() / n,
        mean_coverage: spaces.map(|_| rows.iter().filter_map(|r| r.coverage).map(f64::from).sum::<f64>() / n),
    };
    Ok(EvalReport { rows, summary })
}
