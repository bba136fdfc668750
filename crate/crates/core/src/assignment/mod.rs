//! Bipartite (position model) matching of two frames.
//!
//! Costs are squared Euclidean distances. Appearing and departing objects
//! each pay the gate cost `T`, so an object is linked only when that is
//! cheaper than letting it leave and a new one arrive. Both solvers embed the
//! flow network into a square assignment with dummy "appear" rows and
//! "depart" columns and break ties towards the lexicographically smallest
//! matching vector.

mod lap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::Position;
use crate::matching::MatchingVector;
use lap::Lap;

/// How the appear/depart cost of the flow network is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Gate {
    /// A fixed cost `T` in squared pixels.
    Fixed { cost: f64 },
    /// The `q`-quantile of nearest-neighbour squared distances between
    /// consecutive frames.
    Quantile { q: f64 },
    /// `T = +inf`: link as many objects as possible.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteConfig {
    pub gate: Gate,
}

impl Default for BipartiteConfig {
    fn default() -> Self {
        Self {
            gate: Gate::Quantile { q: 0.99 },
        }
    }
}

impl BipartiteConfig {
    pub fn fixed(cost: f64) -> Self {
        Self {
            gate: Gate::Fixed { cost },
        }
    }

    pub fn disabled() -> Self {
        Self { gate: Gate::Disabled }
    }

    pub fn validate(&self) -> Result<()> {
        match self.gate {
            Gate::Fixed { cost } if cost.is_nan() || cost < 0.0 => {
                Err(Error::config(format!("gate cost must be >= 0, got {cost}")))
            }
            Gate::Quantile { q } if !(q > 0.0 && q < 1.0) => {
                Err(Error::config(format!("gate quantile must lie in (0, 1), got {q}")))
            }
            _ => Ok(()),
        }
    }

    /// Replaces a quantile gate by the fixed cost it evaluates to on `seq`.
    pub fn resolve(&self, seq: &FrameSequence) -> Result<BipartiteConfig> {
        self.validate()?;
        Ok(match self.gate {
            Gate::Quantile { q } => {
                let d = nearest_neighbor_sq_distances(seq.frames().windows(2).map(|w| (&w[0][..], &w[1][..])));
                BipartiteConfig::fixed(quantile(&d, q).unwrap_or(0.0))
            }
            _ => *self,
        })
    }

    /// The finite gate cost, or `None` when gating is disabled.
    fn cost_for(&self, frame_a: &[Position], frame_b: &[Position]) -> Option<f64> {
        match self.gate {
            Gate::Fixed { cost } if cost.is_finite() => Some(cost),
            Gate::Fixed { .. } | Gate::Disabled => None,
            Gate::Quantile { q } => {
                let d = nearest_neighbor_sq_distances(std::iter::once((frame_a, frame_b)));
                Some(quantile(&d, q).unwrap_or(0.0))
            }
        }
    }
}

/// Squared distance from every object to its nearest neighbour in the next
/// frame, over all given frame pairs.
pub fn nearest_neighbor_sq_distances<'a, I>(pairs: I) -> Vec<f64>
where
    I: IntoIterator<Item = (&'a [Position], &'a [Position])>,
{
    let mut out = Vec::new();
    for (a, b) in pairs {
        if b.is_empty() {
            continue;
        }
        for p in a {
            let nn = b
                .iter()
                .map(|q| p.squared_distance(q))
                .fold(f64::INFINITY, f64::min);
            out.push(nn);
        }
    }
    out
}

/// Linearly interpolated sample quantile.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

fn check_finite(frame: &[Position], name: &str) -> Result<()> {
    match frame.iter().position(|p| !p.is_finite()) {
        Some(i) => Err(Error::input(format!("non-finite coordinate in {name}, object {i}"))),
        None => Ok(()),
    }
}

/// Total squared distance of the linked pairs of `m`.
pub fn squared_distance_cost(frame_a: &[Position], frame_b: &[Position], m: &MatchingVector) -> f64 {
    m.entries()
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|j| frame_a[i].squared_distance(&frame_b[j])))
        .sum()
}

/// Objective of the gated bipartite problem: squared distances of linked
/// pairs plus `gate` per departure and per arrival.
pub fn bipartite_cost(
    frame_a: &[Position],
    frame_b: &[Position],
    m: &MatchingVector,
    gate: f64,
) -> f64 {
    let events = m.disappeared() + m.appeared(frame_b.len());
    squared_distance_cost(frame_a, frame_b, m) + gate * events as f64
}

// Column ranks: a departure sorts before any target, then targets in order.
fn rank_for(n_b: usize) -> impl Fn(usize, usize) -> usize {
    move |_, col| if col >= n_b { 0 } else { col + 1 }
}

fn read_rows(col_of: &[usize], n_a: usize, n_b: usize) -> MatchingVector {
    let entries = col_of[..n_a]
        .iter()
        .map(|&c| (c < n_b).then_some(c))
        .collect();
    MatchingVector::from_entries_unchecked(entries)
}

/// Minimum-cost gated bipartite matching of two frames.
pub fn solve_bmcf(
    frame_a: &[Position],
    frame_b: &[Position],
    cfg: &BipartiteConfig,
) -> Result<MatchingVector> {
    cfg.validate()?;
    check_finite(frame_a, "frame_a")?;
    check_finite(frame_b, "frame_b")?;
    let (n_a, n_b) = (frame_a.len(), frame_b.len());
    let Some(gate) = cfg.cost_for(frame_a, frame_b) else {
        return solve_bmcf_fixed_d(frame_a, frame_b, n_a.saturating_sub(n_b));
    };

    // rows: n_a objects then n_b arrivals; cols: n_b objects then n_a departures
    let n = n_a + n_b;
    let mut lap = Lap::new(n);
    for (i, p) in frame_a.iter().enumerate() {
        for (j, q) in frame_b.iter().enumerate() {
            lap.set(i, j, p.squared_distance(q));
        }
        for d in 0..n_a {
            lap.set(i, n_b + d, gate);
        }
    }
    for a in 0..n_b {
        for j in 0..n_b {
            lap.set(n_a + a, j, gate);
        }
        for d in 0..n_a {
            lap.set(n_a + a, n_b + d, 0.0);
        }
    }
    let rows: Vec<usize> = (0..n_a).collect();
    let col_of = lap.solve(&rows, rank_for(n_b));
    Ok(read_rows(&col_of, n_a, n_b))
}

/// Minimum total squared distance matching with exactly `d` departures.
pub fn solve_bmcf_fixed_d(
    frame_a: &[Position],
    frame_b: &[Position],
    d: usize,
) -> Result<MatchingVector> {
    check_finite(frame_a, "frame_a")?;
    check_finite(frame_b, "frame_b")?;
    let (n_a, n_b) = (frame_a.len(), frame_b.len());
    let lo = n_a.saturating_sub(n_b);
    if d < lo || d > n_a {
        return Err(Error::input(format!(
            "{d} departures infeasible for {n_a} -> {n_b} objects (need {lo}..={n_a})"
        )));
    }

    // rows: n_a objects then (n_b - n_a + d) arrivals; cols: n_b objects then
    // d departures. Arrivals may not take a departure column, so exactly d
    // objects depart.
    let arrivals = n_b + d - n_a;
    let n = n_b + d;
    let mut lap = Lap::new(n);
    for (i, p) in frame_a.iter().enumerate() {
        for (j, q) in frame_b.iter().enumerate() {
            lap.set(i, j, p.squared_distance(q));
        }
        for c in 0..d {
            lap.set(i, n_b + c, 0.0);
        }
    }
    for a in 0..arrivals {
        for j in 0..n_b {
            lap.set(n_a + a, j, 0.0);
        }
    }
    let rows: Vec<usize> = (0..n_a).collect();
    let col_of = lap.solve(&rows, rank_for(n_b));
    Ok(read_rows(&col_of, n_a, n_b))
}
