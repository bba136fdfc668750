//! Synthetic videos: cells seeded uniformly in a closed region move by a
//! velocity random walk, reflect off its walls, and are observed through a
//! centred window.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::Position;
use crate::matching::MatchingVector;
use crate::trajectory::{assemble_trajectories, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Closed region `[0, W] x [0, H]`.
    pub region_width: f64,
    pub region_height: f64,
    /// Visible window, centred in the region.
    pub window_width: f64,
    pub window_height: f64,
    /// Expected number of visible cells.
    pub n0: f64,
    /// Standard deviation of the per-axis velocity noise.
    pub sigma: f64,
    pub frames: usize,
    pub dt: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            region_width: 5.0 * 680.0,
            region_height: 5.0 * 512.0,
            window_width: 680.0,
            window_height: 512.0,
            n0: 15.0,
            sigma: 1.0,
            frames: 50,
            dt: 1.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.window_width) && ok(self.window_height)) {
            return Err(Error::config("window dimensions must be positive"));
        }
        if !(self.region_width >= self.window_width && self.region_height >= self.window_height)
            || !(self.region_width.is_finite() && self.region_height.is_finite())
        {
            return Err(Error::config("the region must contain the window"));
        }
        if !(self.n0.is_finite() && self.n0 >= 1.0) {
            return Err(Error::config(format!("n0 must be >= 1, got {}", self.n0)));
        }
        if !ok(self.sigma) {
            return Err(Error::config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.frames < 2 {
            return Err(Error::config(format!("at least 2 frames are needed, got {}", self.frames)));
        }
        if !ok(self.dt) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    /// Number of cells in the closed region.
    pub fn cell_count(&self) -> usize {
        let ratio = (self.region_width * self.region_height) / (self.window_width * self.window_height);
        (ratio * self.n0).round() as usize
    }

    fn window_origin(&self) -> (f64, f64) {
        (
            (self.region_width - self.window_width) / 2.0,
            (self.region_height - self.window_height) / 2.0,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// Visible detections, in window coordinates.
    pub sequence: FrameSequence,
    pub truth_matchings: Vec<MatchingVector>,
    pub truth: TrajectorySet,
    /// Every cell of every frame, in region coordinates.
    pub hidden: Vec<Vec<Position>>,
    /// Cell id of every visible detection.
    pub visible_ids: Vec<Vec<usize>>,
}

/// Folds `x` back into `[0, len]` by mirror reflection at both walls, as
/// many times as needed.
pub fn reflect(x: f64, len: f64) -> f64 {
    let period = 2.0 * len;
    let y = x.rem_euclid(period);
    if y > len {
        period - y
    } else {
        y
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::config(e.to_string()))?;
    let (w, h) = (cfg.region_width, cfg.region_height);
    let n = cfg.cell_count();
    let mut pos: Vec<Position> = (0..n)
        .map(|_| Position::new(rng.random_range(0.0..=w), rng.random_range(0.0..=h)))
        .collect();
    let mut vel = vec![(0.0f64, 0.0f64); n];

    let mut hidden = Vec::with_capacity(cfg.frames);
    hidden.push(pos.clone());
    for _ in 1..cfg.frames {
        for (p, v) in pos.iter_mut().zip(vel.iter_mut()) {
            let ex = noise.sample(&mut rng);
            let ey = noise.sample(&mut rng);
            let x = reflect(p.x + (v.0 + ex) * cfg.dt, w);
            let y = reflect(p.y + (v.1 + ey) * cfg.dt, h);
            *v = ((x - p.x) / cfg.dt, (y - p.y) / cfg.dt);
            *p = Position::new(x, y);
        }
        hidden.push(pos.clone());
    }

    let (x0, y0) = cfg.window_origin();
    let inside = |p: &Position| {
        p.x >= x0 && p.x < x0 + cfg.window_width && p.y >= y0 && p.y < y0 + cfg.window_height
    };
    let mut visible_ids = Vec::with_capacity(cfg.frames);
    let mut frames = Vec::with_capacity(cfg.frames);
    for cells in &hidden {
        let mut ids: Vec<usize> = (0..n).filter(|&c| inside(&cells[c])).collect();
        ids.shuffle(&mut rng);
        frames.push(ids.iter().map(|&c| Position::new(cells[c].x - x0, cells[c].y - y0)).collect());
        visible_ids.push(ids);
    }

    let mut slot = vec![usize::MAX; n];
    let mut truth_matchings = Vec::with_capacity(cfg.frames - 1);
    for k in 0..cfg.frames - 1 {
        slot.iter_mut().for_each(|s| *s = usize::MAX);
        for (j, &c) in visible_ids[k + 1].iter().enumerate() {
            slot[c] = j;
        }
        let entries = visible_ids[k]
            .iter()
            .map(|&c| (slot[c] != usize::MAX).then_some(slot[c]))
            .collect();
        truth_matchings.push(MatchingVector::new(entries, visible_ids[k + 1].len())?);
    }

    let sequence = FrameSequence::with_dt(frames, cfg.dt)?;
    let truth = assemble_trajectories(&sequence, &truth_matchings)?;
    Ok(SimOutput {
        sequence,
        truth_matchings,
        truth,
        hidden,
        visible_ids,
    })
}
