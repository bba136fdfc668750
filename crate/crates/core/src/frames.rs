use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position;

/// Detections of every frame of a video. Object `i` of frame `k` is
/// `frames[k][i]`; the ordering inside a frame is arbitrary but fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSequence {
    frames: Vec<Vec<Position>>,
    dt: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Vec<Position>>) -> Result<Self> {
        Self::with_dt(frames, 1.0)
    }

    pub fn with_dt(frames: Vec<Vec<Position>>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::input(format!("time interval must be positive, got {dt}")));
        }
        for (k, frame) in frames.iter().enumerate() {
            if let Some(i) = frame.iter().position(|p| !p.is_finite()) {
                return Err(Error::input(format!(
                    "non-finite coordinate at frame {k}, object {i}"
                )));
            }
        }
        Ok(Self { frames, dt })
    }

    pub fn frames(&self) -> &[Vec<Position>] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &[Position] {
        &self.frames[k]
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Number of consecutive frame pairs.
    pub fn pair_count(&self) -> usize {
        self.frames.len().saturating_sub(1)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.frames.iter().map(Vec::len).collect()
    }

    pub fn total_detections(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    /// The first `k` frames.
    pub fn prefix(&self, k: usize) -> FrameSequence {
        FrameSequence {
            frames: self.frames[..k.min(self.frames.len())].to_vec(),
            dt: self.dt,
        }
    }

    pub(crate) fn require_matchable(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::input(format!(
                "at least 2 frames are needed, got {}",
                self.frames.len()
            )));
        }
        Ok(())
    }
}
