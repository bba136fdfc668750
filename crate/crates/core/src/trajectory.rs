//! Reconstruction of trajectories from per-pair matching vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::Position;
use crate::matching::MatchingVector;

/// One detection: object `object` of frame `frame` (both 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Detection {
    pub frame: usize,
    pub object: usize,
}

pub type Track = Vec<Detection>;

/// A partition of the detections of a sequence into tracks of consecutive
/// frames. Tracks are kept ordered by their first detection.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrajectorySet {
    tracks: Vec<Track>,
}

impl TrajectorySet {
    /// Validates that tracks are non-empty, run over consecutive frames and
    /// never share a detection.
    pub fn new(mut tracks: Vec<Track>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (t, track) in tracks.iter().enumerate() {
            if track.is_empty() {
                return Err(Error::input(format!("track {t} is empty")));
            }
            for w in track.windows(2) {
                if w[1].frame != w[0].frame + 1 {
                    return Err(Error::input(format!(
                        "track {t} jumps from frame {} to frame {}",
                        w[0].frame, w[1].frame
                    )));
                }
            }
            for d in track {
                if !seen.insert(*d) {
                    return Err(Error::input(format!(
                        "detection (frame {}, object {}) is in more than one track",
                        d.frame, d.object
                    )));
                }
            }
        }
        tracks.sort();
        Ok(Self { tracks })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn total_length(&self) -> usize {
        self.tracks.iter().map(Vec::len).sum()
    }

    /// Positions of every track, resolved through `seq`.
    pub fn positions(&self, seq: &FrameSequence) -> Vec<Vec<(usize, Position)>> {
        self.tracks
            .iter()
            .map(|t| {
                t.iter()
                    .map(|d| (d.frame, seq.frame(d.frame)[d.object]))
                    .collect()
            })
            .collect()
    }

    /// Recovers the per-pair matching vectors that generate this set.
    pub fn to_matchings(&self, counts: &[usize]) -> Result<Vec<MatchingVector>> {
        let mut entries: Vec<Vec<Option<usize>>> = counts
            .iter()
            .take(counts.len().saturating_sub(1))
            .map(|&n| vec![None; n])
            .collect();
        let mut covered: Vec<Vec<bool>> = counts.iter().map(|&n| vec![false; n]).collect();
        for track in &self.tracks {
            for d in track {
                if d.frame >= counts.len() || d.object >= counts[d.frame] {
                    return Err(Error::input(format!(
                        "detection (frame {}, object {}) is outside the sequence",
                        d.frame, d.object
                    )));
                }
                covered[d.frame][d.object] = true;
            }
            for w in track.windows(2) {
                entries[w[0].frame][w[0].object] = Some(w[1].object);
            }
        }
        if let Some((k, row)) = covered.iter().enumerate().find(|(_, r)| r.contains(&false)) {
            let i = row.iter().position(|c| !c).unwrap_or_default();
            return Err(Error::input(format!(
                "detection (frame {k}, object {i}) belongs to no track"
            )));
        }
        entries
            .into_iter()
            .enumerate()
            .map(|(k, e)| MatchingVector::new(e, counts[k + 1]))
            .collect()
    }
}

/// Follows the matching vectors from every track start. A track starts at
/// each object with no predecessor and ends at each departure.
pub fn assemble_trajectories(
    seq: &FrameSequence,
    matchings: &[MatchingVector],
) -> Result<TrajectorySet> {
    let counts = seq.counts();
    if matchings.len() != seq.pair_count() {
        return Err(Error::input(format!(
            "{} matching vectors for {} frame pairs",
            matchings.len(),
            seq.pair_count()
        )));
    }
    for (k, m) in matchings.iter().enumerate() {
        if !m.is_valid_for(counts[k], counts[k + 1]) {
            return Err(Error::input(format!(
                "matching vector {k} is not valid for {} -> {} objects",
                counts[k],
                counts[k + 1]
            )));
        }
    }

    let mut has_pred: Vec<Vec<bool>> = counts.iter().map(|&n| vec![false; n]).collect();
    for (k, m) in matchings.iter().enumerate() {
        for j in m.entries().iter().flatten() {
            has_pred[k + 1][*j] = true;
        }
    }

    let mut tracks = Vec::new();
    for (frame, starts) in has_pred.iter().enumerate() {
        for (object, _) in starts.iter().enumerate().filter(|(_, &p)| !p) {
            let mut track = vec![Detection { frame, object }];
            let (mut k, mut i) = (frame, object);
            while k < matchings.len() {
                match matchings[k].get(i) {
                    Some(j) => {
                        k += 1;
                        i = j;
                        track.push(Detection { frame: k, object: i });
                    }
                    None => break,
                }
            }
            tracks.push(track);
        }
    }
    TrajectorySet::new(tracks)
}
