//! Estimating the velocity-change deviation from a set of matchings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::matching::MatchingVector;

use super::likelihood::Sigmas;

/// How sigma is obtained for the tripartite score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SigmaMode {
    /// One estimate per frame pair.
    #[default]
    PerFrame,
    /// A single estimate over the whole sequence.
    Pooled,
    /// A given value, no estimation.
    Fixed(f64),
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "per-frame" | "per_frame" => Ok(SigmaMode::PerFrame),
            "pooled" => Ok(SigmaMode::Pooled),
            other => {
                let v = other
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::config(format!("unknown sigma mode '{other}'")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad fixed sigma '{v}'")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(format!("fixed sigma must be positive, got {v}")));
                }
                Ok(SigmaMode::Fixed(v))
            }
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaMode::PerFrame => f.write_str("per-frame"),
            SigmaMode::Pooled => f.write_str("pooled"),
            SigmaMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl TryFrom<String> for SigmaMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SigmaMode> for String {
    fn from(m: SigmaMode) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub sigmas: Sigmas,
    /// Pooled estimate (or the fallback / fixed value).
    pub pooled: f64,
    /// Number of objects chained through three frames.
    pub chains: usize,
    /// True when no chain existed and `default_sigma` was used.
    pub fallback: bool,
}

/// Sum of squared velocity changes and chain count of every object chained
/// through frames `k-1, k, k+1`, for each middle frame `k`.
fn velocity_change_moments(seq: &FrameSequence, matchings: &[MatchingVector]) -> Vec<(f64, usize)> {
    let dt = seq.dt();
    let mut out = vec![(0.0, 0usize); seq.pair_count()];
    for k in 1..matchings.len() {
        let (prev, cur, next) = (seq.frame(k - 1), seq.frame(k), seq.frame(k + 1));
        let preds = matchings[k - 1].predecessors(cur.len());
        for (j, pred) in preds.iter().enumerate() {
            let (Some(i), Some(l)) = (*pred, matchings[k].get(j)) else {
                continue;
            };
            let v_in = prev[i].velocity_to(&cur[j], dt);
            let v_out = cur[j].velocity_to(&next[l], dt);
            out[k].0 += (v_out - v_in).norm_squared();
            out[k].1 += 1;
        }
    }
    out
}

/// Root-mean-square of the per-axis velocity changes, per frame pair or
/// pooled, floored at `sigma_floor`. Pairs without chains (always the first
/// one) use the pooled value.
pub fn estimate_sigma(
    seq: &FrameSequence,
    matchings: &[MatchingVector],
    mode: SigmaMode,
    sigma_floor: f64,
    default_sigma: f64,
) -> Result<SigmaEstimate> {
    if matchings.len() != seq.pair_count() {
        return Err(Error::input(format!(
            "{} matchings for {} frame pairs",
            matchings.len(),
            seq.pair_count()
        )));
    }
    if let Some((k, m)) = matchings
        .iter()
        .enumerate()
        .find(|(k, m)| !m.is_valid_for(seq.frame(*k).len(), seq.frame(k + 1).len()))
    {
        return Err(Error::input(format!("matching {k} [{m}] does not fit its frames")));
    }
    if let SigmaMode::Fixed(v) = mode {
        let v = v.max(sigma_floor);
        return Ok(SigmaEstimate {
            sigmas: Sigmas::Pooled(v),
            pooled: v,
            chains: 0,
            fallback: false,
        });
    }
    let moments = velocity_change_moments(seq, matchings);
    let (sum, chains) = moments
        .iter()
        .fold((0.0, 0usize), |(s, c), &(ms, mc)| (s + ms, c + mc));
    if chains == 0 {
        log::warn!("no object is linked through three frames; using sigma = {default_sigma}");
        let v = default_sigma.max(sigma_floor);
        return Ok(SigmaEstimate {
            sigmas: Sigmas::Pooled(v),
            pooled: v,
            chains,
            fallback: true,
        });
    }
    let rms = |s: f64, c: usize| (s / (2 * c) as f64).sqrt().max(sigma_floor);
    let pooled = rms(sum, chains);
    let sigmas = match mode {
        SigmaMode::Pooled => Sigmas::Pooled(pooled),
        _ => Sigmas::PerPair(
            moments
                .iter()
                .map(|&(s, c)| if c == 0 { pooled } else { rms(s, c) })
                .collect(),
        ),
    };
    Ok(SigmaEstimate {
        sigmas,
        pooled,
        chains,
        fallback: false,
    })
}
