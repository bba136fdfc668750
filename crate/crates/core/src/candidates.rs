//! Explicit sets of matching vectors searched by the chain solver.

use crate::error::{Error, Result};
use crate::matching::MatchingVector;

/// How a candidate of a reduced space was produced: the seed vector it came
/// from and the exchanged entry positions, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub seed: usize,
    pub swap: Option<(usize, usize)>,
}

/// Deduplicated candidates for one frame pair, kept in ascending
/// lexicographic order so that candidate index order is tie-break order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSpace {
    n_from: usize,
    n_to: usize,
    candidates: Vec<MatchingVector>,
    seeds: Vec<MatchingVector>,
    origins: Option<Vec<Origin>>,
}

impl CandidateSpace {
    pub fn new(n_from: usize, n_to: usize, mut candidates: Vec<MatchingVector>) -> Result<Self> {
        if let Some(bad) = candidates.iter().find(|m| !m.is_valid_for(n_from, n_to)) {
            return Err(Error::input(format!(
                "candidate [{bad}] is not valid for {n_from} -> {n_to} objects"
            )));
        }
        candidates.sort_unstable();
        candidates.dedup();
        Ok(Self {
            n_from,
            n_to,
            candidates,
            seeds: Vec::new(),
            origins: None,
        })
    }

    /// Builds a space from seeds and the candidates derived from them.
    /// Duplicates keep their first origin.
    pub(crate) fn from_derived(
        n_from: usize,
        n_to: usize,
        seeds: Vec<MatchingVector>,
        mut derived: Vec<(MatchingVector, Origin)>,
    ) -> Self {
        derived.sort_by(|a, b| a.0.cmp(&b.0));
        derived.dedup_by(|a, b| a.0 == b.0);
        let (candidates, origins) = derived.into_iter().unzip();
        Self {
            n_from,
            n_to,
            candidates,
            seeds,
            origins: Some(origins),
        }
    }

    pub fn n_from(&self) -> usize {
        self.n_from
    }

    pub fn n_to(&self) -> usize {
        self.n_to
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[MatchingVector] {
        &self.candidates
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MatchingVector> {
        self.candidates.iter()
    }

    pub fn get(&self, idx: usize) -> &MatchingVector {
        &self.candidates[idx]
    }

    pub fn index_of(&self, m: &MatchingVector) -> Option<usize> {
        self.candidates.binary_search(m).ok()
    }

    pub fn contains(&self, m: &MatchingVector) -> bool {
        self.index_of(m).is_some()
    }

    /// Seed vectors of a reduced space (empty for explicit spaces).
    pub fn seeds(&self) -> &[MatchingVector] {
        &self.seeds
    }

    pub fn origins(&self) -> Option<&[Origin]> {
        self.origins.as_deref()
    }

    pub fn is_subset_of(&self, other: &CandidateSpace) -> bool {
        self.candidates.iter().all(|m| other.contains(m))
    }

    /// The candidates with exactly `d` departures, keeping their origins.
    pub fn with_disappeared(&self, d: usize) -> CandidateSpace {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.candidates[i].disappeared() == d)
            .collect();
        CandidateSpace {
            n_from: self.n_from,
            n_to: self.n_to,
            candidates: keep.iter().map(|&i| self.candidates[i].clone()).collect(),
            seeds: self.seeds.clone(),
            origins: self
                .origins
                .as_ref()
                .map(|o| keep.iter().map(|&i| o[i]).collect()),
        }
    }
}

impl<'a> IntoIterator for &'a CandidateSpace {
    type Item = &'a MatchingVector;
    type IntoIter = std::slice::Iter<'a, MatchingVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.candidates.iter()
    }
}
