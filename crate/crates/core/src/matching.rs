//! Matching vectors: the association between two consecutive frames.
//!
//! Entry `i` of a matching vector for the pair `(k, k+1)` is either the index
//! of the object in frame `k+1` that object `i` of frame `k` becomes, or
//! `None` when the object leaves the visible region. Indices are 0-based in
//! memory; the external (signed) form is 1-based with `-1` for a departure.
//!
//! The derived ordering is lexicographic with a departure sorting before any
//! target, which is the tie-break order used throughout the crate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel used by the signed external representation.
pub const DISAPPEAR: i64 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct MatchingVector(Vec<Option<usize>>);

impl MatchingVector {
    /// Builds a vector whose targets index a frame of `n_next` objects.
    pub fn new(entries: Vec<Option<usize>>, n_next: usize) -> Result<Self> {
        let mut used = vec![false; n_next];
        for (i, e) in entries.iter().enumerate() {
            if let Some(j) = *e {
                if j >= n_next {
                    return Err(Error::input(format!(
                        "entry {i} targets object {j} but the next frame has {n_next} objects"
                    )));
                }
                if std::mem::replace(&mut used[j], true) {
                    return Err(Error::input(format!(
                        "target {j} is used more than once"
                    )));
                }
            }
        }
        Ok(Self(entries))
    }

    /// Injectivity only; used where the target frame size is not at hand.
    pub(crate) fn from_entries_unchecked(entries: Vec<Option<usize>>) -> Self {
        debug_assert!({
            let mut seen = std::collections::HashSet::new();
            entries.iter().flatten().all(|j| seen.insert(*j))
        });
        Self(entries)
    }

    /// Parses the 1-based signed form, `-1` meaning the object departs.
    pub fn from_signed(entries: &[i64], n_next: usize) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|&e| match e {
                DISAPPEAR => Ok(None),
                e if e >= 1 => Ok(Some((e - 1) as usize)),
                e => Err(Error::input(format!("invalid matching entry {e}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed, n_next)
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.0
            .iter()
            .map(|e| e.map_or(DISAPPEAR, |j| j as i64 + 1))
            .collect()
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<usize> {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of departures (`d` in the decomposition of the space).
    pub fn disappeared(&self) -> usize {
        self.0.iter().filter(|e| e.is_none()).count()
    }

    pub fn matched(&self) -> usize {
        self.0.len() - self.disappeared()
    }

    /// Objects of the next frame that have no predecessor.
    pub fn appeared(&self, n_next: usize) -> usize {
        n_next - self.matched()
    }

    pub fn is_valid_for(&self, n_from: usize, n_next: usize) -> bool {
        self.0.len() == n_from && Self::new(self.0.clone(), n_next).is_ok()
    }

    /// For each object of the next frame, the object of this frame mapped to it.
    pub fn predecessors(&self, n_next: usize) -> Vec<Option<usize>> {
        let mut pred = vec![None; n_next];
        for (i, e) in self.0.iter().enumerate() {
            if let Some(j) = *e {
                pred[j] = Some(i);
            }
        }
        pred
    }

    /// The vector with entries `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut v = self.0.clone();
        v.swap(i, j);
        Self(v)
    }

    /// Binary `n_from x n_next` matrix with a 1 at `(i, j)` when `i -> j`.
    pub fn to_matrix(&self, n_next: usize) -> Result<Vec<Vec<u8>>> {
        let mut m = vec![vec![0u8; n_next]; self.0.len()];
        for (i, e) in self.0.iter().enumerate() {
            if let Some(j) = *e {
                if j >= n_next {
                    return Err(Error::input(format!(
                        "entry {i} targets object {j} but the next frame has {n_next} objects"
                    )));
                }
                m[i][j] = 1;
            }
        }
        Ok(m)
    }

    /// Inverse of [`MatchingVector::to_matrix`]; rejects matrices with a row
    /// or column sum above one.
    pub fn from_matrix(matrix: &[Vec<u8>]) -> Result<Self> {
        let n_next = matrix.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(matrix.len());
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n_next {
                return Err(Error::input(format!("row {i} has a different width")));
            }
            let mut target = None;
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 if target.is_none() => target = Some(j),
                    1 => return Err(Error::input(format!("row {i} has more than one 1"))),
                    b => return Err(Error::input(format!("non-binary entry {b} at ({i}, {j})"))),
                }
            }
            entries.push(target);
        }
        Self::new(entries, n_next)
    }
}

impl fmt::Display for MatchingVector {
    /// Space separated signed form, the format of the matching dump.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in self.to_signed() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<i64>> for MatchingVector {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        let n_next = v.iter().copied().max().unwrap_or(0).max(0) as usize;
        Self::from_signed(&v, n_next)
    }
}

impl From<MatchingVector> for Vec<i64> {
    fn from(m: MatchingVector) -> Self {
        m.to_signed()
    }
}

/// `count_disappeared`: number of departure entries of `m`.
pub fn count_disappeared(m: &MatchingVector) -> usize {
    m.disappeared()
}
