//! Brute-force references used by the tests.
//!
//! Spaces are enumerated constructively here (departure count, departing
//! positions, target subset, permutation), independently of
//! [`crate::tripartite::build_full_space`], while the likelihood terms are
//! shared with the solver.

use crate::assignment::{bipartite_cost, squared_distance_cost};
use crate::candidates::CandidateSpace;
use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::Position;
use crate::matching::MatchingVector;
use crate::tripartite::{chain_log_likelihood, full_space_size, scores_tie, NoiseModel};

pub const ENUMERATION_CAP: u128 = 100_000;
pub const PRODUCT_CAP: u128 = 1_000_000;

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Every matching vector for `n_from -> n_to` objects.
pub fn enumerate_space(n_from: usize, n_to: usize) -> Result<CandidateSpace> {
    let size = full_space_size(n_from, n_to);
    if size > ENUMERATION_CAP {
        return Err(Error::TooLarge { size, cap: ENUMERATION_CAP });
    }
    let mut out = Vec::new();
    for d in n_from.saturating_sub(n_to)..=n_from {
        for departing in combinations(n_from, d) {
            let staying: Vec<usize> = (0..n_from).filter(|i| !departing.contains(i)).collect();
            for targets in combinations(n_to, staying.len()) {
                for perm in permutations(&targets) {
                    let mut entries = vec![None; n_from];
                    for (&i, &j) in staying.iter().zip(&perm) {
                        entries[i] = Some(j);
                    }
                    out.push(MatchingVector::from_entries_unchecked(entries));
                }
            }
        }
    }
    CandidateSpace::new(n_from, n_to, out)
}

fn argmin_by<F>(space: &CandidateSpace, mut cost: F) -> Option<(MatchingVector, f64)>
where
    F: FnMut(&MatchingVector) -> Option<f64>,
{
    let mut best: Option<(MatchingVector, f64)> = None;
    for m in space {
        let Some(c) = cost(m) else { continue };
        match &best {
            Some((_, b)) if c >= *b || scores_tie(c, *b) => {}
            _ => best = Some((m.clone(), c)),
        }
    }
    best
}

/// Lexicographically smallest minimiser of the gated bipartite objective.
/// `gate = None` links as many objects as possible, then minimises distance.
pub fn exhaustive_bipartite_min(
    frame_a: &[Position],
    frame_b: &[Position],
    gate: Option<f64>,
) -> Result<(MatchingVector, f64)> {
    let space = enumerate_space(frame_a.len(), frame_b.len())?;
    let fewest = frame_a.len().saturating_sub(frame_b.len());
    let best = argmin_by(&space, |m| match gate {
        Some(t) => Some(bipartite_cost(frame_a, frame_b, m, t)),
        None => (m.disappeared() == fewest).then(|| squared_distance_cost(frame_a, frame_b, m)),
    });
    Ok(best.expect("space is never empty"))
}

/// Lexicographically smallest minimum-distance matching with `d` departures.
pub fn exhaustive_fixed_d_min(frame_a: &[Position], frame_b: &[Position], d: usize) -> Result<(MatchingVector, f64)> {
    let space = enumerate_space(frame_a.len(), frame_b.len())?;
    argmin_by(&space, |m| {
        (m.disappeared() == d).then(|| squared_distance_cost(frame_a, frame_b, m))
    })
    .ok_or_else(|| Error::input(format!("no matching with {d} departures")))
}

/// Reverse-lexicographic comparison: the last pair decides first.
pub fn reverse_lex_less(a: &[MatchingVector], b: &[MatchingVector]) -> bool {
    a.iter().rev().cmp(b.iter().rev()) == std::cmp::Ordering::Less
}

/// Global maximiser of the chain likelihood over the product of full spaces.
/// Ties go to the sequence that is smallest when compared from the last pair
/// backwards, which is the order the solver's backtrace produces.
pub fn exhaustive_chain_argmax(seq: &FrameSequence, noise: &NoiseModel) -> Result<(Vec<MatchingVector>, f64)> {
    seq.require_matchable()?;
    let counts = seq.counts();
    let spaces = counts
        .windows(2)
        .map(|w| enumerate_space(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    exhaustive_argmax_over(seq, &spaces, noise)
}

/// Same as [`exhaustive_chain_argmax`] over explicit spaces.
pub fn exhaustive_argmax_over(
    seq: &FrameSequence,
    spaces: &[CandidateSpace],
    noise: &NoiseModel,
) -> Result<(Vec<MatchingVector>, f64)> {
    let product = spaces
        .iter()
        .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
    if product > PRODUCT_CAP {
        return Err(Error::TooLarge { size: product, cap: PRODUCT_CAP });
    }
    if spaces.iter().any(|s| s.is_empty()) {
        return Err(Error::input("empty candidate space"));
    }
    let mut idx = vec![0usize; spaces.len()];
    let mut best: Option<(Vec<MatchingVector>, f64)> = None;
    loop {
        let chain: Vec<MatchingVector> = idx.iter().zip(spaces).map(|(&i, s)| s.get(i).clone()).collect();
        let score = chain_log_likelihood(seq, &chain, noise)?;
        let better = match &best {
            None => true,
            Some((b, bs)) => {
                if scores_tie(score, *bs) {
                    reverse_lex_less(&chain, b)
                } else {
                    score > *bs
                }
            }
        };
        if better {
            best = Some((chain, score));
        }
        // odometer
        let mut p = 0;
        loop {
            if p == idx.len() {
                return Ok(best.expect("product is non-empty"));
            }
            idx[p] += 1;
            if idx[p] < spaces[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
