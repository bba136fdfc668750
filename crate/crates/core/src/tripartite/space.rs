//! Full and reduced candidate spaces for one frame pair.

use serde::{Deserialize, Serialize};

use crate::assignment::solve_bmcf_fixed_d;
use crate::candidates::{CandidateSpace, Origin};
use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::matching::MatchingVector;

pub const DEFAULT_SPACE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedSpaceConfig {
    /// Half-width of the window of departure counts around the bipartite one.
    pub delta: usize,
}

impl Default for ReducedSpaceConfig {
    fn default() -> Self {
        Self { delta: 1 }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn falling(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128))
}

/// Closed-form number of matching vectors for `n_from -> n_to` objects:
/// for every feasible departure count `d`, choose the departing positions,
/// then an ordered choice of `n_from - d` targets.
pub fn full_space_size(n_from: usize, n_to: usize) -> u128 {
    (n_from.saturating_sub(n_to)..=n_from)
        .map(|d| binomial(n_from, d).saturating_mul(falling(n_to, n_from - d)))
        .fold(0u128, u128::saturating_add)
}

/// Every matching vector for `n_from -> n_to` objects, refusing when there
/// would be more than `cap`.
pub fn build_full_space(n_from: usize, n_to: usize, cap: u128) -> Result<CandidateSpace> {
    let size = full_space_size(n_from, n_to);
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut current = Vec::with_capacity(n_from);
    let mut used = vec![false; n_to];
    fill(n_from, &mut current, &mut used, &mut out);
    CandidateSpace::new(n_from, n_to, out)
}

fn fill(
    n_from: usize,
    current: &mut Vec<Option<usize>>,
    used: &mut [bool],
    out: &mut Vec<MatchingVector>,
) {
    if current.len() == n_from {
        out.push(MatchingVector::from_entries_unchecked(current.clone()));
        return;
    }
    current.push(None);
    fill(n_from, current, used, out);
    current.pop();
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            current.push(Some(j));
            fill(n_from, current, used, out);
            current.pop();
            used[j] = false;
        }
    }
}

/// Departure counts searched around `d_star`: the feasible range
/// `[max(0, n_from - n_to), n_from]` intersected with `d_star +- delta`.
pub fn departure_window(n_from: usize, n_to: usize, d_star: usize, delta: usize) -> std::ops::RangeInclusive<usize> {
    let lo = n_from.saturating_sub(n_to).max(d_star.saturating_sub(delta));
    let hi = n_from.min(d_star.saturating_add(delta));
    lo..=hi
}

/// The seed plus every vector obtained by exchanging one pair of its
/// entries. Exchanging two departures gives the seed back and is skipped.
pub fn single_swaps(seed: &MatchingVector) -> Vec<(MatchingVector, Option<(usize, usize)>)> {
    let n = seed.len();
    let mut out = Vec::with_capacity(1 + n * n.saturating_sub(1) / 2);
    out.push((seed.clone(), None));
    for i in 0..n {
        for j in i + 1..n {
            if seed.get(i) != seed.get(j) {
                out.push((seed.swapped(i, j), Some((i, j))));
            }
        }
    }
    out
}

fn assemble(n_from: usize, n_to: usize, seeds: Vec<MatchingVector>) -> CandidateSpace {
    let derived = seeds
        .iter()
        .enumerate()
        .flat_map(|(s, seed)| {
            single_swaps(seed)
                .into_iter()
                .map(move |(m, swap)| (m, Origin { seed: s, swap }))
        })
        .collect();
    CandidateSpace::from_derived(n_from, n_to, seeds, derived)
}

/// Reduced space: for every `d` in the departure window, the minimum
/// squared-distance matching with exactly `d` departures and its single
/// exchanges.
pub fn build_reduced_space(
    frame_a: &[Position],
    frame_b: &[Position],
    d_star: usize,
    cfg: &ReducedSpaceConfig,
) -> Result<CandidateSpace> {
    let (n_a, n_b) = (frame_a.len(), frame_b.len());
    let window = departure_window(n_a, n_b, d_star, cfg.delta);
    if window.is_empty() {
        return Err(Error::config(format!(
            "no feasible departure count within {} of {d_star} for {n_a} -> {n_b} objects",
            cfg.delta
        )));
    }
    let seeds = window
        .map(|d| solve_bmcf_fixed_d(frame_a, frame_b, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(n_a, n_b, seeds))
}

/// Reduced space around a given bipartite solution, which is used as the
/// seed for its own departure count.
pub fn build_reduced_space_around(
    frame_a: &[Position],
    frame_b: &[Position],
    bipartite: &MatchingVector,
    cfg: &ReducedSpaceConfig,
) -> Result<CandidateSpace> {
    let (n_a, n_b) = (frame_a.len(), frame_b.len());
    if !bipartite.is_valid_for(n_a, n_b) {
        return Err(Error::input(format!("[{bipartite}] is not valid for {n_a} -> {n_b} objects")));
    }
    let d_star = bipartite.disappeared();
    let seeds = departure_window(n_a, n_b, d_star, cfg.delta)
        .map(|d| {
            if d == d_star {
                Ok(bipartite.clone())
            } else {
                solve_bmcf_fixed_d(frame_a, frame_b, d)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(n_a, n_b, seeds))
}

/// Upper bound on the size of a reduced space: one seed and its
/// `n (n - 1) / 2` exchanges per departure count of the window.
pub fn reduced_space_bound(n_from: usize, window_len: usize) -> usize {
    window_len * (1 + n_from * n_from.saturating_sub(1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_space;
    use rand::{Rng, SeedableRng};

    fn random_frame(rng: &mut impl Rng, n: usize) -> Vec<Position> {
        (0..n)
            .map(|_| Position::new(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)))
            .collect()
    }

    #[test]
    fn full_space_sizes() {
        assert_eq!(full_space_size(2, 2), 7);
        assert_eq!(build_full_space(2, 2, DEFAULT_SPACE_CAP).unwrap().len(), 7);
        assert_eq!(build_full_space(0, 4, DEFAULT_SPACE_CAP).unwrap().len(), 1);
        let one = build_full_space(1, 1, DEFAULT_SPACE_CAP).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(full_space_size(3, 3), 34);
        assert_eq!(full_space_size(1, 0), 1);
    }

    #[test]
    fn full_space_agrees_with_enumeration() {
        for n in 0..=4 {
            for m in 0..=4 {
                let built = build_full_space(n, m, DEFAULT_SPACE_CAP).unwrap();
                let oracle = enumerate_space(n, m).unwrap();
                assert_eq!(built.candidates(), oracle.candidates(), "({n}, {m})");
            }
        }
    }

    #[test]
    fn full_space_cap() {
        assert!(matches!(build_full_space(10, 10, 1000), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn window_examples() {
        assert_eq!(departure_window(5, 4, 1, 1), 1..=2);
        assert_eq!(departure_window(3, 3, 0, 0), 0..=0);
        assert!(departure_window(3, 1, 0, 1).is_empty());
    }

    #[test]
    fn reduced_space_three_objects() {
        let a = vec![Position::new(0.0, 0.0), Position::new(10.0, 0.0), Position::new(20.0, 0.0)];
        let b = vec![Position::new(1.0, 0.0), Position::new(11.0, 0.0), Position::new(21.0, 0.0)];
        let s = build_reduced_space(&a, &b, 0, &ReducedSpaceConfig { delta: 0 }).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.seeds().len(), 1);
    }

    #[test]
    fn reduced_space_single_object() {
        let a = vec![Position::new(0.0, 0.0)];
        let b = vec![Position::new(1.0, 0.0)];
        let s = build_reduced_space(&a, &b, 0, &ReducedSpaceConfig { delta: 1 }).unwrap();
        // one element per departure count d in {0, 1}
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn empty_window_is_config_error() {
        let a = vec![Position::new(0.0, 0.0), Position::new(1.0, 0.0), Position::new(2.0, 0.0)];
        let b = vec![Position::new(0.0, 0.0)];
        let err = build_reduced_space(&a, &b, 0, &ReducedSpaceConfig { delta: 1 });
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn reduced_space_properties() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (n_a, n_b) = (rng.random_range(0..=8), rng.random_range(0..=8));
            let a = random_frame(&mut rng, n_a);
            let b = random_frame(&mut rng, n_b);
            let lo = n_a.saturating_sub(n_b);
            let d_star = rng.random_range(lo..=n_a);
            let mut previous: Option<CandidateSpace> = None;
            for delta in 0..=3 {
                let s = build_reduced_space(&a, &b, d_star, &ReducedSpaceConfig { delta }).unwrap();
                let window = departure_window(n_a, n_b, d_star, delta);
                let w = window.clone().count();
                assert!(s.len() <= reduced_space_bound(n_a, w));
                assert!(s.len() <= (2 * delta + 1) * (1 + n_a * n_a.saturating_sub(1) / 2));
                for m in s.iter() {
                    assert!(m.is_valid_for(n_a, n_b));
                    assert!(window.contains(&m.disappeared()));
                }
                let origins = s.origins().unwrap();
                for (m, o) in s.iter().zip(origins) {
                    let seed = &s.seeds()[o.seed];
                    let rebuilt = o.swap.map_or(seed.clone(), |(i, j)| seed.swapped(i, j));
                    assert_eq!(&rebuilt, m);
                }
                if let Some(p) = &previous {
                    assert!(p.is_subset_of(&s));
                }
                previous = Some(s);
            }
        }
    }
}
