//! Forward recursion over candidate spaces with backtrace.
//!
//! `m_0(x) = h_1(x)` and `m_k(x) = max_y m_{k-1}(y) + h_k(y, x)`, where `y`
//! ranges over the previous pair's space. Ties keep the smallest `y` and,
//! at the end, the smallest `x`, so among equally good chains the one that
//! is smallest compared from the last pair backwards is returned.

use rayon::prelude::*;
use serde::Serialize;

use crate::candidates::CandidateSpace;
use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::matching::MatchingVector;

use super::likelihood::{NoiseModel, TripleContext};

/// Predecessors handled per parallel task. Fixed so that results do not
/// depend on the number of threads.
const CHUNK: usize = 64;

/// Two scores closer than this relative tolerance are treated as equal.
pub fn scores_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[inline]
fn beats(new: f64, old: f64) -> bool {
    new > old && !scores_tie(new, old)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpOptions {
    /// Score exchanged candidates from their seed instead of from scratch.
    pub incremental: bool,
    pub parallel: bool,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            incremental: true,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    /// Candidate scores computed, one per (predecessor, candidate) pair.
    pub triple_evaluations: u64,
    /// Of those, the ones computed by summing every object's term.
    pub full_evaluations: u64,
    /// Of those, the ones derived from a seed score by one exchange.
    pub incremental_evaluations: u64,
}

impl std::ops::AddAssign for EvalStats {
    fn add_assign(&mut self, o: Self) {
        self.triple_evaluations += o.triple_evaluations;
        self.full_evaluations += o.full_evaluations;
        self.incremental_evaluations += o.incremental_evaluations;
    }
}

/// Best cumulative score of every candidate and the predecessor index that
/// attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    scores: Vec<Vec<f64>>,
    back: Vec<Vec<usize>>,
}

impl DpTable {
    pub fn scores(&self, k: usize) -> &[f64] {
        &self.scores[k]
    }

    /// Backpointers of pair `k >= 1` into the space of pair `k - 1`.
    pub fn backpointers(&self, k: usize) -> &[usize] {
        &self.back[k]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub matchings: Vec<MatchingVector>,
    pub score: f64,
    pub table: DpTable,
    pub stats: EvalStats,
}

/// Object terms of one context laid out as `[i][target + 1]`, departure
/// first.
struct TermTable {
    width: usize,
    terms: Vec<f64>,
    arrival: f64,
}

impl TermTable {
    fn new(ctx: &TripleContext<'_>, n_to: usize, lambda: f64) -> Self {
        let width = n_to + 1;
        let mut terms = Vec::with_capacity(ctx.len() * width);
        for i in 0..ctx.len() {
            terms.push(ctx.object_term(i, None));
            for j in 0..n_to {
                terms.push(ctx.object_term(i, Some(j)));
            }
        }
        Self {
            width,
            terms,
            arrival: lambda,
        }
    }

    #[inline]
    fn term(&self, i: usize, t: Option<usize>) -> f64 {
        self.terms[i * self.width + t.map_or(0, |j| j + 1)]
    }

    fn score(&self, m: &MatchingVector) -> f64 {
        m.entries()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.term(i, t))
            .sum::<f64>()
            + self.arrival * m.appeared(self.width - 1) as f64
    }

    #[inline]
    fn swapped(&self, seed_score: f64, seed: &MatchingVector, (i, j): (usize, usize)) -> f64 {
        let (ti, tj) = (seed.get(i), seed.get(j));
        seed_score - self.term(i, ti) - self.term(j, tj) + self.term(i, tj) + self.term(j, ti)
    }
}

/// Scores `h(y, x)` of every candidate `x` of `space` under one context.
fn score_space(
    ctx: &TripleContext<'_>,
    space: &CandidateSpace,
    lambda: f64,
    incremental: bool,
    out: &mut Vec<f64>,
    stats: &mut EvalStats,
) {
    out.clear();
    let n = space.len() as u64;
    stats.triple_evaluations += n;
    match (incremental, space.origins()) {
        (true, Some(origins)) => {
            let table = TermTable::new(ctx, space.n_to(), lambda);
            let seed_scores: Vec<f64> = space.seeds().iter().map(|s| table.score(s)).collect();
            let mut full = 0;
            for o in origins {
                let seed = &space.seeds()[o.seed];
                out.push(match o.swap {
                    None => {
                        full += 1;
                        seed_scores[o.seed]
                    }
                    Some(swap) => table.swapped(seed_scores[o.seed], seed, swap),
                });
            }
            stats.full_evaluations += full;
            stats.incremental_evaluations += n - full;
        }
        _ => {
            out.extend(space.iter().map(|x| ctx.score(x)));
            stats.full_evaluations += n;
        }
    }
}

fn check_spaces(seq: &FrameSequence, spaces: &[CandidateSpace]) -> Result<()> {
    seq.require_matchable()?;
    if spaces.len() != seq.pair_count() {
        return Err(Error::input(format!(
            "{} candidate spaces for {} frame pairs",
            spaces.len(),
            seq.pair_count()
        )));
    }
    for (k, s) in spaces.iter().enumerate() {
        let (a, b) = (seq.frame(k).len(), seq.frame(k + 1).len());
        if s.is_empty() {
            return Err(Error::input(format!("candidate space {k} is empty")));
        }
        if s.n_from() != a || s.n_to() != b {
            return Err(Error::input(format!(
                "candidate space {k} is for {} -> {} objects, frames have {a} -> {b}",
                s.n_from(),
                s.n_to()
            )));
        }
    }
    Ok(())
}

/// Maximises the chain likelihood over the product of `spaces`.
pub fn solve_dp(seq: &FrameSequence, spaces: &[CandidateSpace], noise: &NoiseModel) -> Result<DpSolution> {
    solve_dp_with(seq, spaces, noise, DpOptions::default())
}

pub fn solve_dp_with(
    seq: &FrameSequence,
    spaces: &[CandidateSpace],
    noise: &NoiseModel,
    opts: DpOptions,
) -> Result<DpSolution> {
    check_spaces(seq, spaces)?;
    let lambda = noise.lambda_event();
    let mut stats = EvalStats::default();

    let mut first = Vec::new();
    score_space(&TripleContext::first(seq, noise), &spaces[0], lambda, opts.incremental, &mut first, &mut stats);
    let mut scores = vec![first];
    let mut back = vec![Vec::new()];

    for k in 1..spaces.len() {
        let (prev_space, space) = (&spaces[k - 1], &spaces[k]);
        let prev_scores = &scores[k - 1];
        let chunk_best = |start: usize| -> (Vec<f64>, Vec<usize>, EvalStats) {
            let end = (start + CHUNK).min(prev_space.len());
            let mut best = vec![f64::NEG_INFINITY; space.len()];
            let mut arg = vec![usize::MAX; space.len()];
            let mut local = EvalStats::default();
            let mut h = Vec::with_capacity(space.len());
            for (y, &base) in prev_scores.iter().enumerate().take(end).skip(start) {
                let ctx = TripleContext::triple(seq, k, prev_space.get(y), noise);
                score_space(&ctx, space, lambda, opts.incremental, &mut h, &mut local);
                for (x, &hx) in h.iter().enumerate() {
                    let total = base + hx;
                    if arg[x] == usize::MAX || beats(total, best[x]) {
                        best[x] = total;
                        arg[x] = y;
                    }
                }
            }
            (best, arg, local)
        };
        let starts: Vec<usize> = (0..prev_space.len()).step_by(CHUNK).collect();
        let parts: Vec<_> = if opts.parallel {
            starts.par_iter().map(|&s| chunk_best(s)).collect()
        } else {
            starts.iter().map(|&s| chunk_best(s)).collect()
        };
        let mut best = vec![f64::NEG_INFINITY; space.len()];
        let mut arg = vec![usize::MAX; space.len()];
        for (b, a, local) in parts {
            stats += local;
            for x in 0..space.len() {
                if arg[x] == usize::MAX || beats(b[x], best[x]) {
                    best[x] = b[x];
                    arg[x] = a[x];
                }
            }
        }
        scores.push(best);
        back.push(arg);
    }

    let last = scores.last().expect("at least one pair");
    let mut x = 0;
    for (i, &s) in last.iter().enumerate().skip(1) {
        if beats(s, last[x]) {
            x = i;
        }
    }
    let score = last[x];
    let mut idx = vec![0usize; spaces.len()];
    for k in (0..spaces.len()).rev() {
        idx[k] = x;
        if k > 0 {
            x = back[k][x];
        }
    }
    let matchings = idx.iter().zip(spaces).map(|(&i, s)| s.get(i).clone()).collect();
    Ok(DpSolution {
        matchings,
        score,
        table: DpTable { scores, back },
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Position;
    use crate::oracle::{exhaustive_argmax_over, exhaustive_chain_argmax};
    use crate::tripartite::{
        build_full_space, build_reduced_space, chain_log_likelihood, pair_log_likelihood_first,
        ReducedSpaceConfig, DEFAULT_SPACE_CAP,
    };
    use rand::{Rng, SeedableRng};

    fn full_spaces(seq: &FrameSequence) -> Vec<CandidateSpace> {
        seq.counts()
            .windows(2)
            .map(|w| build_full_space(w[0], w[1], DEFAULT_SPACE_CAP).unwrap())
            .collect()
    }

    fn random_seq(rng: &mut impl Rng, f: usize, max_n: usize, extent: f64) -> FrameSequence {
        let frames = (0..f)
            .map(|_| {
                let n = rng.random_range(0..=max_n);
                (0..n)
                    .map(|_| Position::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent)))
                    .collect()
            })
            .collect();
        FrameSequence::new(frames).unwrap()
    }

    #[test]
    fn two_frames_is_pair_argmax() {
        let seq = FrameSequence::new(vec![
            vec![Position::new(0.0, 0.0), Position::new(5.0, 0.0)],
            vec![Position::new(5.5, 0.0), Position::new(0.5, 0.0)],
        ])
        .unwrap();
        let noise = NoiseModel::pooled(1.0, -10.0).unwrap();
        let spaces = full_spaces(&seq);
        let sol = solve_dp(&seq, &spaces, &noise).unwrap();
        let best = spaces[0]
            .iter()
            .map(|m| pair_log_likelihood_first(&seq, m, &noise).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((sol.score - best).abs() < 1e-12);
        assert_eq!(sol.matchings[0], MatchingVector::from_signed(&[2, 1], 2).unwrap());
    }

    #[test]
    fn four_frames_two_objects_matches_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let frames = (0..4)
                .map(|_| {
                    (0..2)
                        .map(|_| Position::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
                        .collect()
                })
                .collect();
            let seq = FrameSequence::new(frames).unwrap();
            let noise = NoiseModel::pooled(2.0, -8.0).unwrap();
            let sol = solve_dp(&seq, &full_spaces(&seq), &noise).unwrap();
            let (m, s) = exhaustive_chain_argmax(&seq, &noise).unwrap();
            assert!(scores_tie(sol.score, s));
            assert_eq!(sol.matchings, m);
        }
    }

    #[test]
    fn random_small_instances_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let f = rng.random_range(2..=4);
            let seq = random_seq(&mut rng, f, 3, 8.0);
            let noise = NoiseModel::pooled(rng.random_range(0.5..3.0), -rng.random_range(1.0..20.0)).unwrap();
            let sol = solve_dp(&seq, &full_spaces(&seq), &noise).unwrap();
            let (m, s) = exhaustive_chain_argmax(&seq, &noise).unwrap();
            assert!(scores_tie(sol.score, s), "{} vs {}", sol.score, s);
            assert_eq!(sol.matchings, m);
            let recomputed = chain_log_likelihood(&seq, &sol.matchings, &noise).unwrap();
            assert!(scores_tie(recomputed, sol.score));
        }
    }

    #[test]
    fn ties_follow_reverse_lex_order() {
        // Identical positions everywhere: every full-link chain scores the same.
        let p = Position::new(1.0, 1.0);
        let seq = FrameSequence::new(vec![vec![p, p], vec![p, p], vec![p, p]]).unwrap();
        let noise = NoiseModel::pooled(1.0, -100.0).unwrap();
        let sol = solve_dp(&seq, &full_spaces(&seq), &noise).unwrap();
        let (m, _) = exhaustive_chain_argmax(&seq, &noise).unwrap();
        assert_eq!(sol.matchings, m);
        let id = MatchingVector::from_signed(&[1, 2], 2).unwrap();
        assert_eq!(sol.matchings, vec![id.clone(), id]);
    }

    #[test]
    fn crossing_recovered_with_full_spaces() {
        let seq = FrameSequence::new(vec![
            vec![Position::new(0.0, 0.0), Position::new(6.0, 0.0)],
            vec![Position::new(4.0, 0.0), Position::new(-2.0, 0.0)],
            vec![Position::new(8.0, 0.0), Position::new(-10.0, 0.0)],
        ])
        .unwrap();
        let noise = NoiseModel::pooled(4.0, -60.0).unwrap();
        let sol = solve_dp(&seq, &full_spaces(&seq), &noise).unwrap();
        let id = MatchingVector::from_signed(&[1, 2], 2).unwrap();
        assert_eq!(sol.matchings, vec![id.clone(), id]);
    }

    #[test]
    fn incremental_equals_full_and_parallel_equals_serial() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let seq = random_seq(&mut rng, 6, 7, 30.0);
            let noise = NoiseModel::pooled(rng.random_range(0.5..3.0), -rng.random_range(5.0..30.0)).unwrap();
            let spaces: Vec<CandidateSpace> = (0..seq.pair_count())
                .map(|k| {
                    let (a, b) = (seq.frame(k), seq.frame(k + 1));
                    let d = a.len().saturating_sub(b.len());
                    build_reduced_space(a, b, d, &ReducedSpaceConfig { delta: 2 }).unwrap()
                })
                .collect();
            let run = |incremental, parallel| {
                solve_dp_with(&seq, &spaces, &noise, DpOptions { incremental, parallel }).unwrap()
            };
            let base = run(false, false);
            for (inc, par) in [(true, false), (true, true), (false, true)] {
                let other = run(inc, par);
                assert_eq!(other.matchings, base.matchings);
                assert!((other.score - base.score).abs() < 1e-9);
                assert_eq!(other.stats.triple_evaluations, base.stats.triple_evaluations);
            }
            let (m, s) = exhaustive_argmax_over(&seq, &spaces, &noise)
                .unwrap_or_else(|_| (base.matchings.clone(), base.score));
            assert!(scores_tie(s, base.score));
            assert_eq!(m, base.matchings);
        }
    }

    #[test]
    fn evaluation_counts() {
        let seq = FrameSequence::new(vec![vec![Position::new(0.0, 0.0)]; 4]).unwrap();
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let spaces = full_spaces(&seq);
        let sol = solve_dp(&seq, &spaces, &noise).unwrap();
        // 2 + 2*2 + 2*2
        assert_eq!(sol.stats.triple_evaluations, 10);
        assert_eq!(sol.table.len(), 3);
    }

    #[test]
    fn bad_spaces_rejected() {
        let seq = FrameSequence::new(vec![vec![Position::new(0.0, 0.0)]; 3]).unwrap();
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let one = build_full_space(1, 1, DEFAULT_SPACE_CAP).unwrap();
        assert!(solve_dp(&seq, std::slice::from_ref(&one), &noise).is_err());
        let empty = CandidateSpace::new(1, 1, vec![]).unwrap();
        assert!(solve_dp(&seq, &[one, empty], &noise).is_err());
    }
}
