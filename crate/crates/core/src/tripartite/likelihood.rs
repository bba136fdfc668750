//! Log-likelihood of the velocity (tripartite) model.
//!
//! Every object of the middle frame contributes one term:
//!
//! * linked forward and backward: isotropic Gaussian on the change of
//!   velocity, variance `sigma_k^2`;
//! * linked forward only (it arrived in the middle frame): Gaussian on the
//!   displacement with zero prior velocity, variance `dt^2 sigma_k^2`;
//! * departing: the event penalty `lambda_event`.
//!
//! Each arrival into the last frame also pays `lambda_event`. The first pair
//! is the same sum with no backward links, so summing the first-pair term and
//! every triple term counts each event exactly once.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::FrameSequence;
use crate::geometry::{Position, Velocity};
use crate::matching::MatchingVector;

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

/// Per-pair standard deviations of the velocity change and the event penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    sigmas: Sigmas,
    lambda_event: f64,
    sigma_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigmas {
    Pooled(f64),
    /// One value per frame pair `(k, k+1)`.
    PerPair(Vec<f64>),
}

impl NoiseModel {
    pub fn pooled(sigma: f64, lambda_event: f64) -> Result<Self> {
        Self::new(Sigmas::Pooled(sigma), lambda_event, DEFAULT_SIGMA_FLOOR)
    }

    pub fn per_pair(sigmas: Vec<f64>, lambda_event: f64) -> Result<Self> {
        Self::new(Sigmas::PerPair(sigmas), lambda_event, DEFAULT_SIGMA_FLOOR)
    }

    pub fn new(sigmas: Sigmas, lambda_event: f64, sigma_floor: f64) -> Result<Self> {
        if !(sigma_floor.is_finite() && sigma_floor > 0.0) {
            return Err(Error::config(format!("sigma floor must be positive, got {sigma_floor}")));
        }
        if !lambda_event.is_finite() {
            return Err(Error::config(format!("event penalty must be finite, got {lambda_event}")));
        }
        let values: &[f64] = match &sigmas {
            Sigmas::Pooled(s) => std::slice::from_ref(s),
            Sigmas::PerPair(v) => v,
        };
        if let Some(s) = values.iter().find(|s| !(s.is_finite() && **s >= sigma_floor)) {
            return Err(Error::config(format!(
                "sigma {s} is below the floor {sigma_floor} or not finite"
            )));
        }
        Ok(Self {
            sigmas,
            lambda_event,
            sigma_floor,
        })
    }

    /// Standard deviation used for the pair `(k, k+1)`.
    pub fn sigma(&self, k: usize) -> f64 {
        match &self.sigmas {
            Sigmas::Pooled(s) => *s,
            Sigmas::PerPair(v) => v.get(k).or(v.last()).copied().unwrap_or(1.0),
        }
    }

    pub fn sigmas(&self) -> &Sigmas {
        &self.sigmas
    }

    pub fn lambda_event(&self) -> f64 {
        self.lambda_event
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    /// The same model with every sigma multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let sigmas = match &self.sigmas {
            Sigmas::Pooled(s) => Sigmas::Pooled(s * c),
            Sigmas::PerPair(v) => Sigmas::PerPair(v.iter().map(|s| s * c).collect()),
        };
        Self::new(sigmas, self.lambda_event, self.sigma_floor.min(self.sigma_floor * c))
    }
}

/// Log-density of an isotropic bivariate normal with per-axis variance `var`
/// at a point at squared distance `sq` from the mean.
pub fn log_normal_2d(sq: f64, var: f64) -> f64 {
    -(2.0 * PI).ln() - var.ln() - sq / (2.0 * var)
}

/// Log-density of the position model for a displacement of squared length
/// `sq`, which is the default event penalty when `sq` is the gate cost.
pub fn position_log_density(sq: f64, sigma: f64, dt: f64) -> f64 {
    log_normal_2d(sq, dt * dt * sigma * sigma)
}

/// Per-object terms for the triple `(k-1, k, k+1)` given the backward links.
///
/// Holds the velocity each object of frame `k` arrived with, so that the
/// score of any forward matching vector is a sum of independent terms.
pub struct TripleContext<'a> {
    cur: &'a [Position],
    next: &'a [Position],
    prior: Vec<Option<Velocity>>,
    var_velocity: f64,
    var_position: f64,
    dt: f64,
    lambda: f64,
}

impl<'a> TripleContext<'a> {
    /// Context for the first pair: no object has a known velocity.
    pub fn first(seq: &'a FrameSequence, noise: &NoiseModel) -> Self {
        Self::build(seq, 0, None, noise)
    }

    /// Context for the triple centred on frame `k >= 1`, `m_prev` linking
    /// frame `k-1` to `k`.
    pub fn triple(seq: &'a FrameSequence, k: usize, m_prev: &MatchingVector, noise: &NoiseModel) -> Self {
        Self::build(seq, k, Some(m_prev), noise)
    }

    fn build(seq: &'a FrameSequence, k: usize, m_prev: Option<&MatchingVector>, noise: &NoiseModel) -> Self {
        let cur = seq.frame(k);
        let next = seq.frame(k + 1);
        let dt = seq.dt();
        let mut prior = vec![None; cur.len()];
        if let Some(m) = m_prev {
            let prev = seq.frame(k - 1);
            for (i, e) in m.entries().iter().enumerate() {
                if let Some(j) = *e {
                    prior[j] = Some(prev[i].velocity_to(&cur[j], dt));
                }
            }
        }
        let sigma = noise.sigma(k);
        Self {
            cur,
            next,
            prior,
            var_velocity: sigma * sigma,
            var_position: dt * dt * sigma * sigma,
            dt,
            lambda: noise.lambda_event(),
        }
    }

    /// Contribution of object `i` of the middle frame moving to `target`.
    #[inline]
    pub fn object_term(&self, i: usize, target: Option<usize>) -> f64 {
        let Some(j) = target else {
            return self.lambda;
        };
        let from = &self.cur[i];
        let to = &self.next[j];
        match self.prior[i] {
            Some(v) => {
                let dv = from.velocity_to(to, self.dt) - v;
                log_normal_2d(dv.norm_squared(), self.var_velocity)
            }
            None => log_normal_2d(from.squared_distance(to), self.var_position),
        }
    }

    pub fn arrival_term(&self, m_next: &MatchingVector) -> f64 {
        self.lambda * m_next.appeared(self.next.len()) as f64
    }

    /// Score of `m_next`, assumed valid for the middle and last frames.
    pub fn score(&self, m_next: &MatchingVector) -> f64 {
        m_next
            .entries()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.object_term(i, t))
            .sum::<f64>()
            + self.arrival_term(m_next)
    }

    /// Score of `seed` with entries `i` and `j` exchanged, from the score of
    /// `seed` itself. Only the two exchanged objects change their terms and
    /// the arrival count is unchanged.
    #[inline]
    pub fn swapped_score(&self, seed_score: f64, seed: &MatchingVector, (i, j): (usize, usize)) -> f64 {
        let (ti, tj) = (seed.get(i), seed.get(j));
        if ti == tj {
            return seed_score;
        }
        seed_score - self.object_term(i, ti) - self.object_term(j, tj)
            + self.object_term(i, tj)
            + self.object_term(j, ti)
    }

    pub fn len(&self) -> usize {
        self.cur.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cur.is_empty()
    }
}

fn check(seq: &FrameSequence, k: usize, m: &MatchingVector, what: &str) -> Result<()> {
    if k + 1 >= seq.len() {
        return Err(Error::input(format!("frame pair {k} is outside a sequence of {} frames", seq.len())));
    }
    let (a, b) = (seq.frame(k).len(), seq.frame(k + 1).len());
    if !m.is_valid_for(a, b) {
        return Err(Error::input(format!("{what} [{m}] is not valid for {a} -> {b} objects")));
    }
    Ok(())
}

/// Score of the first pair, every object starting at rest.
pub fn pair_log_likelihood_first(seq: &FrameSequence, m12: &MatchingVector, noise: &NoiseModel) -> Result<f64> {
    check(seq, 0, m12, "first matching")?;
    Ok(TripleContext::first(seq, noise).score(m12))
}

/// Score of the triple centred on frame `k`: `m_prev` links `k-1 -> k`,
/// `m_next` links `k -> k+1`.
pub fn triple_log_likelihood(
    seq: &FrameSequence,
    k: usize,
    m_prev: &MatchingVector,
    m_next: &MatchingVector,
    noise: &NoiseModel,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::input("a triple needs a middle frame k >= 1"));
    }
    check(seq, k - 1, m_prev, "backward matching")?;
    check(seq, k, m_next, "forward matching")?;
    Ok(TripleContext::triple(seq, k, m_prev, noise).score(m_next))
}

/// Score of `m_next` with positions `swap` exchanged, from the precomputed
/// score `base` of `seed` under the same backward links.
pub fn incremental_triple_score(
    ctx: &TripleContext<'_>,
    base: f64,
    seed: &MatchingVector,
    swap: (usize, usize),
) -> f64 {
    ctx.swapped_score(base, seed, swap)
}

/// Whole-chain objective: first-pair score plus every triple score.
pub fn chain_log_likelihood(seq: &FrameSequence, matchings: &[MatchingVector], noise: &NoiseModel) -> Result<f64> {
    seq.require_matchable()?;
    if matchings.len() != seq.pair_count() {
        return Err(Error::input(format!(
            "{} matching vectors for {} frame pairs",
            matchings.len(),
            seq.pair_count()
        )));
    }
    let mut total = pair_log_likelihood_first(seq, &matchings[0], noise)?;
    for k in 1..matchings.len() {
        total += triple_log_likelihood(seq, k, &matchings[k - 1], &matchings[k], noise)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn seq(frames: &[&[(f64, f64)]]) -> FrameSequence {
        FrameSequence::new(frames.iter().map(|f| f.iter().map(|&p| p.into()).collect()).collect()).unwrap()
    }

    fn mv(signed: &[i64], n_next: usize) -> MatchingVector {
        MatchingVector::from_signed(signed, n_next).unwrap()
    }

    const LOG_2PI: f64 = 1.837_877_066_409_345_3;

    #[test]
    fn first_pair_at_rest() {
        let s = seq(&[&[(0.0, 0.0)], &[(0.0, 0.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let v = pair_log_likelihood_first(&s, &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(v, -LOG_2PI, epsilon = 1e-12);
        assert_abs_diff_eq!(v, -1.83788, epsilon = 1e-5);
    }

    #[test]
    fn first_pair_only_arrival() {
        let s = seq(&[&[], &[(0.0, 0.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let v = pair_log_likelihood_first(&s, &MatchingVector::default(), &noise).unwrap();
        assert_eq!(v, -5.0);
    }

    #[test]
    fn first_pair_displacement() {
        let s = seq(&[&[(0.0, 0.0)], &[(3.0, 4.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let v = pair_log_likelihood_first(&s, &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(v, -LOG_2PI - 12.5, epsilon = 1e-12);
    }

    #[test]
    fn triple_constant_velocity() {
        let s = seq(&[&[(0.0, 0.0)], &[(1.0, 0.0)], &[(2.0, 0.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let v = triple_log_likelihood(&s, 1, &mv(&[1], 1), &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(v, -LOG_2PI, epsilon = 1e-12);
    }

    #[test]
    fn triple_turn() {
        let s = seq(&[&[(0.0, 0.0)], &[(1.0, 0.0)], &[(1.0, 1.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        let v = triple_log_likelihood(&s, 1, &mv(&[1], 1), &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(v, -LOG_2PI - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triple_prefers_smooth_crossing() {
        // A: (0,0) -> (4,0) -> (8,0); B: (6,0) -> (-2,0) -> (-10,0).
        let s = seq(&[
            &[(0.0, 0.0), (6.0, 0.0)],
            &[(4.0, 0.0), (-2.0, 0.0)],
            &[(8.0, 0.0), (-10.0, 0.0)],
        ]);
        let noise = NoiseModel::pooled(1.0, -1e3).unwrap();
        let truth = mv(&[1, 2], 2);
        let t = triple_log_likelihood(&s, 1, &truth, &truth, &noise).unwrap();
        let w = triple_log_likelihood(&s, 1, &truth, &mv(&[2, 1], 2), &noise).unwrap();
        assert!(t > w);
    }

    #[test]
    fn events_and_arrivals() {
        // Object departs; a new object arrives in the last frame; a second
        // object arrived in the middle frame and moves on at rest.
        let s = seq(&[&[(0.0, 0.0)], &[(1.0, 0.0), (50.0, 50.0)], &[(51.0, 50.0), (9.0, 9.0)]]);
        let noise = NoiseModel::pooled(2.0, -7.0).unwrap();
        let v = triple_log_likelihood(&s, 1, &mv(&[1], 2), &mv(&[-1, 1], 2), &noise).unwrap();
        let expected = -7.0 + position_log_density(1.0, 2.0, 1.0) - 7.0;
        assert_abs_diff_eq!(v, expected, epsilon = 1e-12);
    }

    #[test]
    fn velocity_uses_dt() {
        let frames = vec![
            vec![Position::new(0.0, 0.0)],
            vec![Position::new(2.0, 0.0)],
            vec![Position::new(4.0, 2.0)],
        ];
        let s = FrameSequence::with_dt(frames, 2.0).unwrap();
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        // velocities (1,0) then (1,1): change (0,1).
        let v = triple_log_likelihood(&s, 1, &mv(&[1], 1), &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(v, -LOG_2PI - 0.5, epsilon = 1e-12);
        // first pair: displacement 2, variance dt^2 = 4.
        let f = pair_log_likelihood_first(&s, &mv(&[1], 1), &noise).unwrap();
        assert_abs_diff_eq!(f, log_normal_2d(4.0, 4.0), epsilon = 1e-12);
    }

    #[test]
    fn invalid_vectors_rejected() {
        let s = seq(&[&[(0.0, 0.0)], &[(1.0, 0.0)], &[(2.0, 0.0)]]);
        let noise = NoiseModel::pooled(1.0, -5.0).unwrap();
        assert!(pair_log_likelihood_first(&s, &mv(&[1, -1], 1), &noise).is_err());
        assert!(triple_log_likelihood(&s, 0, &mv(&[1], 1), &mv(&[1], 1), &noise).is_err());
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::pooled(0.0, -1.0).is_err());
        assert!(NoiseModel::pooled(1.0, f64::NEG_INFINITY).is_err());
        assert!(NoiseModel::per_pair(vec![1.0, 1e-9], -1.0).is_err());
        let m = NoiseModel::per_pair(vec![1.0, 2.0], -1.0).unwrap();
        assert_eq!(m.sigma(1), 2.0);
        assert_eq!(m.scaled(10.0).unwrap().sigma(1), 20.0);
    }

    #[test]
    fn swapped_score_matches_full() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let counts: Vec<usize> = (0..3).map(|_| rng.random_range(4..=6)).collect();
            let frames: Vec<Vec<Position>> = counts
                .iter()
                .map(|&n| {
                    (0..n)
                        .map(|_| Position::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)))
                        .collect()
                })
                .collect();
            let s = FrameSequence::new(frames).unwrap();
            let noise = NoiseModel::pooled(rng.random_range(0.5..3.0), -rng.random_range(1.0..50.0)).unwrap();
            let m_prev = random_vector(&mut rng, counts[0], counts[1]);
            let seed = random_vector(&mut rng, counts[1], counts[2]);
            let ctx = TripleContext::triple(&s, 1, &m_prev, &noise);
            let base = ctx.score(&seed);
            for i in 0..seed.len() {
                for j in i + 1..seed.len() {
                    let full = ctx.score(&seed.swapped(i, j));
                    let inc = incremental_triple_score(&ctx, base, &seed, (i, j));
                    assert_abs_diff_eq!(full, inc, epsilon = 1e-9);
                }
            }
        }
    }

    fn random_vector(rng: &mut impl Rng, n: usize, n_next: usize) -> MatchingVector {
        let mut targets: Vec<Option<usize>> = (0..n_next).map(Some).collect();
        targets.extend(std::iter::repeat_n(None, n));
        for i in (1..targets.len()).rev() {
            let j = rng.random_range(0..=i);
            targets.swap(i, j);
        }
        targets.truncate(n);
        MatchingVector::new(targets, n_next).unwrap()
    }
}
