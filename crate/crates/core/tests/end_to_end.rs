use proptest::prelude::*;

use trimatch::config::Config;
use trimatch::io::{read_detections, read_matchings, read_tracks, write_detections, write_matchings, write_tracks};
use trimatch::metrics::evaluate;
use trimatch::oracle::exhaustive_argmax_over;
use trimatch::simulator::{simulate, SimConfig};
use trimatch::tripartite::{chain_log_likelihood, prepare, solve_dp, track_with, ReducedSpaceConfig};
use trimatch::{track, FrameSequence, Method, Position, TrackerConfig};

fn small_sim(seed: u64) -> SimConfig {
    SimConfig {
        n0: 6.0,
        frames: 6,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn files_round_trip_through_tracking() {
    let sim = simulate(&SimConfig { frames: 15, seed: 21, ..SimConfig::default() }).unwrap();
    let mut buf = Vec::new();
    write_detections(&sim.sequence, &mut buf).unwrap();
    let seq = read_detections(&buf[..], 1.0).unwrap();
    assert_eq!(seq, sim.sequence);

    let out = track(&seq, &TrackerConfig::default()).unwrap();
    let mut tracks = Vec::new();
    write_tracks(&seq, &out.trajectories, &mut tracks).unwrap();
    let back = read_tracks(&tracks[..]).unwrap().resolve(&seq).unwrap();
    assert_eq!(back.to_matchings(&seq.counts()).unwrap(), out.matchings);

    let mut text = Vec::new();
    write_matchings(&out.matchings, &mut text).unwrap();
    assert_eq!(read_matchings(&text[..], &seq.counts()).unwrap(), out.matchings);
}

#[test]
fn truth_scores_perfectly() {
    let sim = simulate(&small_sim(3)).unwrap();
    let r = evaluate(&sim.sequence, &sim.truth_matchings, &sim.truth_matchings, None, 1.0).unwrap();
    assert_eq!(r.summary.whole.f_beta, 1.0);
    assert_eq!(r.summary.path_identity, 1);
    assert!(r.rows.iter().all(|row| row.pair_identity == 1 && row.cumulative_f == 1.0));
}

#[test]
fn tri_never_scores_below_bmcf() {
    // The bipartite vector seeds every reduced space, so the chain optimum
    // is at least as likely as the bipartite chain.
    for seed in 0..6 {
        let sim = simulate(&SimConfig { frames: 20, seed, ..SimConfig::default() }).unwrap();
        let cfg = TrackerConfig::default();
        let base = prepare(&sim.sequence, &cfg).unwrap();
        let tri = track_with(&sim.sequence, &base, &cfg).unwrap();
        let bmcf = chain_log_likelihood(&sim.sequence, &base.bmcf, &base.noise).unwrap();
        assert!(tri.diagnostics.score >= bmcf - 1e-9);
    }
}

#[test]
fn config_file_drives_the_tracker() {
    let cfg = Config::from_toml("[tracker]\nmethod = \"bmcf\"\n").unwrap();
    let seq = FrameSequence::new(vec![
        vec![Position::new(0.0, 0.0), Position::new(5.0, 5.0)],
        vec![Position::new(5.5, 5.0), Position::new(0.5, 0.0)],
    ])
    .unwrap();
    let out = track(&seq, &cfg.tracker.tracker_config().unwrap()).unwrap();
    assert_eq!(out.diagnostics.method, Method::Bmcf);
    assert_eq!(out.matchings[0].to_signed(), vec![2, 1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // The solver is exact over whatever spaces it is given.
    #[test]
    fn dp_is_exact_over_reduced_spaces(seed in 0u64..10_000, delta in 0usize..3) {
        let sim = simulate(&small_sim(seed)).unwrap();
        let seq = &sim.sequence;
        prop_assume!(seq.counts().iter().all(|&n| n <= 8));
        let cfg = TrackerConfig { space: ReducedSpaceConfig { delta }, ..TrackerConfig::default() };
        let base = prepare(seq, &cfg).unwrap();
        let out = track_with(seq, &base, &cfg).unwrap();
        let product: u128 = out.spaces.iter().map(|s| s.len() as u128).product();
        prop_assume!(product <= 200_000);
        let (best, score) = exhaustive_argmax_over(seq, &out.spaces, &base.noise).unwrap();
        let dp = solve_dp(seq, &out.spaces, &base.noise).unwrap();
        prop_assert!((dp.score - score).abs() <= 1e-9 * score.abs().max(1.0));
        prop_assert_eq!(dp.matchings, best);
    }

    // Every tracked detection belongs to exactly one track.
    #[test]
    fn trajectories_partition_detections(seed in 0u64..10_000) {
        let sim = simulate(&SimConfig { frames: 10, seed, ..SimConfig::default() }).unwrap();
        let out = track(&sim.sequence, &TrackerConfig::default()).unwrap();
        prop_assert_eq!(out.trajectories.total_length(), sim.sequence.total_detections());
        for (k, m) in out.matchings.iter().enumerate() {
            prop_assert!(m.is_valid_for(sim.sequence.frame(k).len(), sim.sequence.frame(k + 1).len()));
            prop_assert!(out.spaces[k].contains(m));
        }
    }
}
