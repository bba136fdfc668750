//! Velocity-model (tripartite) association.

mod dp;
mod likelihood;
mod pipeline;
mod sigma;
mod space;

pub use dp::{scores_tie, solve_dp, solve_dp_with, DpOptions, DpSolution, DpTable, EvalStats};
pub use likelihood::{
    chain_log_likelihood, incremental_triple_score, log_normal_2d, pair_log_likelihood_first,
    position_log_density, triple_log_likelihood, NoiseModel, Sigmas, TripleContext, DEFAULT_SIGMA_FLOOR,
};
pub use pipeline::{
    prepare, track, track_with, Baseline, Diagnostics, LambdaEvent, Method, TrackOutput, TrackerConfig,
};
pub use sigma::{estimate_sigma, SigmaEstimate, SigmaMode};
pub use space::{
    build_full_space, build_reduced_space, build_reduced_space_around, departure_window, full_space_size,
    reduced_space_bound, single_swaps, ReducedSpaceConfig, DEFAULT_SPACE_CAP,
};
