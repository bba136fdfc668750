//! Multi-object tracking by velocity-smoothness association.
//!
//! Detections of consecutive frames are linked by maximising a likelihood
//! that penalises changes of velocity, using dynamic programming over small
//! candidate sets built around a bipartite (min-cost flow) solution.

pub mod assignment;
pub mod candidates;
pub mod config;
pub mod error;
pub mod experiment;
pub mod frames;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod oracle;
pub mod simulator;
pub mod trajectory;
pub mod tripartite;

pub use assignment::{solve_bmcf, solve_bmcf_fixed_d, BipartiteConfig, Gate};
pub use candidates::CandidateSpace;
pub use error::{Error, Result};
pub use frames::FrameSequence;
pub use geometry::{Position, Velocity};
pub use matching::{count_disappeared, MatchingVector, DISAPPEAR};
pub use trajectory::{assemble_trajectories, Detection, Track, TrajectorySet};
pub use tripartite::{track, Method, TrackOutput, TrackerConfig};
