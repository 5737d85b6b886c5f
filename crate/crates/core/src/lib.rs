//! Stochastic approximation methods for convex-concave saddle-point problems
//! and stochastic conic programs.
//!
//! * [`saps`]: proximal stochastic subgradient method with iterate averaging.
//! * [`lsaal`]: linearized stochastic augmented Lagrangian method and its
//!   deterministic full-batch variant.
//! * [`prox`], [`cones`]: proximal maps and cone projections.
//! * [`oracles`]: stochastic first-order oracles for the reference problems.
//! * [`metrics`]: optimality measures, rate fits and summary statistics.

pub mod cones;
pub mod constants;
pub mod data;
mod error;
pub mod linalg;
pub mod lsaal;
pub mod metrics;
pub mod oracles;
pub mod point;
pub mod prox;
pub mod record;
pub mod rng;
pub mod saps;
pub mod schedule;

pub use cones::ConvexCone;
pub use constants::ProblemConstants;
pub use error::{Error, Result};
pub use point::PrimalDualPoint;
pub use prox::ProximableFunction;
pub use record::{FnMetric, IterateView, MetricHook, RecordedIterate, RunConfig, RunRecord};
pub use rng::RandomSource;
pub use schedule::StepSchedule;
