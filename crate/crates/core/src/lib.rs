//! Probabilistic flight-time propagation, sector congestion and
//! multi-objective schedule optimization.
//!
//! The pipeline runs schedule → per-waypoint marginals → sector presence
//! probabilities → Poisson-Binomial occupancy → (delay, congestion) costs,
//! and an NSGA-II driver searches the schedule box for Pareto trade-offs.

pub mod congestion;
pub mod error;
pub mod mcoracle;
pub mod model;
pub mod moea;
pub mod objectives;
pub mod propagate;
pub mod timeprob;

pub use congestion::{congestion_profile, poisson_binomial_pmf, CongestionProfile, SectorProfile};
pub use error::{Error, Result};
pub use mcoracle::{estimate_congestion, McConfig, McEstimate};
pub use model::{
    feasible_box, generate_benchmark, instance_checksum, BenchmarkParams, FeasibleBox, FlightPlan, Instance,
    Schedule, ScheduleDocument, Sector, SectorCrossing, Window,
};
pub use moea::{run_nsga2, run_nsga2_with, GenerationStats, MoeaConfig, NsgaOutcome, ParetoArchive};
pub use objectives::{evaluate, evaluate_detailed, evaluate_with, ObjectiveConfig, ObjectiveVector};
pub use propagate::{propagate_marginals, MarginalSet, PropagationConfig};
pub use timeprob::{Pmf, TimeGrid, TriangularSpec};
