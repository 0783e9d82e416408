//! Reputation dynamics on directed follower networks.
//!
//! Users hold a reputation that flows along follower links. Each step, users
//! whose relative reputation falls below an exit cost leave and are replaced
//! by newcomers with fresh random links. The crate provides the network
//! type, the equilibrium solver, the entry/exit dynamics, run metrics and a
//! seeded sweep harness.

pub mod dynamics;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod reference;
pub mod reputation;

pub use dynamics::{ExitRule, RewireModel, Simulation};
pub use experiments::{run_experiment, ExperimentConfig, SweepResult};
pub use graph::{CoreAnalysis, DirectedNetwork, NodeId};
pub use metrics::StepRecord;
pub use reputation::{equilibrium, EquilibriumResult, SolverConfig};
