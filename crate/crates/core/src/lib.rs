//! Online reel assignment for filament printers.
//!
//! Components with random filament weights arrive one at a time and must be
//! printed from one of `N` reels. A reel that cannot hold the component is
//! discarded, and its leftover filament is wasted. This crate provides the
//! assignment policies, exact average-cost solvers for small instances, and
//! a Monte-Carlo simulator for long-run waste per component.

pub mod error;
pub mod experiment;
pub mod model;
pub mod policy;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    apply_assignment, builtin_case, enumerate_reachable, load_instance, step, AugmentedState,
    ComponentDistribution, Grams, InstanceConfig, ProblemInstance, ReachableSet, ReelWeights,
};
pub use policy::{Policy, PolicyDecision, RolloutParams};
pub use sim::{SimulationConfig, SimulationReport};
pub use solver::{BiasTable, ExactOptions, ExactSolution, RviOptions, StateSpace, TabularPolicy};
