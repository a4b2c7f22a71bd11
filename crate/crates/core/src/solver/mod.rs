//! Average-cost solvers: the single-reel bias table, exact evaluation of
//! stationary policies, the optimal multi-reel policy, and the Bellman
//! error checks built on them.

mod bellman;
mod bias;
mod evaluate;
mod exact;
mod rvi;
mod space;

pub use bellman::{
    additive_naive_bias, bellman_error, naive_random_residual, random_augmented_bias,
    verify_decomposition, BellmanError, DecompositionReport,
};
pub use bias::{solve_single_reel, solve_single_reel_for, BiasTable};
pub use evaluate::{evaluate_policy_exact, evaluate_random_naive, EvalResult};
pub use exact::{solve_exact, ExactOptions, ExactSolution, ExactSummary, TabularPolicy};
pub use rvi::RviOptions;
pub use space::{StateSpace, DEFAULT_MAX_STATES};
