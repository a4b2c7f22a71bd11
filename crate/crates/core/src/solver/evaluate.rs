//! Exact evaluation of stationary policies on an enumerated state space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rvi::{solve_mrp, Mrp, RviOptions};
use super::space::StateSpace;
use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::policy::Policy;

/// Gain and bias of a fixed policy.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub gain: f64,
    /// Indexed like the evaluated chain: augmented states for
    /// [`evaluate_policy_exact`], configurations for [`evaluate_random_naive`].
    pub bias: Vec<f64>,
    pub bellman_residual: f64,
    pub iterations: usize,
}

/// How a stationary policy spreads over reel positions in one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Decision {
    Uniform,
    Reel(usize),
}

/// Resolves policy decisions over the positions of `space` configurations.
pub(crate) struct DecisionRule<'a> {
    policy: &'a Policy,
    instance: &'a ProblemInstance,
    space: &'a StateSpace,
    rng: ChaCha8Rng,
}

impl<'a> DecisionRule<'a> {
    pub fn new(
        policy: &'a Policy,
        instance: &'a ProblemInstance,
        space: &'a StateSpace,
    ) -> Result<Self> {
        space.ensure_matches(instance)?;
        policy.validate(instance)?;
        match policy {
            Policy::Rollout { .. } => {
                return Err(Error::Config(
                    "rollout decisions are sampled and have no exact evaluation".into(),
                ))
            }
            Policy::FirstFit if space.is_symmetric() => {
                return Err(Error::Config(
                    "first fit depends on reel order; evaluate it on a non-symmetric space".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            policy,
            instance,
            space,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn decide(&mut self, c: usize, k: usize) -> Result<Decision> {
        if matches!(self.policy, Policy::Random) {
            return Ok(Decision::Uniform);
        }
        let x = self.space.weights()[k];
        let reel = self
            .policy
            .choose(self.instance, self.space.config(c), x, &mut self.rng)?;
        Ok(Decision::Reel(reel))
    }
}

/// Evaluates `policy` on the augmented chain over `(configuration, component)`.
pub fn evaluate_policy_exact(
    instance: &ProblemInstance,
    policy: &Policy,
    space: &StateSpace,
    opts: &RviOptions,
) -> Result<EvalResult> {
    let mut rule = DecisionRule::new(policy, instance, space)?;
    let reels = space.reels();
    let k_count = space.support_len();
    let probs = space.probs();
    let states = space.augmented_count();
    let mut mrp = Mrp::with_capacity(states, states * k_count);
    let mut edges = Vec::new();
    for c in 0..space.config_count() {
        for k in 0..k_count {
            edges.clear();
            let cost = match rule.decide(c, k)? {
                Decision::Uniform => {
                    let share = 1.0 / reels as f64;
                    let mut cost = 0.0;
                    for a in 0..reels {
                        let (waste, next) = space.transition(c, k, a);
                        cost += share * waste as f64;
                        for (k2, &p) in probs.iter().enumerate() {
                            edges.push((space.aug_index(next, k2) as u32, share * p));
                        }
                    }
                    cost
                }
                Decision::Reel(a) => {
                    let (waste, next) = space.transition(c, k, a);
                    for (k2, &p) in probs.iter().enumerate() {
                        edges.push((space.aug_index(next, k2) as u32, p));
                    }
                    waste as f64
                }
            };
            mrp.push_state(cost, edges.iter().copied());
        }
    }
    let sol = solve_mrp(&mrp, 0, opts)?;
    Ok(EvalResult {
        gain: sol.gain,
        bias: sol.bias,
        bellman_residual: sol.residual,
        iterations: sol.iterations,
    })
}

/// Random allocation when the reel is picked before the component weight is
/// seen; the chain lives on configurations only.
pub fn evaluate_random_naive(
    instance: &ProblemInstance,
    space: &StateSpace,
    opts: &RviOptions,
) -> Result<EvalResult> {
    space.ensure_matches(instance)?;
    let mrp = naive_random_chain(space);
    let sol = solve_mrp(&mrp, 0, opts)?;
    Ok(EvalResult {
        gain: sol.gain,
        bias: sol.bias,
        bellman_residual: sol.residual,
        iterations: sol.iterations,
    })
}

pub(crate) fn naive_random_chain(space: &StateSpace) -> Mrp {
    let reels = space.reels();
    let k_count = space.support_len();
    let probs = space.probs();
    let configs = space.config_count();
    let mut mrp = Mrp::with_capacity(configs, configs * reels * k_count);
    let share = 1.0 / reels as f64;
    let mut edges = Vec::with_capacity(reels * k_count);
    for c in 0..configs {
        edges.clear();
        let mut cost = 0.0;
        for a in 0..reels {
            for (k, &p) in probs.iter().enumerate() {
                let (waste, next) = space.transition(c, k, a);
                cost += share * p * waste as f64;
                edges.push((next as u32, share * p));
            }
        }
        mrp.push_state(cost, edges.iter().copied());
    }
    mrp
}
