//! Bellman error operator and the single-reel decomposition of the
//! random-allocation bias.

use serde::Serialize;

use super::bias::{solve_single_reel_for, BiasTable};
use super::evaluate::{naive_random_chain, Decision, DecisionRule};
use super::rvi::RviOptions;
use super::space::StateSpace;
use crate::error::{Error, Result};
use crate::model::{assign, ProblemInstance};
use crate::policy::Policy;

/// `c_π - g + (P_π - I) h` evaluated at every augmented state.
#[derive(Debug, Clone)]
pub struct BellmanError {
    pub values: Vec<f64>,
}

impl BellmanError {
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Applies the Bellman error operator of `policy` to `(gain, h)`, where `h`
/// is indexed by the augmented states of `space`.
pub fn bellman_error(
    instance: &ProblemInstance,
    space: &StateSpace,
    policy: &Policy,
    gain: f64,
    h: &[f64],
) -> Result<BellmanError> {
    if h.len() != space.augmented_count() {
        return Err(Error::Enumeration(format!(
            "value vector has {} entries for {} augmented states",
            h.len(),
            space.augmented_count()
        )));
    }
    let mut rule = DecisionRule::new(policy, instance, space)?;
    let k_count = space.support_len();
    let reels = space.reels();
    let expected = expected_over_components(space, h);
    let mut values = Vec::with_capacity(h.len());
    for c in 0..space.config_count() {
        for k in 0..k_count {
            let backup = match rule.decide(c, k)? {
                Decision::Uniform => {
                    (0..reels)
                        .map(|a| {
                            let (waste, next) = space.transition(c, k, a);
                            waste as f64 + expected[next]
                        })
                        .sum::<f64>()
                        / reels as f64
                }
                Decision::Reel(a) => {
                    let (waste, next) = space.transition(c, k, a);
                    waste as f64 + expected[next]
                }
            };
            values.push(backup - gain - h[space.aug_index(c, k)]);
        }
    }
    Ok(BellmanError { values })
}

fn expected_over_components(space: &StateSpace, h: &[f64]) -> Vec<f64> {
    (0..space.config_count())
        .map(|c| {
            space
                .probs()
                .iter()
                .enumerate()
                .map(|(k, p)| p * h[space.aug_index(c, k)])
                .sum()
        })
        .collect()
}

/// `Σ_n h1(w_n)` for every configuration.
pub fn additive_naive_bias(space: &StateSpace, bias: &BiasTable) -> Vec<f64> {
    (0..space.config_count())
        .map(|c| space.config(c).iter().map(|&w| bias.h(w)).sum())
        .collect()
}

/// Augmented random-allocation bias assembled from single-reel biases:
/// `(1/N) Σ_n [c(w_n,x) + h1(e(w_n,x)) + (N-1) h1(w_n)] + θ`.
pub fn random_augmented_bias(space: &StateSpace, bias: &BiasTable, theta: f64) -> Vec<f64> {
    let n = space.reels() as f64;
    let capacity = space.capacity();
    let mut out = Vec::with_capacity(space.augmented_count());
    for c in 0..space.config_count() {
        let cfg = space.config(c);
        for k in 0..space.support_len() {
            let x = space.weights()[k];
            let sum: f64 = cfg
                .iter()
                .map(|&w| {
                    let (updated, waste) = assign(w, x, capacity);
                    waste as f64 + bias.h(updated) + (n - 1.0) * bias.h(w)
                })
                .sum();
            out.push(sum / n + theta);
        }
    }
    out
}

/// Largest residual of the naive random-allocation equation for `(g, h)`
/// with `h` over configurations.
pub fn naive_random_residual(space: &StateSpace, gain: f64, h: &[f64]) -> Result<f64> {
    if h.len() != space.config_count() {
        return Err(Error::Enumeration(format!(
            "value vector has {} entries for {} configurations",
            h.len(),
            space.config_count()
        )));
    }
    Ok(naive_random_chain(space).residual(gain, h))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub single_reel_gain: f64,
    pub single_reel_residual: f64,
    /// Residual of `Σ h1(w_n)` in the naive `N`-reel equation with gain `g1`.
    pub naive_residual: f64,
    /// Residual of the assembled augmented bias (θ = 0) with gain `g1`.
    pub augmented_residual: f64,
}

/// Checks that single-reel biases solve both multi-reel random-allocation
/// equations on the full (non-symmetric) reachable space.
pub fn verify_decomposition(
    instance: &ProblemInstance,
    opts: &RviOptions,
    max_states: usize,
) -> Result<DecompositionReport> {
    let bias = solve_single_reel_for(instance, opts)?;
    let space = StateSpace::enumerate(instance, false, max_states)?;
    let naive = additive_naive_bias(&space, &bias);
    let naive_residual = naive_random_residual(&space, bias.gain, &naive)?;
    let augmented = random_augmented_bias(&space, &bias, 0.0);
    let augmented_residual =
        bellman_error(instance, &space, &Policy::Random, bias.gain, &augmented)?.max_abs();
    Ok(DecompositionReport {
        single_reel_gain: bias.gain,
        single_reel_residual: bias.residual,
        naive_residual,
        augmented_residual,
    })
}
