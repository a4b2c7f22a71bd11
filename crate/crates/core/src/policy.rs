//! Reel-selection rules.
//!
//! Reel indices are zero-based throughout the crate. Every deterministic
//! rule breaks ties towards the lowest index.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{assign, AugmentedState, Grams, ProblemInstance};
use crate::solver::{BiasTable, TabularPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub reel: usize,
    pub immediate_waste: Grams,
    /// Per-reel scores for rules that rank reels (index, rollout).
    pub scores: Option<Vec<f64>>,
}

impl PolicyDecision {
    fn new(
        reels: &[Grams],
        x: Grams,
        capacity: Grams,
        reel: usize,
        scores: Option<Vec<f64>>,
    ) -> Self {
        Self {
            reel,
            immediate_waste: assign(reels[reel], x, capacity).1,
            scores,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutParams {
    pub rollouts: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone)]
pub enum Policy {
    Random,
    FirstFit,
    BestFit,
    Index(Arc<BiasTable>),
    Rollout {
        base: Box<Policy>,
        params: RolloutParams,
    },
    Tabular(Arc<TabularPolicy>),
}

impl Policy {
    /// Short name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::FirstFit => "ff",
            Policy::BestFit => "bf",
            Policy::Index(_) => "index",
            Policy::Rollout { .. } => "rollout",
            Policy::Tabular(_) => "exact",
        }
    }

    /// True when the decision is a function of the state alone.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Policy::Random | Policy::Rollout { .. })
    }

    /// Checks that prepared resources belong to `instance`.
    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        match self {
            Policy::Index(bias) => bias.ensure_matches(instance),
            Policy::Tabular(table) => table.ensure_matches(instance),
            Policy::Rollout { base, params } => {
                if params.rollouts == 0 {
                    return Err(Error::input("rollout count must be at least 1"));
                }
                base.validate(instance)
            }
            _ => Ok(()),
        }
    }

    /// Zero-based reel for component `x`. Inputs are assumed valid.
    #[inline]
    pub fn choose<R: Rng + ?Sized>(
        &self,
        instance: &ProblemInstance,
        reels: &[Grams],
        x: Grams,
        rng: &mut R,
    ) -> Result<usize> {
        Ok(match self {
            Policy::Random => rng.random_range(0..reels.len()),
            Policy::FirstFit => first_fit(reels, x),
            Policy::BestFit => best_fit(reels, x),
            Policy::Index(bias) => index_argmin(bias, reels, x),
            Policy::Rollout { base, params } => {
                rollout_scores(instance, base, *params, reels, x, rng)?.0
            }
            Policy::Tabular(table) => table.action(reels, x)?,
        })
    }

    pub fn select<R: Rng + ?Sized>(
        &self,
        instance: &ProblemInstance,
        state: &AugmentedState,
        rng: &mut R,
    ) -> Result<PolicyDecision> {
        let reels = state.reels.as_slice();
        instance.check_reels(reels)?;
        instance.check_component(state.component)?;
        self.validate(instance)?;
        match self {
            Policy::Random => Ok(random_select(instance, state, rng)),
            Policy::FirstFit => Ok(first_fit_select(instance, state)),
            Policy::BestFit => Ok(best_fit_select(instance, state)),
            Policy::Index(bias) => index_select(instance, state, bias),
            Policy::Rollout { base, params } => rollout_select(instance, state, base, *params, rng),
            Policy::Tabular(_) => {
                let reel = self.choose(instance, reels, state.component, rng)?;
                Ok(PolicyDecision::new(
                    reels,
                    state.component,
                    instance.capacity(),
                    reel,
                    None,
                ))
            }
        }
    }
}

/// Lowest-index reel holding at least `x`; otherwise the lightest reel.
#[inline]
pub fn first_fit(reels: &[Grams], x: Grams) -> usize {
    reels
        .iter()
        .position(|&w| w >= x)
        .unwrap_or_else(|| lightest(reels))
}

/// Feasible reel with the smallest leftover `w - x`; otherwise the lightest
/// reel, which is the replacement with least immediate waste.
#[inline]
pub fn best_fit(reels: &[Grams], x: Grams) -> usize {
    let mut best: Option<(Grams, usize)> = None;
    for (n, &w) in reels.iter().enumerate() {
        if w >= x && best.is_none_or(|(r, _)| w - x < r) {
            best = Some((w - x, n));
        }
    }
    match best {
        Some((_, n)) => n,
        None => lightest(reels),
    }
}

#[inline]
fn lightest(reels: &[Grams]) -> usize {
    let mut arg = 0;
    for (n, &w) in reels.iter().enumerate().skip(1) {
        if w < reels[arg] {
            arg = n;
        }
    }
    arg
}

#[inline]
fn index_argmin(bias: &BiasTable, reels: &[Grams], x: Grams) -> usize {
    let mut arg = 0;
    let mut best = f64::INFINITY;
    for (n, &w) in reels.iter().enumerate() {
        let score = bias.index(w, x);
        if score < best {
            best = score;
            arg = n;
        }
    }
    arg
}

pub fn random_select<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    state: &AugmentedState,
    rng: &mut R,
) -> PolicyDecision {
    let reels = state.reels.as_slice();
    let reel = rng.random_range(0..reels.len());
    PolicyDecision::new(reels, state.component, instance.capacity(), reel, None)
}

pub fn first_fit_select(instance: &ProblemInstance, state: &AugmentedState) -> PolicyDecision {
    let reels = state.reels.as_slice();
    let reel = first_fit(reels, state.component);
    PolicyDecision::new(reels, state.component, instance.capacity(), reel, None)
}

pub fn best_fit_select(instance: &ProblemInstance, state: &AugmentedState) -> PolicyDecision {
    let reels = state.reels.as_slice();
    let reel = best_fit(reels, state.component);
    PolicyDecision::new(reels, state.component, instance.capacity(), reel, None)
}

/// Minimizes `c(w_n, x) + h1(e(w_n, x)) - h1(w_n)` over reels.
pub fn index_select(
    instance: &ProblemInstance,
    state: &AugmentedState,
    bias: &BiasTable,
) -> Result<PolicyDecision> {
    bias.ensure_matches(instance)?;
    let reels = state.reels.as_slice();
    let x = state.component;
    let scores: Vec<f64> = reels.iter().map(|&w| bias.index(w, x)).collect();
    let reel = index_argmin(bias, reels, x);
    Ok(PolicyDecision::new(
        reels,
        x,
        instance.capacity(),
        reel,
        Some(scores),
    ))
}

/// One-step lookahead by simulation: each reel is scored by its immediate
/// waste plus the mean waste of `rollouts` continuations of `horizon`
/// components under `base`. All candidate reels see the same continuation
/// streams.
pub fn rollout_select<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    state: &AugmentedState,
    base: &Policy,
    params: RolloutParams,
    rng: &mut R,
) -> Result<PolicyDecision> {
    let reels = state.reels.as_slice();
    let (reel, scores) = rollout_scores(instance, base, params, reels, state.component, rng)?;
    Ok(PolicyDecision::new(
        reels,
        state.component,
        instance.capacity(),
        reel,
        Some(scores),
    ))
}

fn rollout_scores<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    base: &Policy,
    params: RolloutParams,
    reels: &[Grams],
    x: Grams,
    rng: &mut R,
) -> Result<(usize, Vec<f64>)> {
    if params.rollouts == 0 {
        return Err(Error::input("rollout count must be at least 1"));
    }
    let capacity = instance.capacity();
    let dist = instance.dist();
    let mut scores: Vec<f64> = reels
        .iter()
        .map(|&w| assign(w, x, capacity).1 as f64)
        .collect();

    if params.horizon > 0 {
        let seeds: Vec<(u64, u64)> = (0..params.rollouts)
            .map(|_| (rng.random(), rng.random()))
            .collect();
        let mut sim = reels.to_vec();
        for (a, score) in scores.iter_mut().enumerate() {
            let mut total = 0u64;
            for &(arrival_seed, choice_seed) in &seeds {
                let mut arrivals = ChaCha8Rng::seed_from_u64(arrival_seed);
                let mut choices = ChaCha8Rng::seed_from_u64(choice_seed);
                sim.copy_from_slice(reels);
                sim[a] = assign(reels[a], x, capacity).0;
                for _ in 0..params.horizon {
                    let next = dist.sample(&mut arrivals);
                    let n = base.choose(instance, &sim, next, &mut choices)?;
                    let (w, waste) = assign(sim[n], next, capacity);
                    sim[n] = w;
                    total += waste as u64;
                }
            }
            *score += total as f64 / params.rollouts as f64;
        }
    }

    let mut arg = 0;
    for (n, &s) in scores.iter().enumerate() {
        if s < scores[arg] {
            arg = n;
        }
    }
    Ok((arg, scores))
}
