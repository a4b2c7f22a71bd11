use std::sync::Arc;

use serde::Serialize;

use super::rvi::RviOptions;
use super::space::{StateSpace, DEFAULT_MAX_STATES};
use crate::error::{Error, Result};
use crate::model::{Grams, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    pub rvi: RviOptions,
    pub max_states: usize,
    pub symmetric: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            rvi: RviOptions::default(),
            max_states: DEFAULT_MAX_STATES,
            symmetric: true,
        }
    }
}

/// Deterministic decision rule over an enumerated state space.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    space: Arc<StateSpace>,
    /// Reel position per augmented state, in canonical order when the
    /// space is symmetric.
    actions: Vec<u8>,
}

impl TabularPolicy {
    pub fn new(space: Arc<StateSpace>, actions: Vec<u8>) -> Result<Self> {
        if actions.len() != space.augmented_count() {
            return Err(Error::input(format!(
                "{} actions for {} augmented states",
                actions.len(),
                space.augmented_count()
            )));
        }
        if let Some(a) = actions.iter().find(|&&a| a as usize >= space.reels()) {
            return Err(Error::input(format!("action {a} out of range")));
        }
        Ok(Self { space, actions })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn actions(&self) -> &[u8] {
        &self.actions
    }

    pub fn ensure_matches(&self, instance: &ProblemInstance) -> Result<()> {
        self.space.ensure_matches(instance)
    }

    /// Action for reels listed in their physical order. For symmetric
    /// tables the canonical position is mapped back through a stable sort,
    /// so among equal weights the lowest physical index is used.
    pub fn action(&self, reels: &[Grams], x: Grams) -> Result<usize> {
        let unmapped = || Error::UnmappedState {
            reels: reels.to_vec(),
            component: x,
        };
        let k = self.space.component_index(x).ok_or_else(unmapped)?;
        if self.space.is_symmetric() {
            let mut order: Vec<usize> = (0..reels.len()).collect();
            order.sort_by_key(|&n| reels[n]);
            let sorted: Vec<Grams> = order.iter().map(|&n| reels[n]).collect();
            let c = self.space.find_exact(&sorted).ok_or_else(unmapped)?;
            Ok(order[self.actions[self.space.aug_index(c, k)] as usize])
        } else {
            let c = self.space.find_exact(reels).ok_or_else(unmapped)?;
            Ok(self.actions[self.space.aug_index(c, k)] as usize)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub gain: f64,
    /// Augmented bias `h(config, component)`, zero at all-empty reels with
    /// the lightest component.
    pub bias: Vec<f64>,
    pub policy: Arc<TabularPolicy>,
    pub space: Arc<StateSpace>,
    /// Largest residual of the optimality equation over augmented states.
    pub residual: f64,
    pub iterations: usize,
}

impl ExactSolution {
    pub fn state_count(&self) -> usize {
        self.space.augmented_count()
    }

    pub fn summary(&self) -> ExactSummary {
        ExactSummary {
            gain: self.gain,
            state_count: self.state_count(),
            config_count: self.space.config_count(),
            residual: self.residual,
            iterations: self.iterations,
            symmetric: self.space.is_symmetric(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactSummary {
    pub gain: f64,
    pub state_count: usize,
    pub config_count: usize,
    pub residual: f64,
    pub iterations: usize,
    pub symmetric: bool,
}

/// Average-cost optimal policy over the reachable augmented states.
///
/// Iterates on the post-decision values `V(w) = Σ_x p(x) h(w, x)`, which
/// carry the same information as the augmented bias `h` but need one entry
/// per configuration instead of one per configuration and component.
pub fn solve_exact(instance: &ProblemInstance, opts: &ExactOptions) -> Result<ExactSolution> {
    opts.rvi.validate()?;
    let space = Arc::new(StateSpace::enumerate(
        instance,
        opts.symmetric,
        opts.max_states,
    )?);
    let configs = space.config_count();
    let k_count = space.support_len();
    let reels = space.reels();
    let probs = space.probs().to_vec();
    let tau = opts.rvi.damping;

    let best = |c: usize, k: usize, v: &[f64]| -> (f64, usize) {
        let mut arg = 0;
        let mut best = f64::INFINITY;
        for a in 0..reels {
            let (waste, next) = space.transition(c, k, a);
            let q = waste as f64 + v[next];
            if q < best {
                best = q;
                arg = a;
            }
        }
        (best, arg)
    };

    let mut v = vec![0.0; configs];
    let mut next_v = vec![0.0; configs];
    let mut span = f64::INFINITY;
    let mut converged = None;
    for iteration in 1..=opts.rvi.max_iters {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in 0..configs {
            let tv: f64 = (0..k_count).map(|k| probs[k] * best(c, k, &v).0).sum();
            let diff = tv - v[c];
            lo = lo.min(diff);
            hi = hi.max(diff);
            next_v[c] = v[c] + tau * diff;
        }
        span = hi - lo;
        if span <= opts.rvi.tolerance {
            converged = Some((iteration, 0.5 * (hi + lo)));
            break;
        }
        std::mem::swap(&mut v, &mut next_v);
    }
    let (iterations, gain) = converged.ok_or(Error::NotConverged {
        iterations: opts.rvi.max_iters,
        span,
    })?;

    let mut bias = vec![0.0; space.augmented_count()];
    let mut actions = vec![0u8; space.augmented_count()];
    for c in 0..configs {
        for k in 0..k_count {
            let (q, a) = best(c, k, &v);
            let i = space.aug_index(c, k);
            bias[i] = q - gain;
            actions[i] = a as u8;
        }
    }
    let pin = bias[0];
    bias.iter_mut().for_each(|h| *h -= pin);

    // Residual of h(s) = -g + min_a [c(s,a) + Σ_x' p(x') h(s'_a, x')].
    let expected: Vec<f64> = (0..configs)
        .map(|c| {
            (0..k_count)
                .map(|k| probs[k] * bias[space.aug_index(c, k)])
                .sum()
        })
        .collect();
    let mut residual: f64 = 0.0;
    for c in 0..configs {
        for k in 0..k_count {
            let rhs = (0..reels)
                .map(|a| {
                    let (waste, next) = space.transition(c, k, a);
                    waste as f64 + expected[next]
                })
                .fold(f64::INFINITY, f64::min)
                - gain;
            residual = residual.max((bias[space.aug_index(c, k)] - rhs).abs());
        }
    }

    let policy = Arc::new(TabularPolicy::new(space.clone(), actions)?);
    Ok(ExactSolution {
        gain,
        bias,
        policy,
        space,
        residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ComponentDistribution;

    #[test]
    fn deterministic_single_reel() {
        let inst =
            ProblemInstance::new("d", 10, 1, ComponentDistribution::deterministic(3).unwrap())
                .unwrap();
        let sol = solve_exact(&inst, &ExactOptions::default()).unwrap();
        assert!((sol.gain - 1.0 / 3.0).abs() < 1e-9);
        assert!(sol.residual < 1e-8);
    }

    #[test]
    fn symmetric_and_full_spaces_agree() {
        let d = ComponentDistribution::new(vec![3, 4, 6], vec![0.3, 0.3, 0.4]).unwrap();
        let inst = ProblemInstance::new("t", 12, 2, d).unwrap();
        let full = solve_exact(
            &inst,
            &ExactOptions {
                symmetric: false,
                ..Default::default()
            },
        )
        .unwrap();
        let sym = solve_exact(&inst, &ExactOptions::default()).unwrap();
        assert!(sym.space.config_count() < full.space.config_count());
        assert!(
            (full.gain - sym.gain).abs() < 1e-8,
            "{} vs {}",
            full.gain,
            sym.gain
        );
    }

    #[test]
    fn tabular_maps_back_through_permutation() {
        let d = ComponentDistribution::new(vec![3, 4], vec![0.5, 0.5]).unwrap();
        let inst = ProblemInstance::new("t", 10, 3, d).unwrap();
        let sol = solve_exact(&inst, &ExactOptions::default()).unwrap();
        let space = &sol.space;
        for c in 0..space.config_count() {
            let cfg = space.config(c).to_vec();
            for k in 0..2 {
                let x = space.weights()[k];
                let canonical = sol.policy.action(&cfg, x).unwrap();
                let mut reversed = cfg.clone();
                reversed.reverse();
                let mapped = sol.policy.action(&reversed, x).unwrap();
                assert_eq!(reversed[mapped], cfg[canonical]);
            }
        }
        assert!(matches!(
            sol.policy.action(&[0, 0, 0], 5),
            Err(Error::UnmappedState { .. })
        ));
    }

    #[test]
    fn state_limit_is_enforced() {
        let d = ComponentDistribution::new(vec![3, 4], vec![0.5, 0.5]).unwrap();
        let inst = ProblemInstance::new("t", 10, 3, d).unwrap();
        let opts = ExactOptions {
            max_states: 10,
            ..Default::default()
        };
        assert!(matches!(
            solve_exact(&inst, &opts),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }
}
