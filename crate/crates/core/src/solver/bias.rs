use serde::{Deserialize, Serialize};

use super::rvi::{solve_mrp, Mrp, RviOptions};
use crate::error::{Error, Result};
use crate::model::{assign, ComponentDistribution, Grams, ProblemInstance};

/// Gain and bias of one reel consumed by an i.i.d. component stream.
///
/// `h1[w]` is defined for every weight `0..B`, not only reachable ones,
/// and is pinned to zero at `w = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasTable {
    pub capacity: Grams,
    pub weights: Vec<Grams>,
    pub probs: Vec<f64>,
    pub gain: f64,
    pub h1: Vec<f64>,
    /// Largest absolute residual of the single-reel Bellman equation.
    pub residual: f64,
    pub reference: Grams,
    pub iterations: usize,
}

impl BiasTable {
    #[inline]
    pub fn h(&self, w: Grams) -> f64 {
        self.h1[w as usize]
    }

    /// Marginal cost of printing `x` from a reel holding `w`:
    /// immediate waste plus the change in single-reel bias.
    #[inline]
    pub fn index(&self, w: Grams, x: Grams) -> f64 {
        let (next, waste) = assign(w, x, self.capacity);
        waste as f64 + self.h1[next as usize] - self.h1[w as usize]
    }

    pub fn matches(&self, instance: &ProblemInstance) -> bool {
        self.capacity == instance.capacity()
            && self.weights == instance.dist().weights()
            && self.probs == instance.dist().probs()
    }

    pub fn ensure_matches(&self, instance: &ProblemInstance) -> Result<()> {
        if self.matches(instance) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "bias table was computed for B={} and support {:?}, instance '{}' has B={} and support {:?}",
                self.capacity,
                self.weights,
                instance.name,
                instance.capacity(),
                instance.dist().weights()
            )))
        }
    }

    /// `max_w |h1(w) + g1 - Σ p(x) (c(w,x) + h1(e(w,x)))|`.
    pub fn bellman_residual(&self) -> f64 {
        (0..self.capacity)
            .map(|w| {
                let expected: f64 = self
                    .weights
                    .iter()
                    .zip(&self.probs)
                    .map(|(&x, &p)| {
                        let (next, waste) = assign(w, x, self.capacity);
                        p * (waste as f64 + self.h1[next as usize])
                    })
                    .sum();
                (self.h1[w as usize] + self.gain - expected).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the single-reel average-cost equation over all weights `0..B`.
pub fn solve_single_reel(
    dist: &ComponentDistribution,
    capacity: Grams,
    opts: &RviOptions,
) -> Result<BiasTable> {
    if capacity < dist.max_weight() {
        return Err(Error::input(format!(
            "capacity {capacity} is below the largest component weight {}",
            dist.max_weight()
        )));
    }
    let states = capacity as usize;
    let mut mrp = Mrp::with_capacity(states, states * dist.len());
    for w in 0..capacity {
        let cost: f64 = dist
            .iter()
            .map(|(x, p)| p * assign(w, x, capacity).1 as f64)
            .sum();
        mrp.push_state(
            cost,
            dist.iter().map(|(x, p)| (assign(w, x, capacity).0, p)),
        );
    }
    let sol = solve_mrp(&mrp, 0, opts)?;
    Ok(BiasTable {
        capacity,
        weights: dist.weights().to_vec(),
        probs: dist.probs().to_vec(),
        gain: sol.gain,
        h1: sol.bias,
        residual: sol.residual,
        reference: 0,
        iterations: sol.iterations,
    })
}

pub fn solve_single_reel_for(instance: &ProblemInstance, opts: &RviOptions) -> Result<BiasTable> {
    solve_single_reel(instance.dist(), instance.capacity(), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_reel_components_waste_nothing() {
        for capacity in [1, 7, 50] {
            let d = ComponentDistribution::deterministic(capacity).unwrap();
            let t = solve_single_reel(&d, capacity, &RviOptions::default()).unwrap();
            assert!(t.gain.abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_cycle_wastes_one_gram_per_three_components() {
        let d = ComponentDistribution::deterministic(3).unwrap();
        let t = solve_single_reel(&d, 10, &RviOptions::default()).unwrap();
        assert!((t.gain - 1.0 / 3.0).abs() < 1e-9, "gain {}", t.gain);
        assert_eq!(t.h(0), 0.0);
        assert!(t.bellman_residual() <= 1e-8);
    }

    #[test]
    fn residual_within_tolerance() {
        let d = ComponentDistribution::new(vec![3, 4, 7], vec![0.2, 0.5, 0.3]).unwrap();
        let opts = RviOptions::default().with_tolerance(1e-10);
        let t = solve_single_reel(&d, 15, &opts).unwrap();
        assert!(t.residual <= 10.0 * opts.tolerance);
        assert!((t.residual - t.bellman_residual()).abs() < 1e-12);
    }

    #[test]
    fn rejects_components_larger_than_reel() {
        let d = ComponentDistribution::deterministic(11).unwrap();
        assert!(solve_single_reel(&d, 10, &RviOptions::default()).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let d = ComponentDistribution::new(vec![3, 4], vec![0.5, 0.5]).unwrap();
        let opts = RviOptions {
            max_iters: 2,
            ..RviOptions::default()
        };
        match solve_single_reel(&d, 10, &opts) {
            Err(Error::NotConverged { iterations, span }) => {
                assert_eq!(iterations, 2);
                assert!(span > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
