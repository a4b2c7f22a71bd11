//! Reachable multi-reel configurations.
//!
//! Configurations are discovered by breadth-first search from the all-empty
//! configuration, following every (component, reel) pair. With symmetry on,
//! each configuration is stored sorted ascending; dynamics and costs are
//! invariant under reel permutations, so the quotient chain has the same
//! gains. Augmented states are `(configuration, component)` pairs indexed
//! `config * K + k` for a support of size `K`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{assign, Grams, ProblemInstance};

pub const DEFAULT_MAX_STATES: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct StateSpace {
    reels: usize,
    capacity: Grams,
    symmetric: bool,
    weights: Vec<Grams>,
    probs: Vec<f64>,
    configs: Vec<Grams>,
    lookup: HashMap<Box<[Grams]>, u32>,
    next: Vec<u32>,
    waste: Vec<Grams>,
}

impl StateSpace {
    /// Enumerates every configuration reachable from all-empty reels.
    /// Fails once the augmented state count would exceed `max_states`.
    pub fn enumerate(
        instance: &ProblemInstance,
        symmetric: bool,
        max_states: usize,
    ) -> Result<Self> {
        let reels = instance.reels();
        if reels > u8::MAX as usize {
            return Err(Error::input(
                "at most 255 reels are supported by the exact solver",
            ));
        }
        let dist = instance.dist();
        let k_count = dist.len();
        let mut space = Self {
            reels,
            capacity: instance.capacity(),
            symmetric,
            weights: dist.weights().to_vec(),
            probs: dist.probs().to_vec(),
            configs: Vec::new(),
            lookup: HashMap::new(),
            next: Vec::new(),
            waste: Vec::new(),
        };
        let start = vec![0; reels];
        space.insert(&start);

        let mut buf = vec![0; reels];
        let mut cursor = 0;
        while cursor < space.config_count() {
            if space.config_count() * k_count > max_states {
                return Err(Error::StateSpaceTooLarge {
                    count: space.config_count() * k_count,
                    limit: max_states,
                });
            }
            for k in 0..k_count {
                let x = space.weights[k];
                for a in 0..reels {
                    buf.copy_from_slice(space.config(cursor));
                    let (w, waste) = assign(buf[a], x, space.capacity);
                    buf[a] = w;
                    if symmetric {
                        buf.sort_unstable();
                    }
                    let id = match space.lookup.get(&buf[..]) {
                        Some(&id) => id,
                        None => space.insert(&buf),
                    };
                    space.next.push(id);
                    space.waste.push(waste);
                }
            }
            cursor += 1;
        }
        if space.augmented_count() > max_states {
            return Err(Error::StateSpaceTooLarge {
                count: space.augmented_count(),
                limit: max_states,
            });
        }
        Ok(space)
    }

    fn insert(&mut self, config: &[Grams]) -> u32 {
        let id = self.config_count() as u32;
        self.configs.extend_from_slice(config);
        self.lookup.insert(config.into(), id);
        id
    }

    pub fn reels(&self) -> usize {
        self.reels
    }

    pub fn capacity(&self) -> Grams {
        self.capacity
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn weights(&self) -> &[Grams] {
        &self.weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn config_count(&self) -> usize {
        self.configs.len() / self.reels
    }

    pub fn augmented_count(&self) -> usize {
        self.config_count() * self.support_len()
    }

    pub fn config(&self, c: usize) -> &[Grams] {
        &self.configs[c * self.reels..(c + 1) * self.reels]
    }

    #[inline]
    pub fn aug_index(&self, c: usize, k: usize) -> usize {
        c * self.weights.len() + k
    }

    /// `(waste, next configuration)` for assigning component `k` to reel
    /// position `a` of configuration `c`.
    #[inline]
    pub fn transition(&self, c: usize, k: usize, a: usize) -> (Grams, usize) {
        let i = (c * self.weights.len() + k) * self.reels + a;
        (self.waste[i], self.next[i] as usize)
    }

    /// Index of a configuration given in reel order; it is canonicalized
    /// first when the space is symmetric.
    pub fn find(&self, reels: &[Grams]) -> Option<usize> {
        if self.symmetric {
            let mut sorted = reels.to_vec();
            sorted.sort_unstable();
            self.lookup.get(&sorted[..]).map(|&c| c as usize)
        } else {
            self.lookup.get(reels).map(|&c| c as usize)
        }
    }

    pub fn find_exact(&self, canonical: &[Grams]) -> Option<usize> {
        self.lookup.get(canonical).map(|&c| c as usize)
    }

    pub fn component_index(&self, x: Grams) -> Option<usize> {
        self.weights.binary_search(&x).ok()
    }

    pub fn matches(&self, instance: &ProblemInstance) -> bool {
        self.reels == instance.reels()
            && self.capacity == instance.capacity()
            && self.weights == instance.dist().weights()
            && self.probs == instance.dist().probs()
    }

    pub fn ensure_matches(&self, instance: &ProblemInstance) -> Result<()> {
        if self.matches(instance) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "state space was enumerated for another instance than '{}'",
                instance.name
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_case, ComponentDistribution};

    #[test]
    fn case2_configurations_are_multiples_of_500() {
        let inst = builtin_case(2, 2).unwrap();
        let full = StateSpace::enumerate(&inst, false, DEFAULT_MAX_STATES).unwrap();
        assert_eq!(full.config_count(), 100);
        assert_eq!(full.augmented_count(), 300);
        let sym = StateSpace::enumerate(&inst, true, DEFAULT_MAX_STATES).unwrap();
        assert_eq!(sym.config_count(), 55);
        for c in 0..sym.config_count() {
            let cfg = sym.config(c);
            assert!(cfg.windows(2).all(|p| p[0] <= p[1]));
            assert!(cfg.iter().all(|w| w % 500 == 0));
        }
    }

    #[test]
    fn transitions_stay_inside() {
        let d = ComponentDistribution::new(vec![3, 4], vec![0.5, 0.5]).unwrap();
        let inst = ProblemInstance::new("t", 10, 3, d).unwrap();
        let s = StateSpace::enumerate(&inst, false, DEFAULT_MAX_STATES).unwrap();
        for c in 0..s.config_count() {
            for k in 0..2 {
                for a in 0..3 {
                    let (waste, next) = s.transition(c, k, a);
                    let (w, expected_waste) = assign(s.config(c)[a], s.weights()[k], 10);
                    assert_eq!(waste, expected_waste);
                    let mut cfg = s.config(c).to_vec();
                    cfg[a] = w;
                    assert_eq!(s.find(&cfg), Some(next));
                }
            }
        }
    }

    #[test]
    fn overflow_reports_count() {
        let inst = builtin_case(2, 3).unwrap();
        match StateSpace::enumerate(&inst, false, 50) {
            Err(Error::StateSpaceTooLarge { count, limit }) => {
                assert_eq!(limit, 50);
                assert!(count > 50);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
