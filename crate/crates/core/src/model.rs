//! Problem data: reel capacity, reel count, the discrete component-weight
//! distribution, and the two primitive dynamics every other module builds on.
//!
//! Assigning a component of weight `x` to a reel holding `w` grams either
//! prints from the reel (`w >= x`, the reel keeps `w - x`) or discards the
//! reel, wasting `w` grams, and prints from a fresh reel of `B` grams, which
//! then keeps `B - x`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Filament weight in grams.
pub type Grams = u32;

const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Reel update and waste for one assignment, without range checks.
#[inline(always)]
pub fn assign(w: Grams, x: Grams, capacity: Grams) -> (Grams, Grams) {
    if w >= x {
        (w - x, 0)
    } else {
        (capacity - x, w)
    }
}

/// Checked form of [`assign`]: returns `(next_weight, waste)`.
pub fn apply_assignment(w: Grams, x: Grams, capacity: Grams) -> Result<(Grams, Grams)> {
    if capacity == 0 {
        return Err(Error::input("reel capacity must be positive"));
    }
    if w >= capacity {
        return Err(Error::input(format!(
            "reel weight {w} outside 0..={}",
            capacity - 1
        )));
    }
    if x == 0 || x > capacity {
        return Err(Error::input(format!(
            "component weight {x} outside 1..={capacity}"
        )));
    }
    Ok(assign(w, x, capacity))
}

/// Discrete distribution of component weights.
///
/// Weights are kept sorted ascending with their probabilities permuted
/// alongside, so two distributions given in different orders compare equal.
#[derive(Debug, Clone)]
pub struct ComponentDistribution {
    weights: Vec<Grams>,
    probs: Vec<f64>,
    sampler: WeightedAliasIndex<f64>,
}

impl PartialEq for ComponentDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.probs == other.probs
    }
}

impl ComponentDistribution {
    pub fn new(weights: Vec<Grams>, probs: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("component distribution has no support"));
        }
        if weights.len() != probs.len() {
            return Err(Error::input(format!(
                "{} weights but {} probabilities",
                weights.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0))
        {
            return Err(Error::input(format!("probability {p} outside (0, 1]")));
        }
        if weights.contains(&0) {
            return Err(Error::input("component weights must be at least 1 gram"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::input(format!("probabilities sum to {total}, not 1")));
        }

        let mut pairs: Vec<(Grams, f64)> = weights.into_iter().zip(probs).collect();
        pairs.sort_by_key(|&(w, _)| w);
        if pairs.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::input("component weights must be distinct"));
        }
        let weights: Vec<Grams> = pairs.iter().map(|&(w, _)| w).collect();
        let probs: Vec<f64> = pairs.iter().map(|&(_, p)| p / total).collect();
        let sampler = WeightedAliasIndex::new(probs.clone())
            .map_err(|e| Error::input(format!("cannot build sampler: {e}")))?;
        Ok(Self {
            weights,
            probs,
            sampler,
        })
    }

    /// A distribution that always produces the same weight.
    pub fn deterministic(weight: Grams) -> Result<Self> {
        Self::new(vec![weight], vec![1.0])
    }

    pub fn weights(&self) -> &[Grams] {
        &self.weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> Grams {
        *self.weights.last().expect("non-empty support")
    }

    pub fn index_of(&self, weight: Grams) -> Option<usize> {
        self.weights.binary_search(&weight).ok()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(w, p)| w as f64 * p).sum()
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(w, p)| p * (w as f64 - mean).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Grams, f64)> + '_ {
        self.weights.iter().copied().zip(self.probs.iter().copied())
    }

    /// Draws the support index of the next component.
    #[inline]
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Grams {
        self.weights[self.sample_index(rng)]
    }
}

/// Capacity `B`, reel count `N` and component distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    capacity: Grams,
    reels: usize,
    dist: ComponentDistribution,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        capacity: Grams,
        reels: usize,
        dist: ComponentDistribution,
    ) -> Result<Self> {
        if reels == 0 {
            return Err(Error::input("at least one reel is required"));
        }
        if capacity < dist.max_weight() {
            return Err(Error::input(format!(
                "capacity {capacity} is below the largest component weight {}",
                dist.max_weight()
            )));
        }
        Ok(Self {
            name: name.into(),
            capacity,
            reels,
            dist,
        })
    }

    pub fn capacity(&self) -> Grams {
        self.capacity
    }

    pub fn reels(&self) -> usize {
        self.reels
    }

    pub fn dist(&self) -> &ComponentDistribution {
        &self.dist
    }

    pub fn with_reels(&self, reels: usize) -> Result<Self> {
        Self::new(self.name.clone(), self.capacity, reels, self.dist.clone())
    }

    /// Expected number of components printed from one reel, `B / E[X]`.
    pub fn fit_ratio(&self) -> f64 {
        self.capacity as f64 / self.dist.mean()
    }

    /// Horizon long enough for each reel to be replaced about three times.
    pub fn replacement_horizon(&self) -> u64 {
        (3.0 * self.reels as f64 * self.fit_ratio()).ceil() as u64
    }

    pub fn check_reels(&self, reels: &[Grams]) -> Result<()> {
        if reels.len() != self.reels {
            return Err(Error::input(format!(
                "expected {} reel weights, got {}",
                self.reels,
                reels.len()
            )));
        }
        if let Some(w) = reels.iter().find(|&&w| w >= self.capacity) {
            return Err(Error::input(format!(
                "reel weight {w} outside 0..={}",
                self.capacity - 1
            )));
        }
        Ok(())
    }

    pub fn check_component(&self, x: Grams) -> Result<()> {
        match self.dist.index_of(x) {
            Some(_) => Ok(()),
            None => Err(Error::input(format!(
                "component weight {x} is not in the support {:?}",
                self.dist.weights()
            ))),
        }
    }
}

/// Remaining filament on each of the `N` reels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReelWeights(Vec<Grams>);

impl ReelWeights {
    pub fn new(weights: Vec<Grams>, capacity: Grams) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("at least one reel is required"));
        }
        if let Some(w) = weights.iter().find(|&&w| w >= capacity) {
            return Err(Error::input(format!(
                "reel weight {w} outside 0..={}",
                capacity.saturating_sub(1)
            )));
        }
        Ok(Self(weights))
    }

    pub fn zeros(reels: usize) -> Self {
        Self(vec![0; reels])
    }

    pub fn as_slice(&self) -> &[Grams] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Grams> {
        self.0
    }
}

/// Reel weights together with the weight of the component awaiting assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AugmentedState {
    pub reels: ReelWeights,
    pub component: Grams,
}

impl AugmentedState {
    pub fn new(reels: Vec<Grams>, component: Grams, instance: &ProblemInstance) -> Result<Self> {
        instance.check_reels(&reels)?;
        instance.check_component(component)?;
        Ok(Self {
            reels: ReelWeights(reels),
            component,
        })
    }
}

/// Assigns the pending component to reel `action` (zero-based) and
/// presents `next_component`. Returns the successor state and the waste.
pub fn step(
    instance: &ProblemInstance,
    state: &AugmentedState,
    action: usize,
    next_component: Grams,
) -> Result<(AugmentedState, Grams)> {
    let reels = state.reels.as_slice();
    if action >= reels.len() {
        return Err(Error::input(format!(
            "reel index {action} out of range for {} reels",
            reels.len()
        )));
    }
    instance.check_component(next_component)?;
    let (next, waste) = apply_assignment(reels[action], state.component, instance.capacity())?;
    let mut updated = reels.to_vec();
    updated[action] = next;
    Ok((
        AugmentedState {
            reels: ReelWeights(updated),
            component: next_component,
        },
        waste,
    ))
}

/// Reel weights closed under every possible assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachableSet {
    values: Vec<Grams>,
}

impl ReachableSet {
    pub fn values(&self) -> &[Grams] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, w: Grams) -> bool {
        self.values.binary_search(&w).is_ok()
    }
}

/// `{0} ∪ {B - x}`: the empty reel plus every weight a fresh reel can have
/// right after its first print.
pub fn default_seeds(dist: &ComponentDistribution, capacity: Grams) -> Vec<Grams> {
    let mut seeds = vec![0];
    seeds.extend(dist.weights().iter().map(|&x| capacity - x));
    seeds
}

/// Least superset of `seeds` closed under `w -> assign(w, x)` for every
/// support weight `x`.
pub fn enumerate_reachable(
    dist: &ComponentDistribution,
    capacity: Grams,
    seeds: &[Grams],
) -> Result<ReachableSet> {
    if capacity < dist.max_weight() {
        return Err(Error::input(format!(
            "capacity {capacity} is below the largest component weight {}",
            dist.max_weight()
        )));
    }
    if let Some(w) = seeds.iter().find(|&&w| w >= capacity) {
        return Err(Error::input(format!(
            "seed weight {w} outside 0..{capacity}"
        )));
    }
    let mut seen: BTreeSet<Grams> = seeds.iter().copied().collect();
    let mut frontier: Vec<Grams> = seen.iter().copied().collect();
    while let Some(w) = frontier.pop() {
        for &x in dist.weights() {
            let (next, _) = assign(w, x, capacity);
            if seen.insert(next) {
                frontier.push(next);
            }
        }
    }
    Ok(ReachableSet {
        values: seen.into_iter().collect(),
    })
}

/// Fixed-capacity (5000 g) distributions used in the experiments; the reel
/// count is supplied by the caller.
pub fn builtin_case(id: u8, reels: usize) -> Result<ProblemInstance> {
    let (weights, probs): (Vec<Grams>, Vec<f64>) = match id {
        1 => (vec![1016, 898, 651], vec![0.33, 0.34, 0.33]),
        2 => (vec![1500, 1000, 500], vec![0.5, 0.25, 0.25]),
        3 => (vec![820, 792, 192], vec![0.61, 0.21, 0.18]),
        4 => (
            vec![1098, 835, 597, 540, 516, 503, 382, 152, 127, 81, 71, 62],
            vec![
                0.11, 0.02, 0.01, 0.02, 0.04, 0.39, 0.33, 0.01, 0.02, 0.01, 0.01, 0.03,
            ],
        ),
        _ => {
            return Err(Error::input(format!(
                "unknown built-in case {id}; expected 1-4"
            )))
        }
    };
    ProblemInstance::new(
        format!("case{id}"),
        5000,
        reels,
        ComponentDistribution::new(weights, probs)?,
    )
}

/// On-disk instance description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub name: String,
    #[serde(rename = "B")]
    pub capacity: Grams,
    #[serde(rename = "N")]
    pub reels: usize,
    pub weights: Vec<Grams>,
    pub probs: Vec<f64>,
}

impl InstanceConfig {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let dist = ComponentDistribution::new(self.weights, self.probs)?;
        ProblemInstance::new(self.name, self.capacity, self.reels, dist)
    }
}

impl From<&ProblemInstance> for InstanceConfig {
    fn from(instance: &ProblemInstance) -> Self {
        Self {
            name: instance.name.clone(),
            capacity: instance.capacity,
            reels: instance.reels,
            weights: instance.dist.weights().to_vec(),
            probs: instance.dist.probs().to_vec(),
        }
    }
}

/// Resolves `case1`..`case4` or a path to a JSON [`InstanceConfig`].
/// Built-in cases default to two reels.
pub fn load_instance(reference: &str) -> Result<ProblemInstance> {
    if let Some(id) = reference.strip_prefix("case") {
        if let Ok(id) = id.parse::<u8>() {
            return builtin_case(id, 2);
        }
    }
    let path = Path::new(reference);
    if !path.exists() {
        return Err(Error::input(format!(
            "'{reference}' is neither a built-in case (case1-case4) nor an existing file"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let config: InstanceConfig = serde_json::from_str(&text)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    config.into_instance()
}
