//! Monte-Carlo estimation of long-run waste per component.
//!
//! Each replication owns two ChaCha streams split from the master seed by
//! stream id: one for component arrivals and one for the policy's own
//! randomness. Arrivals never depend on decisions, so with `crn` on every
//! policy sees exactly the same component sequence in replication `r`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{assign, Grams, ProblemInstance};
use crate::policy::{best_fit, first_fit, Policy};

const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Components per replication, warm-up included.
    pub horizon: u64,
    /// Leading components excluded from the averages.
    pub warmup: u64,
    pub replications: usize,
    pub seed: u64,
    /// Starting reel weights; all empty when `None`.
    pub initial_reels: Option<Vec<Grams>>,
    /// Share arrival streams across policies.
    pub crn: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            warmup: 300,
            replications: 30,
            seed: 42,
            initial_reels: None,
            crn: true,
        }
    }
}

impl SimulationConfig {
    /// Defaults with the horizon raised to at least `3 N B / E[X]`.
    pub fn for_instance(instance: &ProblemInstance) -> Self {
        let mut config = Self::default();
        config.horizon = config.horizon.max(instance.replacement_horizon());
        config
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::input(format!(
                "horizon {} must exceed warm-up {}",
                self.horizon, self.warmup
            )));
        }
        if self.replications == 0 {
            return Err(Error::input("at least one replication is required"));
        }
        if let Some(reels) = &self.initial_reels {
            instance.check_reels(reels)?;
        }
        Ok(())
    }

    fn initial(&self, reels: usize) -> Vec<Grams> {
        self.initial_reels.clone().unwrap_or_else(|| vec![0; reels])
    }
}

/// Totals of one replication after warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReplicationTotals {
    pub components: u64,
    pub waste: u64,
    /// Assignments that discarded a reel, including empty ones.
    pub replacements: u64,
}

impl ReplicationTotals {
    pub fn mean(&self) -> f64 {
        self.waste as f64 / self.components as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub instance: String,
    pub reels: usize,
    pub policy: String,
    pub mean: f64,
    pub std_error: f64,
    pub ci95: f64,
    pub replication_means: Vec<f64>,
    pub total_components: u64,
    pub total_waste: u64,
    pub replacements: u64,
    pub horizon: u64,
    pub warmup: u64,
    pub replications: usize,
    pub seed: u64,
}

/// Mean, standard error and 95% half-width across replication means.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    (mean, se, Z95 * se)
}

fn arrival_rng(config: &SimulationConfig, policy: &Policy, rep: usize) -> ChaCha8Rng {
    let seed = if config.crn {
        config.seed
    } else {
        config.seed ^ name_hash(policy.name())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * rep as u64);
    rng
}

fn choice_rng(config: &SimulationConfig, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2 * rep as u64 + 1);
    rng
}

// FNV-1a; only needs to be stable across runs.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Runs replication `rep` of `policy`.
pub fn run_replication(
    instance: &ProblemInstance,
    policy: &Policy,
    config: &SimulationConfig,
    rep: usize,
) -> Result<ReplicationTotals> {
    let mut arrivals = arrival_rng(config, policy, rep);
    let mut choices = choice_rng(config, rep);
    let mut reels = config.initial(instance.reels());
    let capacity = instance.capacity();
    let dist = instance.dist();
    let warmup = config.warmup;
    let mut totals = ReplicationTotals::default();

    macro_rules! drive {
        (|$r:ident, $x:ident| $choose:expr) => {{
            for t in 0..config.horizon {
                let $x = dist.sample(&mut arrivals);
                let $r = &reels[..];
                let n: usize = $choose;
                let w = reels[n];
                let (next, waste) = assign(w, $x, capacity);
                reels[n] = next;
                if t >= warmup {
                    totals.components += 1;
                    totals.waste += waste as u64;
                    totals.replacements += (w < $x) as u64;
                }
            }
        }};
    }

    match policy {
        Policy::FirstFit => drive!(|r, x| first_fit(r, x)),
        Policy::BestFit => drive!(|r, x| best_fit(r, x)),
        Policy::Index(bias) => drive!(|r, x| {
            let mut arg = 0;
            let mut best = f64::INFINITY;
            for (n, &w) in r.iter().enumerate() {
                let score = bias.index(w, x);
                if score < best {
                    best = score;
                    arg = n;
                }
            }
            arg
        }),
        _ => drive!(|r, x| policy.choose(instance, r, x, &mut choices)?),
    }
    Ok(totals)
}

pub fn simulate(
    instance: &ProblemInstance,
    policy: &Policy,
    config: &SimulationConfig,
) -> Result<SimulationReport> {
    config.validate(instance)?;
    policy.validate(instance)?;
    let totals: Vec<ReplicationTotals> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(instance, policy, config, rep))
        .collect::<Result<_>>()?;
    Ok(report(instance, policy, config, &totals))
}

fn report(
    instance: &ProblemInstance,
    policy: &Policy,
    config: &SimulationConfig,
    totals: &[ReplicationTotals],
) -> SimulationReport {
    let replication_means: Vec<f64> = totals.iter().map(ReplicationTotals::mean).collect();
    let (_, std_error, ci95) = summarize(&replication_means);
    let total_components: u64 = totals.iter().map(|t| t.components).sum();
    let total_waste: u64 = totals.iter().map(|t| t.waste).sum();
    SimulationReport {
        instance: instance.name.clone(),
        reels: instance.reels(),
        policy: policy.name().to_string(),
        mean: total_waste as f64 / total_components as f64,
        std_error,
        ci95,
        replication_means,
        total_components,
        total_waste,
        replacements: totals.iter().map(|t| t.replacements).sum(),
        horizon: config.horizon,
        warmup: config.warmup,
        replications: config.replications,
        seed: config.seed,
    }
}

/// Difference `first - second` of paired replication means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub first: String,
    pub second: String,
    pub mean_difference: f64,
    pub std_error: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reports: Vec<SimulationReport>,
    pub pairs: Vec<PairedDifference>,
}

/// Simulates every policy on identical arrival streams and reports all
/// pairwise differences. Common random numbers are always on here.
pub fn compare(
    instance: &ProblemInstance,
    policies: &[Policy],
    config: &SimulationConfig,
) -> Result<Comparison> {
    if policies.len() < 2 {
        return Err(Error::input("comparison needs at least two policies"));
    }
    let config = SimulationConfig {
        crn: true,
        ..config.clone()
    };
    let reports = policies
        .iter()
        .map(|p| simulate(instance, p, &config))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let diffs: Vec<f64> = reports[i]
                .replication_means
                .iter()
                .zip(&reports[j].replication_means)
                .map(|(a, b)| a - b)
                .collect();
            let (mean_difference, std_error, ci95) = summarize(&diffs);
            pairs.push(PairedDifference {
                first: reports[i].policy.clone(),
                second: reports[j].policy.clone(),
                mean_difference,
                std_error,
                ci95,
            });
        }
    }
    Ok(Comparison { reports, pairs })
}

/// One report per reel count; each horizon is raised to `3 N B / E[X]`
/// when that is longer than the configured one.
pub fn sweep_reels(
    template: &ProblemInstance,
    policy: &Policy,
    reel_counts: &[usize],
    config: &SimulationConfig,
) -> Result<Vec<SimulationReport>> {
    if reel_counts.is_empty() {
        return Err(Error::input("no reel counts given"));
    }
    reel_counts
        .iter()
        .map(|&n| {
            let instance = template.with_reels(n)?;
            let config = SimulationConfig {
                horizon: config.horizon.max(instance.replacement_horizon()),
                initial_reels: None,
                ..config.clone()
            };
            simulate(&instance, policy, &config)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    /// `(N, f(N+1) - 2 f(N) + f(N-1))` wherever both neighbours exist.
    pub second_differences: Vec<(usize, f64)>,
    pub argmax: usize,
}

/// Second discrete differences of a waste curve `f(N)`.
pub fn elbow(curve: &[(usize, f64)]) -> Result<ElbowReport> {
    if curve.len() < 3 {
        return Err(Error::input("the elbow needs at least three points"));
    }
    let mut points = curve.to_vec();
    points.sort_by_key(|&(n, _)| n);
    if points.windows(2).any(|p| p[0].0 == p[1].0) {
        return Err(Error::input("duplicate reel count in curve"));
    }
    let second_differences: Vec<(usize, f64)> = points
        .windows(3)
        .filter(|w| w[1].0 == w[0].0 + 1 && w[2].0 == w[1].0 + 1)
        .map(|w| (w[1].0, w[2].1 - 2.0 * w[1].1 + w[0].1))
        .collect();
    let argmax = second_differences
        .iter()
        .fold(None, |best: Option<(usize, f64)>, &(n, d)| match best {
            Some((_, b)) if b >= d => best,
            _ => Some((n, d)),
        })
        .map(|(n, _)| n)
        .ok_or_else(|| Error::input("the elbow needs three consecutive reel counts"))?;
    Ok(ElbowReport {
        second_differences,
        argmax,
    })
}
