//! Exhaustive search over stationary deterministic policies on tiny
//! instances. Written without the library's state space or solvers so it
//! can serve as an independent reference.

use std::collections::{BTreeMap, VecDeque};

pub struct Tiny {
    pub capacity: u32,
    pub weights: Vec<u32>,
    pub probs: Vec<f64>,
    pub reels: usize,
}

fn update(w: u32, x: u32, b: u32) -> (u32, u32) {
    if w >= x {
        (w - x, 0)
    } else {
        (b - x, w)
    }
}

/// Sorted reel configurations reachable from all-empty reels.
fn configurations(t: &Tiny) -> Vec<Vec<u32>> {
    let start = vec![0; t.reels];
    let mut seen = BTreeMap::new();
    seen.insert(start.clone(), ());
    let mut queue = VecDeque::from([start]);
    while let Some(cfg) = queue.pop_front() {
        for &x in &t.weights {
            for n in 0..t.reels {
                let mut next = cfg.clone();
                next[n] = update(cfg[n], x, t.capacity).0;
                next.sort_unstable();
                if seen.insert(next.clone(), ()).is_none() {
                    queue.push_back(next);
                }
            }
        }
    }
    seen.into_keys().collect()
}

pub struct Enumeration {
    /// Per augmented state `(config, component)`: the distinct outcomes
    /// `(waste, next config)` of its actions.
    pub choices: Vec<Vec<(f64, usize)>>,
    pub configs: usize,
    pub start: usize,
}

impl Enumeration {
    pub fn policy_count(&self) -> u128 {
        self.choices.iter().map(|c| c.len() as u128).product()
    }
}

pub fn enumerate(t: &Tiny) -> Enumeration {
    let configs = configurations(t);
    let index: BTreeMap<&Vec<u32>, usize> =
        configs.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut choices = Vec::new();
    for cfg in &configs {
        for &x in &t.weights {
            let mut outs: Vec<(f64, usize)> = Vec::new();
            for n in 0..t.reels {
                let (w, waste) = update(cfg[n], x, t.capacity);
                let mut next = cfg.clone();
                next[n] = w;
                next.sort_unstable();
                let out = (waste as f64, index[&next]);
                if !outs.contains(&out) {
                    outs.push(out);
                }
            }
            choices.push(outs);
        }
    }
    Enumeration {
        choices,
        configs: configs.len(),
        start: index[&vec![0; t.reels]],
    }
}

/// Long-run average cost from the all-empty start under one policy, via
/// the lazy chain `(I + P) / 2`, whose Cesaro limit equals that of `P`.
fn gain(t: &Tiny, e: &Enumeration, policy: &[usize]) -> f64 {
    let k = t.weights.len();
    let states = e.configs * k;
    let mut mu = vec![0.0; states];
    for (j, p) in t.probs.iter().enumerate() {
        mu[e.start * k + j] = *p;
    }
    let mut next = vec![0.0; states];
    for _ in 0..200_000 {
        next.iter_mut().zip(&mu).for_each(|(n, m)| *n = 0.5 * m);
        for s in 0..states {
            let (_, to) = e.choices[s][policy[s]];
            for (j, p) in t.probs.iter().enumerate() {
                next[to * k + j] += 0.5 * mu[s] * p;
            }
        }
        let delta: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    (0..states).map(|s| mu[s] * e.choices[s][policy[s]].0).sum()
}

/// Minimum gain over every stationary deterministic policy.
pub fn best_gain(t: &Tiny) -> f64 {
    let e = enumerate(t);
    assert!(e.policy_count() <= 1 << 16, "{} policies", e.policy_count());
    let mut policy = vec![0; e.choices.len()];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(gain(t, &e, &policy));
        // Odometer increment over the per-state choice counts.
        let mut s = 0;
        loop {
            if s == policy.len() {
                return best;
            }
            policy[s] += 1;
            if policy[s] < e.choices[s].len() {
                break;
            }
            policy[s] = 0;
            s += 1;
        }
    }
}

pub fn tiny_instances() -> Vec<Tiny> {
    vec![
        Tiny {
            capacity: 5,
            weights: vec![2, 3],
            probs: vec![0.5, 0.5],
            reels: 2,
        },
        Tiny {
            capacity: 4,
            weights: vec![1, 2],
            probs: vec![0.3, 0.7],
            reels: 2,
        },
        Tiny {
            capacity: 7,
            weights: vec![3, 5],
            probs: vec![0.6, 0.4],
            reels: 2,
        },
        Tiny {
            capacity: 4,
            weights: vec![3],
            probs: vec![1.0],
            reels: 3,
        },
    ]
}
