//! Relative value iteration for average-cost Markov reward processes.
//!
//! Iterates `h <- h + τ (T h - h)` where `T h = c + P h`. The damping
//! `τ < 1` is the aperiodicity transformation: it mixes a self-loop into
//! every row, which leaves the gain and the bias unchanged but guarantees
//! convergence on periodic chains. Iterates are left unnormalized; the bias
//! is pinned to zero at the reference state once the span of `T h - h`
//! drops below the tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RviOptions {
    /// Stop once `max(T h - h) - min(T h - h)` is at most this (grams).
    pub tolerance: f64,
    pub max_iters: usize,
    /// Weight of the Bellman update; `1.0` disables the self-loop mixing.
    pub damping: f64,
}

impl Default for RviOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iters: 2_000_000,
            damping: 0.5,
        }
    }
}

impl RviOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::input("tolerance must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::input("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Sparse Markov reward process in row-compressed form.
#[derive(Debug, Clone, Default)]
pub(crate) struct Mrp {
    pub cost: Vec<f64>,
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub probs: Vec<f64>,
}

impl Mrp {
    pub fn with_capacity(states: usize, edges: usize) -> Self {
        let mut offsets = Vec::with_capacity(states + 1);
        offsets.push(0);
        Self {
            cost: Vec::with_capacity(states),
            offsets,
            targets: Vec::with_capacity(edges),
            probs: Vec::with_capacity(edges),
        }
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    /// Appends a state; `edges` may repeat targets.
    pub fn push_state(&mut self, cost: f64, edges: impl IntoIterator<Item = (u32, f64)>) {
        self.cost.push(cost);
        for (t, p) in edges {
            self.targets.push(t);
            self.probs.push(p);
        }
        self.offsets.push(self.targets.len());
    }

    /// `c(s) + Σ P(s, t) h(t)`.
    #[inline]
    pub fn backup(&self, s: usize, h: &[f64]) -> f64 {
        let range = self.offsets[s]..self.offsets[s + 1];
        let mut acc = self.cost[s];
        for (t, p) in self.targets[range.clone()].iter().zip(&self.probs[range]) {
            acc += p * h[*t as usize];
        }
        acc
    }

    /// `max |h(s) + g - c(s) - Σ P(s, t) h(t)|`.
    pub fn residual(&self, gain: f64, h: &[f64]) -> f64 {
        (0..self.len())
            .map(|s| (h[s] + gain - self.backup(s, h)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct MrpSolution {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub(crate) fn solve_mrp(mrp: &Mrp, reference: usize, opts: &RviOptions) -> Result<MrpSolution> {
    opts.validate()?;
    let n = mrp.len();
    if reference >= n {
        return Err(Error::input("reference state outside the chain"));
    }
    let tau = opts.damping;
    let mut h = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut span = f64::INFINITY;
    for iteration in 1..=opts.max_iters {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..n {
            let diff = mrp.backup(s, &h) - h[s];
            lo = lo.min(diff);
            hi = hi.max(diff);
            next[s] = h[s] + tau * diff;
        }
        span = hi - lo;
        if span <= opts.tolerance {
            let gain = 0.5 * (hi + lo);
            let pin = h[reference];
            h.iter_mut().for_each(|v| *v -= pin);
            let residual = mrp.residual(gain, &h);
            return Ok(MrpSolution {
                gain,
                bias: h,
                residual,
                iterations: iteration,
            });
        }
        std::mem::swap(&mut h, &mut next);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iters,
        span,
    })
}
