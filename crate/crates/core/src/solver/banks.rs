use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::derive_seed;
use super::source::Accumulator;
use crate::sketch::{L0Estimator, L0Sampler, SketchBackend, SketchConfig};
use crate::Result;

const TAG_SAMPLE: u64 = 1;
const TAG_CHECK_ALL: u64 = 2;
const TAG_CHECK_VIOLATORS: u64 = 3;

/// Estimator accuracy used when checking violator weight.
pub const CHECK_ZETA: f64 = 0.25;
const CHECK_DELTA: f64 = 0.01;

/// `ln Σ exp(x_i)`, exactly `x` for a single term; −∞ for an empty sum.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    match xs.len() {
        0 => f64::NEG_INFINITY,
        1 => xs[0],
        _ => {
            let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
        }
    }
}

/// Seeds and sketch parameters shared by every bank of one iteration.
#[derive(Debug, Clone, Copy)]
pub struct BankSpec {
    pub universe: u128,
    pub classes: usize,
    pub class_step: f64,
    pub backend: SketchBackend,
    pub zeta: f64,
    pub delta: f64,
    pub seed: u64,
    pub iteration: usize,
}

impl BankSpec {
    fn config(&self, tag: u64, class: usize, zeta: f64, delta: f64) -> SketchConfig {
        SketchConfig {
            universe_size: self.universe,
            zeta,
            delta,
            seed: derive_seed(self.seed, &[self.iteration as u64, tag, class as u64]),
            backend: self.backend,
        }
    }
}

/// One ℓ0 estimator/sampler pair per weight class.
#[derive(Debug, Clone)]
pub struct SampleBank {
    class_step: f64,
    estimators: Vec<L0Estimator>,
    samplers: Vec<L0Sampler>,
}

impl SampleBank {
    pub fn new(spec: &BankSpec) -> Self {
        let cfgs: Vec<SketchConfig> = (0..spec.classes)
            .map(|i| spec.config(TAG_SAMPLE, i, spec.zeta, spec.delta))
            .collect();
        SampleBank {
            class_step: spec.class_step,
            estimators: cfgs.iter().map(|c| L0Estimator::new(*c)).collect(),
            samplers: cfgs.iter().map(|c| L0Sampler::new(*c)).collect(),
        }
    }

    pub fn feed(&mut self, index: u128, class: usize, delta: i64) -> Result<()> {
        let c = class.min(self.estimators.len() - 1);
        self.estimators[c].update(index, delta)?;
        self.samplers[c].update(index, delta)
    }

    /// Estimated distinct counts per class.
    pub fn class_counts(&self) -> Vec<u64> {
        self.estimators.iter().map(L0Estimator::estimate).collect()
    }

    /// `ln` of the estimated class weights `f_i · N^{i/s}`.
    pub fn ln_class_weights(&self) -> Vec<f64> {
        self.class_counts()
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                if f == 0 {
                    f64::NEG_INFINITY
                } else {
                    (f as f64).ln() + i as f64 * self.class_step
                }
            })
            .collect()
    }

    pub fn ln_total_weight(&self) -> f64 {
        log_sum_exp(self.ln_class_weights())
    }

    /// Draws `count` samples: a class with probability proportional to its
    /// weight, then a support element of that class.
    pub fn draw(&mut self, count: usize, rng: &mut ChaCha8Rng) -> Vec<u128> {
        let lw = self.ln_class_weights();
        let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY || count == 0 {
            return Vec::new();
        }
        let mut cumulative = Vec::with_capacity(lw.len());
        let mut acc = 0.0;
        for &w in &lw {
            acc += (w - top).exp();
            cumulative.push(acc);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let x = rng.gen::<f64>() * acc;
            let class = cumulative
                .iter()
                .position(|&c| x < c)
                .unwrap_or(cumulative.len() - 1);
            if let Some(idx) = self.samplers[class].sample() {
                out.push(idx);
            }
        }
        out
    }

    pub fn words(&self) -> usize {
        self.estimators
            .iter()
            .map(L0Estimator::words)
            .sum::<usize>()
            + self.samplers.iter().map(L0Sampler::words).sum::<usize>()
    }
}

impl Accumulator for SampleBank {
    fn merge_into(&mut self, other: Self) -> Result<()> {
        for (a, b) in self.estimators.iter_mut().zip(&other.estimators) {
            a.merge_from(b)?;
        }
        for (a, b) in self.samplers.iter_mut().zip(&other.samplers) {
            a.merge_from(b)?;
        }
        Ok(())
    }
}

/// Per-class estimators over all points and over violators only.
#[derive(Debug, Clone)]
pub struct CheckBank {
    class_step: f64,
    all: Vec<L0Estimator>,
    violators: Vec<L0Estimator>,
}

/// Outcome of the violator-weight test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome {
    pub success: bool,
    pub violators_empty: bool,
    pub ln_total: f64,
    pub ln_violators: f64,
    pub violator_count: u64,
}

impl CheckBank {
    pub fn new(spec: &BankSpec) -> Self {
        let all = (0..spec.classes)
            .map(|i| L0Estimator::new(spec.config(TAG_CHECK_ALL, i, CHECK_ZETA, CHECK_DELTA)))
            .collect();
        let violators = (0..spec.classes)
            .map(|i| L0Estimator::new(spec.config(TAG_CHECK_VIOLATORS, i, CHECK_ZETA, CHECK_DELTA)))
            .collect();
        CheckBank {
            class_step: spec.class_step,
            all,
            violators,
        }
    }

    pub fn feed(&mut self, index: u128, class: usize, violator: bool, delta: i64) -> Result<()> {
        let c = class.min(self.all.len() - 1);
        self.all[c].update(index, delta)?;
        if violator {
            self.violators[c].update(index, delta)?;
        }
        Ok(())
    }

    fn ln_weight(&self, bank: &[L0Estimator]) -> f64 {
        log_sum_exp(bank.iter().enumerate().map(|(i, e)| {
            let f = e.estimate();
            if f == 0 {
                f64::NEG_INFINITY
            } else {
                (f as f64).ln() + i as f64 * self.class_step
            }
        }))
    }

    pub fn ln_total(&self) -> f64 {
        self.ln_weight(&self.all)
    }

    pub fn ln_violators(&self) -> f64 {
        self.ln_weight(&self.violators)
    }

    pub fn violator_count(&self) -> u64 {
        self.violators.iter().map(L0Estimator::estimate).sum()
    }

    pub fn outcome(&self, mu: f64) -> CheckOutcome {
        evaluate_check(
            self.ln_total(),
            self.ln_violators(),
            self.violator_count(),
            mu,
        )
    }

    pub fn words(&self) -> usize {
        self.all
            .iter()
            .chain(&self.violators)
            .map(L0Estimator::words)
            .sum()
    }
}

/// `(1/(1+ζ))·w(V) ≤ μ·(1/(1−ζ))·w(Q)`, evaluated in log space.
pub fn evaluate_check(
    ln_total: f64,
    ln_violators: f64,
    violator_count: u64,
    mu: f64,
) -> CheckOutcome {
    let lhs = ln_violators - (1.0 + CHECK_ZETA).ln();
    let rhs = mu.ln() + ln_total - (1.0 - CHECK_ZETA).ln();
    CheckOutcome {
        success: ln_violators == f64::NEG_INFINITY || lhs <= rhs,
        violators_empty: violator_count == 0,
        ln_total,
        ln_violators,
        violator_count,
    }
}

impl Accumulator for CheckBank {
    fn merge_into(&mut self, other: Self) -> Result<()> {
        for (a, b) in self.all.iter_mut().zip(&other.all) {
            a.merge_from(b)?;
        }
        for (a, b) in self.violators.iter_mut().zip(&other.violators) {
            a.merge_from(b)?;
        }
        Ok(())
    }
}
