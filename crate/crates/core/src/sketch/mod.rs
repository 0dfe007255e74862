//! Mergeable ℓ0 sketches over an index universe `0..N`.
//!
//! Both sketches are linear in the underlying frequency vector: the state after
//! a sequence of `(index, delta)` updates depends only on the summed vector, so
//! sketches built on disjoint parts of a stream merge into the sketch of the
//! whole. Queries issued while some entry is negative are unspecified.

mod exact;
pub mod hash;
mod randomized;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use exact::ExactCounts;
pub use randomized::{RandomizedEstimator, RandomizedSampler};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchBackend {
    Randomized,
    ExactOracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchConfig {
    pub universe_size: u128,
    pub zeta: f64,
    pub delta: f64,
    pub seed: u64,
    pub backend: SketchBackend,
}

impl SketchConfig {
    pub fn new(
        universe_size: u128,
        zeta: f64,
        delta: f64,
        seed: u64,
        backend: SketchBackend,
    ) -> Result<Self> {
        if universe_size == 0 {
            return Err(Error::Usage("universe_size must be at least 1".into()));
        }
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(Error::Usage(format!("zeta must lie in (0,1), got {zeta}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Usage(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        Ok(SketchConfig {
            universe_size,
            zeta,
            delta,
            seed,
            backend,
        })
    }

    pub fn exact(universe_size: u128, seed: u64) -> Result<Self> {
        Self::new(universe_size, 0.25, 0.01, seed, SketchBackend::ExactOracle)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SketchConfig { seed, ..*self }
    }

    fn check(&self, index: u128) -> Result<()> {
        if index >= self.universe_size {
            Err(Error::IndexOutOfRange {
                index,
                universe: self.universe_size,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum EstimatorState {
    Exact(ExactCounts),
    Randomized(RandomizedEstimator),
}

/// ℓ0 (distinct count) estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct L0Estimator {
    config: SketchConfig,
    state: EstimatorState,
}

impl L0Estimator {
    pub fn new(config: SketchConfig) -> Self {
        let state = match config.backend {
            SketchBackend::ExactOracle => EstimatorState::Exact(ExactCounts::new()),
            SketchBackend::Randomized => EstimatorState::Randomized(RandomizedEstimator::new(
                config.universe_size,
                config.zeta,
                config.delta,
                config.seed,
            )),
        };
        L0Estimator { config, state }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn update(&mut self, index: u128, delta: i64) -> Result<()> {
        self.config.check(index)?;
        match &mut self.state {
            EstimatorState::Exact(c) => c.add(index, delta),
            EstimatorState::Randomized(r) => r.update(index, delta),
        }
        Ok(())
    }

    pub fn estimate(&self) -> u64 {
        match &self.state {
            EstimatorState::Exact(c) => c.support_size() as u64,
            EstimatorState::Randomized(r) => r.estimate(),
        }
    }

    pub fn merge_from(&mut self, other: &L0Estimator) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        match (&mut self.state, &other.state) {
            (EstimatorState::Exact(a), EstimatorState::Exact(b)) => a.absorb(b),
            (EstimatorState::Randomized(a), EstimatorState::Randomized(b)) => a.absorb(b),
            _ => return Err(Error::ConfigMismatch),
        }
        Ok(())
    }

    pub fn merge(&self, other: &L0Estimator) -> Result<L0Estimator> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Exact counts when running on the oracle backend.
    pub fn exact_counts(&self) -> Option<&ExactCounts> {
        match &self.state {
            EstimatorState::Exact(c) => Some(c),
            EstimatorState::Randomized(_) => None,
        }
    }

    /// Machine words held by the sketch state.
    pub fn words(&self) -> usize {
        match &self.state {
            EstimatorState::Exact(c) => 2 * c.support_size(),
            EstimatorState::Randomized(r) => r.allocated_blocks() * r.cells_per_block(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SamplerState {
    Exact(ExactCounts),
    Randomized(RandomizedSampler),
}

/// ℓ0 sampler: returns a (near) uniform element of the support.
#[derive(Debug, Clone)]
pub struct L0Sampler {
    config: SketchConfig,
    state: SamplerState,
    rng: ChaCha8Rng,
    cache: Option<Vec<u128>>,
}

impl PartialEq for L0Sampler {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.state == other.state && self.rng == other.rng
    }
}

impl L0Sampler {
    pub fn new(config: SketchConfig) -> Self {
        let state = match config.backend {
            SketchBackend::ExactOracle => SamplerState::Exact(ExactCounts::new()),
            SketchBackend::Randomized => SamplerState::Randomized(RandomizedSampler::new(
                config.universe_size,
                config.zeta,
                config.seed,
            )),
        };
        L0Sampler {
            config,
            state,
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x4452_4157_5321_0000),
            cache: None,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn update(&mut self, index: u128, delta: i64) -> Result<()> {
        self.config.check(index)?;
        self.cache = None;
        match &mut self.state {
            SamplerState::Exact(c) => c.add(index, delta),
            SamplerState::Randomized(r) => r.update(index, delta),
        }
        Ok(())
    }

    /// Draws one support element, or `None` when the support is empty.
    /// Successive calls advance the sampler's own RNG.
    pub fn sample(&mut self) -> Option<u128> {
        if self.cache.is_none() {
            self.cache = Some(match &self.state {
                SamplerState::Exact(c) => c.support().collect(),
                SamplerState::Randomized(r) => r.recover(),
            });
        }
        let support = self.cache.as_ref().expect("cache filled above");
        if support.is_empty() {
            return None;
        }
        Some(support[self.rng.gen_range(0..support.len())])
    }

    pub fn merge_from(&mut self, other: &L0Sampler) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        self.cache = None;
        match (&mut self.state, &other.state) {
            (SamplerState::Exact(a), SamplerState::Exact(b)) => a.absorb(b),
            (SamplerState::Randomized(a), SamplerState::Randomized(b)) => a.absorb(b),
            _ => return Err(Error::ConfigMismatch),
        }
        Ok(())
    }

    pub fn merge(&self, other: &L0Sampler) -> Result<L0Sampler> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn exact_counts(&self) -> Option<&ExactCounts> {
        match &self.state {
            SamplerState::Exact(c) => Some(c),
            SamplerState::Randomized(_) => None,
        }
    }

    pub fn words(&self) -> usize {
        match &self.state {
            SamplerState::Exact(c) => 2 * c.support_size(),
            SamplerState::Randomized(r) => r.allocated_blocks() * r.cells_per_block() * 4,
        }
    }
}
