use super::problem::{LpTypeProblem, Solution};

/// Implicit per-point weights: a point's weight is `N^{v/s}` where `v` counts
/// the stored solutions it violates. Nothing is stored per point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightOracle {
    stored: Vec<Solution>,
    universe: u128,
    s: f64,
}

impl WeightOracle {
    pub fn new(universe: u128, s: f64) -> Self {
        WeightOracle {
            stored: Vec::new(),
            universe,
            s,
        }
    }

    pub fn stored(&self) -> &[Solution] {
        &self.stored
    }

    pub fn push(&mut self, sol: Solution) {
        self.stored.push(sol);
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn exponent<P: LpTypeProblem>(&self, problem: &P, item: &P::Item) -> usize {
        self.stored
            .iter()
            .filter(|sol| problem.violates(sol, item))
            .count()
    }

    /// `ln` of the weight of a point with exponent `v`.
    pub fn ln_weight(&self, v: usize) -> f64 {
        v as f64 * (self.universe as f64).ln() / self.s
    }
}
