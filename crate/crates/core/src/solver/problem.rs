use serde::{Deserialize, Serialize};

use crate::Result;

/// Solution of an LP-type problem on a finite set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solution {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Hyperplane {
        u: Vec<f64>,
        b: f64,
    },
    Infeasible,
    LpPoint {
        x: Vec<f64>,
    },
    /// Row-major symmetric `dim × dim` matrix; `margin` carries σ for the
    /// saddle-point form.
    SdpMatrix {
        dim: usize,
        entries: Vec<f64>,
        margin: Option<f64>,
    },
}

impl Solution {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Solution::Infeasible)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Solution::Ball { .. } => "ball",
            Solution::Hyperplane { .. } => "hyperplane",
            Solution::Infeasible => "infeasible",
            Solution::LpPoint { .. } => "lp_point",
            Solution::SdpMatrix { .. } => "sdp_matrix",
        }
    }
}

/// Center and radius bound fixed before solving radial problems.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub center: Vec<f64>,
    pub r_max: f64,
}

/// A finite universe of net points addressed by flat indices.
pub trait Universe: Sync {
    type Item;

    fn size(&self) -> u128;

    fn snap(&self, item: &Self::Item) -> Result<u128>;

    /// The net representative of `index`.
    fn representative(&self, index: u128) -> Self::Item;
}

/// What to report when the iteration budget runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetPolicy {
    Error,
    Infeasible,
}

pub trait LpTypeProblem: Sync {
    type Item: Clone + Send + Sync;
    type Net: Universe<Item = Self::Item>;

    fn name(&self) -> &'static str;

    /// Combinatorial dimension ν.
    fn nu(&self) -> usize;

    /// VC dimension λ.
    fn lambda(&self) -> usize;

    fn eps(&self) -> f64;

    /// Exact solution on a small set; deterministic.
    fn solve_basis(&self, items: &[Self::Item]) -> Result<Solution>;

    /// True iff adding `item` to a set solved by `sol` changes the solution.
    fn violates(&self, sol: &Solution, item: &Self::Item) -> bool;

    /// Maps a solution of the snapped instance to one for the original input.
    fn correct_solution(&self, sol: &Solution, eps: f64) -> Solution;

    /// Words a solution occupies in a message.
    fn solution_words(&self) -> usize;

    fn budget_policy(&self) -> BudgetPolicy {
        BudgetPolicy::Error
    }

    /// Radial problems need a center and radius bound before the net exists.
    fn needs_anchor(&self) -> bool {
        false
    }

    /// Geometric point used for centering, if the problem is radial.
    fn point_of<'a>(&self, _item: &'a Self::Item) -> Option<&'a [f64]> {
        None
    }

    /// Checks declared input bounds without snapping.
    fn validate(&self, _item: &Self::Item) -> Result<()> {
        Ok(())
    }

    fn build_net(&self, anchor: Option<&Anchor>) -> Result<Self::Net>;
}
