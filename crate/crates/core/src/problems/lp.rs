use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use super::simplex::{solve_lp, LinearProgram, LpOutcome};
use super::svm::Labeled;
use crate::net::NetConfig;
use crate::solver::{Anchor, LpTypeProblem, Solution, Universe};
use crate::{Error, Result};

/// Absolute guard of the constraint test.
pub const LP_GUARD: f64 = 1e-12;

/// Half-space `aᵀx ≤ b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl Constraint {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Constraint { a, b }
    }

    pub fn slack(&self, x: &[f64]) -> f64 {
        self.b - self.a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()
    }
}

/// Which coordinates of a row the net snaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowLayout {
    /// `(a, b)` snapped jointly in `[-1, 1]^{d+1}`.
    General,
    /// `(x', 1)·(u, σ) ≤ 0`; only the feature part `x'` is snapped.
    Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowNet {
    pub cube: NetConfig,
    pub layout: RowLayout,
}

impl Universe for RowNet {
    type Item = Constraint;

    fn size(&self) -> u128 {
        self.cube.net_size()
    }

    fn snap(&self, item: &Constraint) -> Result<u128> {
        match self.layout {
            RowLayout::General => {
                let mut v = item.a.clone();
                v.push(item.b);
                self.cube.snap_flat(&v)
            }
            RowLayout::Classification => {
                let k = item.a.len() - 1;
                self.cube.snap_flat(&item.a[..k])
            }
        }
    }

    fn representative(&self, index: u128) -> Constraint {
        let mut v = self.cube.unsnap_flat(index);
        match self.layout {
            RowLayout::General => {
                let b = v.pop().unwrap_or(0.0);
                Constraint::new(v, b)
            }
            RowLayout::Classification => {
                v.push(1.0);
                Constraint::new(v, 0.0)
            }
        }
    }
}

/// `max cᵀx` subject to sampled rows and `|x_j| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLpProblem {
    pub d: usize,
    pub c: Vec<f64>,
    pub eps: f64,
    pub layout: RowLayout,
}

impl BoundedLpProblem {
    pub fn new(c: Vec<f64>, eps: f64) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Usage("objective must be nonempty".into()));
        }
        if c.iter().map(|x| x * x).sum::<f64>().sqrt() > 1.0 + 1e-9 {
            return Err(Error::InputBounds(
                "objective norm must be at most 1".into(),
            ));
        }
        Ok(BoundedLpProblem {
            d: c.len(),
            c,
            eps,
            layout: RowLayout::General,
        })
    }

    /// Exact lexicographically smallest optimum over `rows` and the box.
    pub fn optimum(&self, rows: &[Constraint]) -> Result<Option<Vec<f64>>> {
        let q = <BigRational as Scalar>::from_f64;
        let lp = LinearProgram {
            n: self.d,
            rows: rows
                .iter()
                .map(|r| (r.a.iter().map(|&v| q(v)).collect(), q(r.b)))
                .collect(),
            objective: self.c.iter().map(|&v| q(v)).collect(),
            bounds: vec![<BigRational as Scalar>::one(); self.d],
        };
        Ok(match solve_lp(&lp, true)? {
            LpOutcome::Optimal(x) => Some(x.iter().map(Scalar::to_f64).collect()),
            LpOutcome::Infeasible => None,
        })
    }
}

/// The classification LP in `(u, σ)` for `d` features: maximize σ.
pub fn classification_problem(d: usize, eps: f64) -> Result<BoundedLpProblem> {
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    let mut problem = BoundedLpProblem::new(c, eps)?;
    problem.layout = RowLayout::Classification;
    Ok(problem)
}

/// Row `(u·x')+σ ≤ 0` of one labeled point, where `x' = −x` for label +1
/// and `x' = x` for label −1.
pub fn classification_row(p: &Labeled) -> Constraint {
    let sign = if p.y > 0 { -1.0 } else { 1.0 };
    let mut a: Vec<f64> = p.x.iter().map(|v| sign * v).collect();
    a.push(1.0);
    Constraint::new(a, 0.0)
}

/// Linear classification as a bounded LP over all rows of `points`.
pub fn classification_to_lp(
    points: &[Labeled],
    eps: f64,
) -> Result<(BoundedLpProblem, Vec<Constraint>)> {
    let d = match points.first() {
        Some(p) => p.x.len(),
        None => return Err(Error::EmptyInput),
    };
    let problem = classification_problem(d, eps)?;
    let rows = points
        .iter()
        .map(|p| {
            if p.x.len() != d {
                return Err(Error::InputBounds("inconsistent feature dimension".into()));
            }
            Ok(classification_row(p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((problem, rows))
}

impl LpTypeProblem for BoundedLpProblem {
    type Item = Constraint;
    type Net = RowNet;

    fn name(&self) -> &'static str {
        match self.layout {
            RowLayout::General => "lp",
            RowLayout::Classification => "classify",
        }
    }

    fn nu(&self) -> usize {
        self.d
    }

    fn lambda(&self) -> usize {
        self.d + 1
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn solve_basis(&self, items: &[Constraint]) -> Result<Solution> {
        Ok(match self.optimum(items)? {
            Some(x) => Solution::LpPoint { x },
            None => Solution::Infeasible,
        })
    }

    fn violates(&self, sol: &Solution, item: &Constraint) -> bool {
        match sol {
            Solution::LpPoint { x } => item.slack(x) < -LP_GUARD,
            _ => false,
        }
    }

    fn correct_solution(&self, sol: &Solution, _eps: f64) -> Solution {
        sol.clone()
    }

    fn solution_words(&self) -> usize {
        1
    }

    fn validate(&self, item: &Constraint) -> Result<()> {
        if item.a.len() != self.d {
            return Err(Error::InputBounds(format!(
                "expected {} coefficients, got {}",
                self.d,
                item.a.len()
            )));
        }
        let within = |v: &f64| v.abs() <= 1.0;
        match self.layout {
            RowLayout::General => {
                if !item.a.iter().all(within) || !within(&item.b) {
                    return Err(Error::InputBounds(
                        "constraint entries must lie in [-1, 1]".into(),
                    ));
                }
            }
            RowLayout::Classification => {
                if !item.a[..self.d - 1].iter().all(within) {
                    return Err(Error::InputBounds("features must lie in [-1, 1]".into()));
                }
            }
        }
        Ok(())
    }

    fn build_net(&self, _anchor: Option<&Anchor>) -> Result<RowNet> {
        let dims = match self.layout {
            RowLayout::General => self.d + 1,
            RowLayout::Classification => self.d - 1,
        };
        Ok(RowNet {
            cube: NetConfig::unit_cube(dims, self.eps)?,
            layout: self.layout,
        })
    }
}
