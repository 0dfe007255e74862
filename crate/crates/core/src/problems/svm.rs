use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::scalar::solve_square;
use crate::net::NetConfig;
use crate::solver::{Anchor, BudgetPolicy, LpTypeProblem, Solution, Universe};
use crate::{Error, Result};

/// Margin slack accepted by the violation test.
pub const SVM_GUARD: f64 = 1e-9;
const FEASIBLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub x: Vec<f64>,
    /// −1 or +1.
    pub y: i8,
}

impl Labeled {
    pub fn new(x: Vec<f64>, y: i8) -> Self {
        Labeled { x, y }
    }
}

/// Cube lattice over features, doubled for the label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledNet {
    pub cube: NetConfig,
}

impl Universe for LabeledNet {
    type Item = Labeled;

    fn size(&self) -> u128 {
        2 * (self.cube.net_size() - 1) + 1
    }

    fn snap(&self, item: &Labeled) -> Result<u128> {
        let f = self.cube.snap_flat(&item.x)?;
        let half = self.cube.net_size() - 1;
        Ok(if item.y > 0 { f + half } else { f })
    }

    fn representative(&self, index: u128) -> Labeled {
        let half = self.cube.net_size() - 1;
        if index > half {
            Labeled::new(self.cube.unsnap_flat(index - half), 1)
        } else {
            Labeled::new(self.cube.unsnap_flat(index), -1)
        }
    }
}

/// Hard-margin linear SVM: `min ‖u‖²` subject to `y_i(uᵀz_i − b) ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmProblem {
    pub d: usize,
    pub gamma: f64,
    pub eps: f64,
}

impl SvmProblem {
    pub fn new(d: usize, gamma: f64, eps: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Usage(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(SvmProblem { d, gamma, eps })
    }

    /// Per-axis net accuracy, `eps·γ/2`.
    pub fn net_eps(&self) -> f64 {
        self.eps * self.gamma / 2.0
    }
}

pub fn margin(u: &[f64], b: f64, p: &Labeled) -> f64 {
    p.y as f64 * (u.iter().zip(&p.x).map(|(a, x)| a * x).sum::<f64>() - b)
}

fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum()
}

fn lex_cmp(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> Ordering {
    a.0.iter()
        .chain(std::iter::once(&a.1))
        .zip(b.0.iter().chain(std::iter::once(&b.1)))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// KKT candidate with the points of `active` on the margin.
fn kkt(active: &[&Labeled]) -> Option<(Vec<f64>, f64)> {
    let k = active.len();
    let d = active[0].x.len();
    // unknowns α_1..α_k, b
    let mut m = vec![vec![0.0; k + 1]; k + 1];
    let mut rhs = vec![0.0; k + 1];
    for i in 0..k {
        let yi = active[i].y as f64;
        for j in 0..k {
            let yj = active[j].y as f64;
            let g: f64 = active[i]
                .x
                .iter()
                .zip(&active[j].x)
                .map(|(a, b)| a * b)
                .sum();
            m[i][j] = yi * yj * g;
        }
        m[i][k] = -yi;
        rhs[i] = 1.0;
        m[k][i] = yi;
    }
    let sol = solve_square(&m, &rhs)?;
    if sol[..k].iter().any(|&a| a < -FEASIBLE_TOL) {
        return None;
    }
    let mut u = vec![0.0; d];
    for (p, &a) in active.iter().zip(&sol[..k]) {
        for (uj, xj) in u.iter_mut().zip(&p.x) {
            *uj += a * p.y as f64 * xj;
        }
    }
    Some((u, sol[k]))
}

/// Exact optimum on a small set by enumerating margin sets of size ≤ d+1.
pub(crate) fn small_svm(points: &[&Labeled], d: usize) -> Option<(Vec<f64>, f64, Vec<usize>)> {
    let n = points.len();
    let mut best: Option<((Vec<f64>, f64), Vec<usize>)> = None;
    let feasible = |u: &[f64], b: f64| points.iter().all(|p| margin(u, b, p) >= 1.0 - FEASIBLE_TOL);
    let mut consider = |cand: (Vec<f64>, f64), set: Vec<usize>| {
        if !feasible(&cand.0, cand.1) {
            return;
        }
        let better = match &best {
            None => true,
            Some((b, _)) => {
                let (na, nb) = (norm2(&cand.0), norm2(&b.0));
                na < nb - 1e-12 || (na <= nb + 1e-12 && lex_cmp(&cand, b) == Ordering::Less)
            }
        };
        if better {
            best = Some((cand, set));
        }
    };
    if let Some(first) = points.first() {
        if points.iter().all(|p| p.y == first.y) {
            consider((vec![0.0; d], -(first.y as f64)), Vec::new());
        }
    }
    let max_k = (d + 1).min(n);
    for k in 1..=max_k {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let active: Vec<&Labeled> = idx.iter().map(|&i| points[i]).collect();
            if let Some(c) = kkt(&active) {
                consider(c, idx.clone());
            }
            // next k-combination
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    best.map(|((u, b), set)| (u, b, set))
}

/// Incremental solver: keep a basis, add the worst violator, re-solve the
/// basis exactly, until no point violates.
pub fn svm_optimum(points: &[Labeled], d: usize) -> Result<Option<(Vec<f64>, f64)>> {
    let Some(first) = points.first() else {
        return Ok(Some((vec![0.0; d], 0.0)));
    };
    let mut basis: Vec<&Labeled> = vec![first];
    // a separable set's optimum strictly improves each round; 4n rounds guards against float ties
    for _ in 0..(4 * points.len() + 16) {
        let Some((u, b, set)) = small_svm(&basis, d) else {
            return Ok(None);
        };
        let worst = points
            .iter()
            .map(|p| (margin(&u, b, p), p))
            .filter(|(m, _)| *m < 1.0 - FEASIBLE_TOL)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match worst {
            None => return Ok(Some((u, b))),
            Some((_, p)) => {
                let mut next: Vec<&Labeled> = set.iter().map(|&i| basis[i]).collect();
                if next.is_empty() {
                    next = basis.clone();
                }
                next.push(p);
                basis = next;
            }
        }
    }
    Err(Error::Internal("SVM basis search did not settle".into()))
}

impl LpTypeProblem for SvmProblem {
    type Item = Labeled;
    type Net = LabeledNet;

    fn name(&self) -> &'static str {
        "svm"
    }

    fn nu(&self) -> usize {
        self.d + 2
    }

    fn lambda(&self) -> usize {
        self.d + 1
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn solve_basis(&self, items: &[Labeled]) -> Result<Solution> {
        let mut pts = items.to_vec();
        pts.sort_by(|a, b| {
            a.y.cmp(&b.y).then_with(|| {
                a.x.iter()
                    .zip(&b.x)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
        });
        pts.dedup();
        Ok(match svm_optimum(&pts, self.d)? {
            Some((u, b)) => Solution::Hyperplane { u, b },
            None => Solution::Infeasible,
        })
    }

    fn violates(&self, sol: &Solution, item: &Labeled) -> bool {
        match sol {
            Solution::Hyperplane { u, b } => margin(u, *b, item) < 1.0 - SVM_GUARD,
            _ => false,
        }
    }

    fn correct_solution(&self, sol: &Solution, eps: f64) -> Solution {
        match sol {
            Solution::Hyperplane { u, b } => Solution::Hyperplane {
                u: u.iter().map(|x| (1.0 + 2.0 * eps) * x).collect(),
                b: (1.0 + 2.0 * eps) * b,
            },
            other => other.clone(),
        }
    }

    fn solution_words(&self) -> usize {
        2
    }

    fn budget_policy(&self) -> BudgetPolicy {
        BudgetPolicy::Infeasible
    }

    fn validate(&self, item: &Labeled) -> Result<()> {
        if item.x.len() != self.d {
            return Err(Error::InputBounds(format!(
                "expected {} features, got {}",
                self.d,
                item.x.len()
            )));
        }
        if item.y != 1 && item.y != -1 {
            return Err(Error::InputBounds(format!(
                "label must be ±1, got {}",
                item.y
            )));
        }
        if item.x.iter().any(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InputBounds("features must lie in [-1, 1]".into()));
        }
        Ok(())
    }

    fn build_net(&self, _anchor: Option<&Anchor>) -> Result<LabeledNet> {
        Ok(LabeledNet {
            cube: NetConfig::unit_cube(self.d, self.net_eps())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let p = SvmProblem::new(2, 0.5, 0.1).unwrap();
        let sol = p
            .solve_basis(&[
                Labeled::new(vec![1.0, 0.0], 1),
                Labeled::new(vec![-1.0, 0.0], -1),
            ])
            .unwrap();
        let Solution::Hyperplane { u, b } = sol else {
            panic!()
        };
        assert!((u[0] - 1.0).abs() < 1e-12 && u[1].abs() < 1e-12 && b.abs() < 1e-12);
    }

    #[test]
    fn coincident_opposite_labels() {
        let p = SvmProblem::new(2, 0.5, 0.1).unwrap();
        let sol = p
            .solve_basis(&[
                Labeled::new(vec![0.3, 0.3], 1),
                Labeled::new(vec![0.3, 0.3], -1),
            ])
            .unwrap();
        assert_eq!(sol, Solution::Infeasible);
    }

    #[test]
    fn single_class() {
        let p = SvmProblem::new(1, 0.5, 0.1).unwrap();
        let sol = p.solve_basis(&[Labeled::new(vec![0.5], 1)]).unwrap();
        assert_eq!(
            sol,
            Solution::Hyperplane {
                u: vec![0.0],
                b: -1.0
            }
        );
    }

    #[test]
    fn label_net_round_trip() {
        let p = SvmProblem::new(2, 0.5, 0.2).unwrap();
        let net = p.build_net(None).unwrap();
        for item in [
            Labeled::new(vec![0.5, -0.5], 1),
            Labeled::new(vec![0.5, -0.5], -1),
        ] {
            let idx = net.snap(&item).unwrap();
            assert!(idx < net.size());
            let rep = net.representative(idx);
            assert_eq!(rep.y, item.y);
            assert_eq!(net.snap(&rep).unwrap(), idx);
        }
    }
}
