//! Vertex simplex for `max cᵀx` subject to `Ax ≤ b` and a box on `x`, with
//! Bland's rule and an optional lexicographic tie-break on optimal faces.

use std::cmp::Ordering;

use super::scalar::{dot, solve_square, Scalar};
use crate::{Error, Result};

const PIVOT_CAP: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub n: usize,
    pub rows: Vec<(Vec<T>, T)>,
    pub objective: Vec<T>,
    /// `|x_j| ≤ bounds[j]`.
    pub bounds: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal(Vec<T>),
    Infeasible,
}

fn unit<T: Scalar>(n: usize, j: usize, v: T) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[j] = v;
    e
}

/// Primal simplex over constraint bases: a vertex is the solution of `n`
/// tight rows; a pivot releases the tight row with the smallest index whose
/// multiplier is negative and enters the first blocking row.
fn optimize<T: Scalar>(
    rows: &[(Vec<T>, T)],
    basis: &mut [usize],
    objective: &[T],
) -> Result<Vec<T>> {
    let n = basis.len();
    for _ in 0..PIVOT_CAP {
        let ab: Vec<Vec<T>> = basis.iter().map(|&i| rows[i].0.clone()).collect();
        let bb: Vec<T> = basis.iter().map(|&i| rows[i].1.clone()).collect();
        let x = solve_square(&ab, &bb)
            .ok_or_else(|| Error::Internal("singular simplex basis".into()))?;
        let abt: Vec<Vec<T>> = (0..n)
            .map(|c| (0..n).map(|r| ab[r][c].clone()).collect())
            .collect();
        let y = solve_square(&abt, objective)
            .ok_or_else(|| Error::Internal("singular simplex basis".into()))?;
        let leave = (0..n)
            .filter(|&p| y[p].sign() == Ordering::Less)
            .min_by_key(|&p| basis[p]);
        let Some(pos) = leave else {
            return Ok(x);
        };
        let dir = solve_square(&ab, &unit(n, pos, T::one().neg()))
            .ok_or_else(|| Error::Internal("singular simplex basis".into()))?;
        let mut enter: Option<(usize, T)> = None;
        for (i, (a, b)) in rows.iter().enumerate() {
            if basis.contains(&i) {
                continue;
            }
            let ad = dot(a, &dir);
            if ad.sign() != Ordering::Greater {
                continue;
            }
            let mut t = b.sub(&dot(a, &x)).div(&ad);
            if t.sign() == Ordering::Less {
                t = T::zero();
            }
            match &enter {
                Some((_, best)) if t.cmp_to(best) != Ordering::Less => {}
                _ => enter = Some((i, t)),
            }
        }
        let (i, _) = enter.ok_or_else(|| Error::Internal("unbounded linear program".into()))?;
        basis[pos] = i;
    }
    Err(Error::Internal("simplex pivot cap reached".into()))
}

/// Solves the program; with `lexicographic`, returns the lexicographically
/// smallest optimal point.
pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>, lexicographic: bool) -> Result<LpOutcome<T>> {
    let n = lp.n;
    let m = n + 1;
    let lift = |a: &[T], tau: T| {
        let mut v = a.to_vec();
        v.push(tau);
        v
    };
    let mut rows: Vec<(Vec<T>, T)> = Vec::with_capacity(2 * m + lp.rows.len() + n + 2);
    for j in 0..n {
        rows.push((unit(m, j, T::one()), lp.bounds[j].clone()));
        rows.push((unit(m, j, T::one().neg()), lp.bounds[j].clone()));
    }
    let x0: Vec<T> = lp.bounds.iter().map(|b| b.neg()).collect();
    let mut tau0 = T::zero();
    let mut worst: Option<usize> = None;
    for (i, (a, b)) in lp.rows.iter().enumerate() {
        let gap = dot(a, &x0).sub(b);
        if gap.cmp_to(&tau0) == Ordering::Greater {
            tau0 = gap;
            worst = Some(i);
        }
    }
    rows.push((unit(m, n, T::one().neg()), T::zero()));
    rows.push((unit(m, n, T::one()), tau0.add(&T::one())));
    let user0 = rows.len();
    for (a, b) in &lp.rows {
        rows.push((lift(a, T::one().neg()), b.clone()));
    }
    let mut basis: Vec<usize> = (0..n).map(|j| 2 * j + 1).collect();
    basis.push(match worst {
        Some(i) => user0 + i,
        None => 2 * n,
    });
    // phase 1: drive the shared slack τ to zero
    let phase1 = optimize(&rows, &mut basis, &unit(m, n, T::one().neg()))?;
    if phase1[n].sign() == Ordering::Greater {
        return Ok(LpOutcome::Infeasible);
    }
    rows.push((unit(m, n, T::one()), T::zero()));
    let obj = lift(&lp.objective, T::zero());
    let mut x = optimize(&rows, &mut basis, &obj)?;
    if lexicographic {
        let z = dot(&obj, &x);
        rows.push((
            obj.iter().map(T::neg).collect(),
            z.neg().add(&T::tie_slack()),
        ));
        for j in 0..n {
            x = optimize(&rows, &mut basis, &unit(m, j, T::one().neg()))?;
            rows.push((unit(m, j, T::one()), x[j].add(&T::tie_slack())));
        }
    }
    x.truncate(n);
    Ok(LpOutcome::Optimal(x))
}
