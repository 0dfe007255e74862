use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp, LinearProgram, LpOutcome};
use crate::solver::{Anchor, LpTypeProblem, Solution, Universe};
use crate::{Error, Result};

/// Guard of the constraint test.
pub const SDP_GUARD: f64 = 1e-8;
const INGEST_TOL: f64 = 1e-9;
const CUT_CAP: usize = 2000;
/// Box on the saddle margin σ.
const SIGMA_BOUND: f64 = 2.0;

/// `⟨A, X⟩ ≤ b` with `A` a row-major symmetric `d × d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpConstraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl SdpConstraint {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        SdpConstraint { a, b }
    }

    pub fn inner(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(p, q)| p * q).sum()
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Lexicographic rank of a sorted `k`-subset of `0..n`.
fn rank_subset(set: &[usize], n: usize) -> u128 {
    let k = set.len();
    let mut rank = 0;
    let mut prev: isize = -1;
    for (i, &c) in set.iter().enumerate() {
        for v in (prev + 1) as usize..c {
            rank += binom(n - 1 - v, k - 1 - i);
        }
        prev = c as isize;
    }
    rank
}

fn unrank_subset(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut v = 0;
    for i in 0..k {
        loop {
            let c = binom(n - 1 - v, k - 1 - i);
            if rank < c {
                break;
            }
            rank -= c;
            v += 1;
        }
        out.push(v);
        v += 1;
    }
    out
}

/// Sparse net: a support pattern of `S` positions, entries on the grid
/// `ε/min(d,S)·ℤ`, and `b` on `ε·ℤ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseNet {
    pub d: usize,
    pub sparsity: usize,
    pub entry_step: f64,
    pub b_step: f64,
    entry_half: i64,
    b_half: i64,
    size: u128,
}

impl SparseNet {
    pub fn new(d: usize, sparsity: usize, eps: f64) -> Result<Self> {
        let s = sparsity.min(d * d);
        if s == 0 {
            return Err(Error::Usage("sparsity must be at least 1".into()));
        }
        let entry_step = eps / d.min(s) as f64;
        let entry_half = (1.0 / entry_step).ceil() as i64;
        let b_half = (1.0 / eps).ceil() as i64;
        let values = (2 * entry_half + 1) as u128;
        let mut size = binom(d * d, s);
        for _ in 0..s {
            size = size.checked_mul(values).ok_or(Error::Overflow)?;
        }
        size = size
            .checked_mul((2 * b_half + 1) as u128)
            .ok_or(Error::Overflow)?;
        Ok(SparseNet {
            d,
            sparsity: s,
            entry_step,
            b_step: eps,
            entry_half,
            b_half,
            size,
        })
    }

    /// Lexicographically first pattern covering the nonzeros of `a`.
    pub fn pattern(&self, a: &[f64]) -> Result<Vec<usize>> {
        let mut pos: Vec<usize> = (0..a.len()).filter(|&i| a[i] != 0.0).collect();
        if pos.len() > self.sparsity {
            return Err(Error::InputBounds(format!(
                "{} nonzeros exceed sparsity {}",
                pos.len(),
                self.sparsity
            )));
        }
        let mut fill = 0;
        while pos.len() < self.sparsity {
            if !pos.contains(&fill) {
                pos.push(fill);
            }
            fill += 1;
        }
        pos.sort_unstable();
        Ok(pos)
    }

    fn grid(x: f64, step: f64, half: i64) -> i64 {
        // nearest multiple, ties toward −∞
        ((x / step - 0.5).ceil() as i64).clamp(-half, half)
    }
}

impl Universe for SparseNet {
    type Item = SdpConstraint;

    fn size(&self) -> u128 {
        self.size
    }

    fn snap(&self, item: &SdpConstraint) -> Result<u128> {
        let pattern = self.pattern(&item.a)?;
        let values = (2 * self.entry_half + 1) as u128;
        let mut idx = rank_subset(&pattern, self.d * self.d);
        for &p in &pattern {
            let k = Self::grid(item.a[p], self.entry_step, self.entry_half);
            idx = idx * values + (k + self.entry_half) as u128;
        }
        let kb = Self::grid(item.b, self.b_step, self.b_half);
        Ok(idx * (2 * self.b_half + 1) as u128 + (kb + self.b_half) as u128)
    }

    fn representative(&self, index: u128) -> SdpConstraint {
        let values = (2 * self.entry_half + 1) as u128;
        let bv = (2 * self.b_half + 1) as u128;
        let b = ((index % bv) as i64 - self.b_half) as f64 * self.b_step;
        let mut rest = index / bv;
        let mut ks = vec![0i64; self.sparsity];
        for k in ks.iter_mut().rev() {
            *k = (rest % values) as i64 - self.entry_half;
            rest /= values;
        }
        let pattern = unrank_subset(rest, self.d * self.d, self.sparsity);
        let mut a = vec![0.0; self.d * self.d];
        for (&p, &k) in pattern.iter().zip(&ks) {
            a[p] = k as f64 * self.entry_step;
        }
        SdpConstraint::new(a, b)
    }
}

/// `max ⟨C, X⟩` over unit-trace PSD `X` with `⟨A_i, X⟩ ≤ b_i`; in saddle form
/// `max σ` with `⟨A_i, X⟩ ≥ b_i + σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSdpProblem {
    pub d: usize,
    pub c: Vec<f64>,
    pub sparsity: usize,
    pub frobenius: f64,
    pub eps: f64,
    pub saddle: bool,
}

impl BoundedSdpProblem {
    pub fn new(d: usize, c: Vec<f64>, sparsity: usize, frobenius: f64, eps: f64) -> Result<Self> {
        if d == 0 || c.len() != d * d {
            return Err(Error::Usage("objective must be a d × d matrix".into()));
        }
        if frob(&c) > 1.0 + INGEST_TOL {
            return Err(Error::InputBounds(
                "objective Frobenius norm exceeds 1".into(),
            ));
        }
        if !is_symmetric(&c, d) {
            return Err(Error::InputBounds("objective must be symmetric".into()));
        }
        Ok(BoundedSdpProblem {
            d,
            c,
            sparsity,
            frobenius,
            eps,
            saddle: false,
        })
    }

    fn vars(&self) -> usize {
        self.d * self.d + usize::from(self.saddle)
    }

    fn base_rows(&self) -> Vec<(Vec<f64>, f64)> {
        let d = self.d;
        let n = self.vars();
        let mut rows = Vec::new();
        for j in 0..d {
            for k in (j + 1)..d {
                let mut r = vec![0.0; n];
                r[j * d + k] = 1.0;
                r[k * d + j] = -1.0;
                rows.push((r.clone(), 0.0));
                rows.push((r.iter().map(|v| -v).collect(), 0.0));
            }
        }
        let mut tr = vec![0.0; n];
        for j in 0..d {
            tr[j * d + j] = 1.0;
        }
        rows.push((tr.clone(), 1.0));
        rows.push((tr.iter().map(|v| -v).collect(), -1.0));
        for j in 0..d {
            let mut r = vec![0.0; n];
            r[j * d + j] = -1.0;
            rows.push((r, 0.0));
        }
        rows
    }

    fn item_row(&self, item: &SdpConstraint) -> (Vec<f64>, f64) {
        if self.saddle {
            let mut r: Vec<f64> = item.a.iter().map(|v| -v).collect();
            r.push(1.0);
            (r, -item.b)
        } else {
            (item.a.clone(), item.b)
        }
    }

    /// Solves the LP relaxation, adding snapped eigenvector cuts until the
    /// separation oracle finds none.
    pub fn optimum(&self, items: &[SdpConstraint]) -> Result<Option<(Vec<f64>, Option<f64>)>> {
        let d = self.d;
        let n = self.vars();
        let mut rows = self.base_rows();
        rows.extend(items.iter().map(|it| self.item_row(it)));
        let mut objective = vec![0.0; n];
        if self.saddle {
            objective[n - 1] = 1.0;
        } else {
            objective[..d * d].copy_from_slice(&self.c);
        }
        let mut bounds = vec![1.0; n];
        if self.saddle {
            bounds[n - 1] = SIGMA_BOUND;
        }
        for _ in 0..CUT_CAP {
            let lp = LinearProgram {
                n,
                rows: rows.clone(),
                objective: objective.clone(),
                bounds: bounds.clone(),
            };
            let x = match solve_lp(&lp, false)? {
                LpOutcome::Infeasible => return Ok(None),
                LpOutcome::Optimal(x) => x,
            };
            let mat = symmetrize(&x[..d * d], d);
            match psd_violator(&mat, d, self.eps) {
                Some(z) => {
                    let mut r = vec![0.0; n];
                    for j in 0..d {
                        for k in 0..d {
                            r[j * d + k] = -z[j] * z[k];
                        }
                    }
                    rows.push((r, 0.0));
                }
                None => {
                    let margin = self.saddle.then(|| x[n - 1]);
                    return Ok(Some((mat, margin)));
                }
            }
        }
        Err(Error::Internal("PSD cutting planes did not settle".into()))
    }
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn is_symmetric(a: &[f64], d: usize) -> bool {
    (0..d).all(|j| (0..d).all(|k| (a[j * d + k] - a[k * d + j]).abs() <= 1e-12))
}

fn symmetrize(x: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for j in 0..d {
        for k in 0..d {
            out[j * d + k] = 0.5 * (x[j * d + k] + x[k * d + j]);
        }
    }
    out
}

/// Minimum eigenpair of a symmetric row-major matrix.
pub fn min_eigen(x: &[f64], d: usize) -> (f64, Vec<f64>) {
    let m = DMatrix::from_row_slice(d, d, x);
    let eig = SymmetricEigen::new(m);
    let (i, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    (val, eig.eigenvectors.column(i).iter().copied().collect())
}

pub fn spectral_norm(x: &[f64], d: usize) -> f64 {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, x));
    eig.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// A lattice vector `z` (step `ε/(d√d)`) with `zᵀXz < 0`, found by snapping
/// the minimum eigenvector; `None` when `X` has no negative eigenvalue or the
/// snapped vector does not separate.
pub fn psd_violator(x: &[f64], d: usize, eps: f64) -> Option<Vec<f64>> {
    let (val, v) = min_eigen(x, d);
    if val >= 0.0 {
        return None;
    }
    let step = eps / (d as f64 * (d as f64).sqrt());
    let z: Vec<f64> = v.iter().map(|c| ((c / step - 0.5).ceil()) * step).collect();
    let mut q = 0.0;
    for j in 0..d {
        for k in 0..d {
            q += z[j] * x[j * d + k] * z[k];
        }
    }
    (q < -1e-12).then_some(z)
}

/// Builds the saddle form: `max σ` with `⟨A_i, X⟩ ≥ b_i + σ`.
pub fn saddle_to_sdp(
    d: usize,
    sparsity: usize,
    frobenius: f64,
    eps: f64,
) -> Result<BoundedSdpProblem> {
    let mut p = BoundedSdpProblem::new(d, vec![0.0; d * d], sparsity, frobenius, eps)?;
    p.saddle = true;
    Ok(p)
}

impl LpTypeProblem for BoundedSdpProblem {
    type Item = SdpConstraint;
    type Net = SparseNet;

    fn name(&self) -> &'static str {
        if self.saddle {
            "saddle"
        } else {
            "sdp"
        }
    }

    fn nu(&self) -> usize {
        self.d * self.d
    }

    fn lambda(&self) -> usize {
        self.d * self.d + 1
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn solve_basis(&self, items: &[SdpConstraint]) -> Result<Solution> {
        Ok(match self.optimum(items)? {
            Some((entries, margin)) => Solution::SdpMatrix {
                dim: self.d,
                entries,
                margin,
            },
            None => Solution::Infeasible,
        })
    }

    fn violates(&self, sol: &Solution, item: &SdpConstraint) -> bool {
        match sol {
            Solution::SdpMatrix {
                entries, margin, ..
            } => {
                let v = item.inner(entries);
                match (self.saddle, margin) {
                    (true, Some(s)) => v < item.b + s - SDP_GUARD,
                    _ => v > item.b + SDP_GUARD,
                }
            }
            _ => false,
        }
    }

    fn correct_solution(&self, sol: &Solution, eps: f64) -> Solution {
        match sol {
            Solution::SdpMatrix {
                dim,
                entries,
                margin,
            } => {
                let d = *dim;
                let shift = 3.0 * eps / d as f64;
                let scale = 1.0 + 3.0 * eps;
                let mut out = entries.clone();
                for j in 0..d {
                    out[j * d + j] += shift;
                }
                for v in out.iter_mut() {
                    *v /= scale;
                }
                Solution::SdpMatrix {
                    dim: d,
                    entries: out,
                    margin: *margin,
                }
            }
            other => other.clone(),
        }
    }

    fn solution_words(&self) -> usize {
        1
    }

    fn validate(&self, item: &SdpConstraint) -> Result<()> {
        let d = self.d;
        if item.a.len() != d * d {
            return Err(Error::InputBounds(format!(
                "expected {} matrix entries, got {}",
                d * d,
                item.a.len()
            )));
        }
        if !is_symmetric(&item.a, d) {
            return Err(Error::InputBounds(
                "constraint matrix must be symmetric".into(),
            ));
        }
        let nnz = item.a.iter().filter(|v| **v != 0.0).count();
        if nnz > self.sparsity {
            return Err(Error::InputBounds(format!(
                "{nnz} nonzeros exceed sparsity {}",
                self.sparsity
            )));
        }
        if spectral_norm(&item.a, d) > 1.0 + INGEST_TOL {
            return Err(Error::InputBounds("spectral norm exceeds 1".into()));
        }
        if frob(&item.a) > self.frobenius + INGEST_TOL {
            return Err(Error::InputBounds(
                "Frobenius norm exceeds the declared bound".into(),
            ));
        }
        if item.b.abs() > 1.0 {
            return Err(Error::InputBounds("|b| must be at most 1".into()));
        }
        Ok(())
    }

    fn build_net(&self, _anchor: Option<&Anchor>) -> Result<SparseNet> {
        SparseNet::new(self.d, self.sparsity, self.eps)
    }
}
