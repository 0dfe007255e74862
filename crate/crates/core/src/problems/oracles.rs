//! Brute-force reference optima for small instances. These share no solver
//! code with the plugins so they can serve as test oracles.

use super::lp::Constraint;
use super::sdp::SdpConstraint;
use super::svm::Labeled;
use crate::{Error, Result};

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sphere_through(pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let p0 = pts[0];
    let k = pts.len() - 1;
    let d = p0.len();
    if k == 0 {
        return Some((p0.to_vec(), 0.0));
    }
    let v: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let g: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let rhs: Vec<f64> = (0..k).map(|i| 0.5 * g[i][i]).collect();
    let lam = gauss(g, rhs)?;
    let c: Vec<f64> = (0..d)
        .map(|r| p0[r] + (0..k).map(|i| lam[i] * v[i][r]).sum::<f64>())
        .collect();
    let r = dist(&c, p0);
    Some((c, r))
}

/// Minimum enclosing ball by enumerating every defining subset of size
/// at most `d+1`. Returns the center, radius, and defining subset.
pub fn brute_meb(points: &[Vec<f64>]) -> Result<(Vec<f64>, f64, Vec<usize>)> {
    let d = points.first().ok_or(Error::EmptyInput)?.len();
    let mut best: Option<(Vec<f64>, f64, Vec<usize>)> = None;
    for k in 1..=(d + 1).min(points.len()) {
        combinations(points.len(), k, |idx| {
            let sub: Vec<&[f64]> = idx.iter().map(|&i| points[i].as_slice()).collect();
            if let Some((c, r)) = sphere_through(&sub) {
                if best.as_ref().is_some_and(|b| r >= b.1) {
                    return;
                }
                let tol = 1e-9 * (1.0 + r);
                if points.iter().all(|p| dist(&c, p) <= r + tol) {
                    best = Some((c, r, idx.to_vec()));
                }
            }
        });
    }
    best.ok_or_else(|| Error::Internal("no enclosing sphere found".into()))
}

/// Exact minimum enclosing ball for larger inputs: grow a basis by the
/// farthest outside point and re-solve the basis by brute force.
pub fn exact_meb(points: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let mut basis: Vec<Vec<f64>> = vec![first.clone()];
    loop {
        let (c, r, _) = brute_meb(&basis)?;
        let far = points
            .iter()
            .map(|p| (dist(&c, p), p))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("nonempty");
        if far.0 <= r * (1.0 + 1e-12) + 1e-12 {
            return Ok((c, r));
        }
        basis.push(far.1.clone());
        let (_, _, support) = brute_meb(&basis)?;
        basis = support.iter().map(|&i| basis[i].clone()).collect();
    }
}

fn margin(u: &[f64], b: f64, p: &Labeled) -> f64 {
    p.y as f64 * (u.iter().zip(&p.x).map(|(a, x)| a * x).sum::<f64>() - b)
}

/// Hard-margin SVM optimum over all support subsets of size at most `d+1`;
/// `None` when the labels are not linearly separable.
pub fn exact_svm(points: &[Labeled]) -> Result<Option<(Vec<f64>, f64)>> {
    let d = points.first().ok_or(Error::EmptyInput)?.x.len();
    let feasible = |u: &[f64], b: f64| points.iter().all(|p| margin(u, b, p) >= 1.0 - 1e-9);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let y0 = points[0].y;
    if points.iter().all(|p| p.y == y0) {
        return Ok(Some((vec![0.0; d], -(y0 as f64))));
    }
    for k in 1..=(d + 1).min(points.len()) {
        combinations(points.len(), k, |idx| {
            let sv: Vec<&Labeled> = idx.iter().map(|&i| &points[i]).collect();
            // stationarity u = Σ α_i y_i x_i, Σ α_i y_i = 0, margins equal to 1
            let mut m = vec![vec![0.0; k + 1]; k + 1];
            let mut rhs = vec![0.0; k + 1];
            for i in 0..k {
                for j in 0..k {
                    let g: f64 = sv[i].x.iter().zip(&sv[j].x).map(|(a, b)| a * b).sum();
                    m[i][j] = (sv[i].y * sv[j].y) as f64 * g;
                }
                m[i][k] = -(sv[i].y as f64);
                m[k][i] = sv[i].y as f64;
                rhs[i] = 1.0;
            }
            let Some(sol) = gauss(m, rhs) else {
                return;
            };
            let mut u = vec![0.0; d];
            for (p, a) in sv.iter().zip(&sol[..k]) {
                for (uj, xj) in u.iter_mut().zip(&p.x) {
                    *uj += a * p.y as f64 * xj;
                }
            }
            let b = sol[k];
            let n2: f64 = u.iter().map(|v| v * v).sum();
            if best.as_ref().is_some_and(|bb| n2 >= bb.2) {
                return;
            }
            if feasible(&u, b) {
                best = Some((u, b, n2));
            }
        });
    }
    Ok(best.map(|(u, b, _)| (u, b)))
}

/// Bounded LP optimum `max cᵀx`, `|x_j| ≤ 1`, by enumerating every vertex.
/// Returns the optimal value and a maximizer, or `None` when infeasible.
pub fn exact_lp(rows: &[Constraint], c: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    let d = c.len();
    if d == 0 {
        return Err(Error::Usage("empty objective".into()));
    }
    let mut all: Vec<(Vec<f64>, f64)> = rows.iter().map(|r| (r.a.clone(), r.b)).collect();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        all.push((e.clone(), 1.0));
        e[j] = -1.0;
        all.push((e, 1.0));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    combinations(all.len(), d, |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| all[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| all[i].1).collect();
        let Some(x) = gauss(a, b) else {
            return;
        };
        let z: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        if best.as_ref().is_some_and(|bb| z <= bb.0) {
            return;
        }
        let ok = all
            .iter()
            .all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
        if ok {
            best = Some((z, x));
        }
    });
    Ok(best)
}

/// Grid over unit-trace PSD 2×2 matrices `[[a, t], [t, 1−a]]`.
fn psd2_grid(resolution: usize, mut f: impl FnMut(&[f64; 4])) {
    for i in 0..=resolution {
        let a = i as f64 / resolution as f64;
        let r = (a * (1.0 - a)).max(0.0).sqrt();
        for j in 0..=(2 * resolution) {
            let t = r * (j as f64 / resolution as f64 - 1.0);
            f(&[a, t, t, 1.0 - a]);
        }
    }
}

fn inner(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(p, q)| p * q).sum()
}

/// Best `⟨C, X⟩` over grid matrices satisfying every `⟨A_i, X⟩ ≤ b_i`.
pub fn exact_sdp_grid(
    constraints: &[SdpConstraint],
    c: &[f64],
    resolution: usize,
) -> Result<Option<f64>> {
    if c.len() != 4 {
        return Err(Error::Usage(
            "grid oracle supports 2×2 matrices only".into(),
        ));
    }
    let mut best: Option<f64> = None;
    psd2_grid(resolution, |x| {
        let z = inner(c, x);
        if best.is_some_and(|b| z <= b) {
            return;
        }
        if constraints.iter().all(|k| inner(&k.a, x) <= k.b) {
            best = Some(z);
        }
    });
    Ok(best)
}

/// Best saddle margin `min_i ⟨A_i, X⟩ − b_i` over grid matrices.
pub fn exact_saddle_grid(constraints: &[SdpConstraint], resolution: usize) -> Result<f64> {
    if constraints.iter().any(|k| k.a.len() != 4) {
        return Err(Error::Usage(
            "grid oracle supports 2×2 matrices only".into(),
        ));
    }
    let mut best = f64::NEG_INFINITY;
    psd2_grid(resolution, |x| {
        let m = constraints
            .iter()
            .map(|k| inner(&k.a, x) - k.b)
            .fold(f64::INFINITY, f64::min);
        best = best.max(m);
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_inputs_error() {
        assert_eq!(brute_meb(&[]).unwrap_err(), Error::EmptyInput);
        assert_eq!(exact_meb(&[]).unwrap_err(), Error::EmptyInput);
        assert_eq!(exact_svm(&[]).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn singleton_ball() {
        let (c, r) = exact_meb(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!((c, r), (vec![3.0, 4.0], 0.0));
    }

    #[test]
    fn lp_box_only() {
        let (z, x) = exact_lp(&[], &[1.0, 0.0]).unwrap().unwrap();
        assert!((z - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }
}
