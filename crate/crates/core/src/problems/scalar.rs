use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Field operations needed by the elimination and simplex routines.
pub trait Scalar: Clone + Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Sign, with values inside the tolerance band treated as zero.
    fn sign(&self) -> Ordering;
    /// Slack applied when turning an optimum into a constraint.
    fn tie_slack() -> Self;

    fn cmp_to(&self, o: &Self) -> Ordering {
        self.sub(o).sign()
    }
}

/// Tolerance band of the floating-point scalar.
pub const F64_TOL: f64 = 1e-10;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> Ordering {
        if *self > F64_TOL {
            Ordering::Greater
        } else if *self < -F64_TOL {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn tie_slack() -> Self {
        1e-11
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn sign(&self) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn tie_slack() -> Self {
        Zero::zero()
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

/// Solves the square system `m · x = rhs` by Gaussian elimination with
/// largest-magnitude pivoting; `None` when singular.
pub fn solve_square<T: Scalar>(m: &[Vec<T>], rhs: &[T]) -> Option<Vec<T>> {
    let n = rhs.len();
    let mut a: Vec<Vec<T>> = m
        .iter()
        .zip(rhs)
        .map(|(row, r)| {
            let mut row = row.clone();
            row.push(r.clone());
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| a[r][col].sign() != Ordering::Equal)
            .max_by(|&r, &s| {
                a[r][col]
                    .to_f64()
                    .abs()
                    .total_cmp(&a[s][col].to_f64().abs())
                    .then(s.cmp(&r))
            })?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col] == T::zero() {
                continue;
            }
            let f = a[r][col].div(&p);
            if f == T::zero() {
                continue;
            }
            for c in col..=n {
                let v = a[col][c].mul(&f);
                a[r][c] = a[r][c].sub(&v);
            }
        }
    }
    Some((0..n).map(|i| a[i][n].div(&a[i][i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_solve_is_exact() {
        let q = |x: f64| <BigRational as Scalar>::from_f64(x);
        let m = vec![vec![q(2.0), q(1.0)], vec![q(1.0), q(3.0)]];
        let x = solve_square(&m, &[q(1.0), q(2.0)]).unwrap();
        assert_eq!(x[0], BigRational::new(1.into(), 5.into()));
        assert_eq!(x[1], BigRational::new(3.into(), 5.into()));
    }

    #[test]
    fn singular_detected() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_square(&m, &[1.0, 2.0]).is_none());
    }
}
