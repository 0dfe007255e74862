use nalgebra::{DMatrix, DVector};

use crate::net::NetConfig;
use crate::solver::{Anchor, LpTypeProblem, Solution, Universe};
use crate::{Error, Result};

/// Relative guard of the containment test.
pub const MEB_GUARD: f64 = 1e-12;

/// Radial net over raw points. Points beyond the radius snap to the outer
/// level so that deleted far points still cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct PointNet(pub NetConfig);

impl Universe for PointNet {
    type Item = Vec<f64>;

    fn size(&self) -> u128 {
        self.0.net_size()
    }

    fn snap(&self, item: &Vec<f64>) -> Result<u128> {
        self.0.snap_flat_clamped(item)
    }

    fn representative(&self, index: u128) -> Vec<f64> {
        self.0.unsnap_flat(index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MebProblem {
    pub d: usize,
    pub eps: f64,
}

impl MebProblem {
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        Ok(MebProblem { d, eps })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Smallest ball with every point of `support` on its boundary, centered in
/// their affine hull.
pub(crate) fn circumball(support: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let p0 = support.first()?;
    let k = support.len() - 1;
    if k == 0 {
        return Some((p0.to_vec(), 0.0));
    }
    let d = p0.len();
    let v = DMatrix::from_fn(d, k, |r, c| support[c + 1][r] - p0[r]);
    let gram = v.transpose() * &v;
    let rhs = DVector::from_fn(k, |i, _| 0.5 * gram[(i, i)]);
    let lambda = gram.lu().solve(&rhs)?;
    let offset = &v * lambda;
    if offset.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let center: Vec<f64> = (0..d).map(|r| p0[r] + offset[r]).collect();
    let radius = support.iter().map(|p| dist(&center, p)).fold(0.0, f64::max);
    Some((center, radius))
}

struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    fn contains(&self, p: &[f64]) -> bool {
        dist(&self.center, p) <= self.radius * (1.0 + 1e-10) + 1e-12
    }
}

fn ball_of(support: &[Vec<f64>], d: usize) -> Option<Ball> {
    if support.is_empty() {
        return Some(Ball {
            center: vec![0.0; d],
            radius: -1.0,
        });
    }
    let refs: Vec<&[f64]> = support.iter().map(Vec::as_slice).collect();
    circumball(&refs).map(|(center, radius)| Ball { center, radius })
}

/// Move-to-front recursion over `pts[..end]` with the given boundary set.
fn mtf(pts: &mut Vec<Vec<f64>>, end: usize, support: &mut Vec<Vec<f64>>, d: usize) -> Ball {
    let mut ball = match ball_of(support, d) {
        Some(b) => b,
        None => {
            // affinely dependent boundary: the last point alone decides
            let last = support.last().cloned().unwrap_or_else(|| vec![0.0; d]);
            Ball {
                center: last,
                radius: 0.0,
            }
        }
    };
    if support.len() == d + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        if !ball.contains(&pts[i]) {
            support.push(pts[i].clone());
            ball = mtf(pts, i, support, d);
            support.pop();
            let p = pts.remove(i);
            pts.insert(0, p);
        }
        i += 1;
    }
    ball
}

/// Exact minimum enclosing ball; the radius is recomputed so that every input
/// point lies inside.
pub fn welzl(points: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let d = points.first()?.len();
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pts.dedup();
    let n = pts.len();
    let ball = mtf(&mut pts, n, &mut Vec::new(), d);
    let radius = points
        .iter()
        .map(|p| dist(&ball.center, p))
        .fold(0.0, f64::max);
    Some((ball.center, radius))
}

impl LpTypeProblem for MebProblem {
    type Item = Vec<f64>;
    type Net = PointNet;

    fn name(&self) -> &'static str {
        "meb"
    }

    fn nu(&self) -> usize {
        self.d + 1
    }

    fn lambda(&self) -> usize {
        self.d + 1
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn solve_basis(&self, items: &[Vec<f64>]) -> Result<Solution> {
        let (center, radius) = welzl(items).ok_or(Error::EmptyInput)?;
        Ok(Solution::Ball { center, radius })
    }

    fn violates(&self, sol: &Solution, item: &Vec<f64>) -> bool {
        match sol {
            Solution::Ball { center, radius } => dist(center, item) > radius * (1.0 + MEB_GUARD),
            _ => false,
        }
    }

    fn correct_solution(&self, sol: &Solution, eps: f64) -> Solution {
        match sol {
            Solution::Ball { center, radius } => Solution::Ball {
                center: center.clone(),
                radius: (1.0 + 4.0 * eps) * radius,
            },
            other => other.clone(),
        }
    }

    fn solution_words(&self) -> usize {
        2
    }

    fn needs_anchor(&self) -> bool {
        true
    }

    fn point_of<'a>(&self, item: &'a Vec<f64>) -> Option<&'a [f64]> {
        Some(item)
    }

    fn validate(&self, item: &Vec<f64>) -> Result<()> {
        if item.len() != self.d {
            return Err(Error::InputBounds(format!(
                "expected {} coordinates, got {}",
                self.d,
                item.len()
            )));
        }
        if item.iter().any(|x| !x.is_finite()) {
            return Err(Error::InputBounds("non-finite coordinate".into()));
        }
        Ok(())
    }

    fn build_net(&self, anchor: Option<&Anchor>) -> Result<PointNet> {
        let anchor = anchor.ok_or_else(|| Error::Usage("MEB needs a center and radius".into()))?;
        Ok(PointNet(NetConfig::radial(
            anchor.center.clone(),
            anchor.r_max,
            self.eps,
        )?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_and_pair() {
        assert_eq!(welzl(&[vec![1.0, 2.0]]).unwrap(), (vec![1.0, 2.0], 0.0));
        let (c, r) = welzl(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inputs_never_violate_own_ball() {
        let p = MebProblem::new(2, 0.1).unwrap();
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.7;
                vec![t.cos() * 10.0 + (i % 3) as f64, t.sin() * 7.0]
            })
            .collect();
        let sol = p.solve_basis(&pts).unwrap();
        assert!(pts.iter().all(|q| !p.violates(&sol, q)));
    }

    #[test]
    fn violation_and_correction() {
        let p = MebProblem::new(2, 0.1).unwrap();
        let ball = Solution::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(!p.violates(&ball, &vec![0.0, 0.0]));
        assert!(p.violates(&ball, &vec![2.0, 0.0]));
        assert_eq!(p.correct_solution(&ball, 0.0), ball);
        let Solution::Ball { radius, .. } = p.correct_solution(&ball, 0.1) else {
            panic!()
        };
        assert!((radius - 1.4).abs() < 1e-12);
    }
}
