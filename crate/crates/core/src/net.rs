//! Metric ε-net: a cube lattice of directions, optionally combined with
//! geometric radial levels around a center. Each net point is identified by a
//! flat index in `0..N`, which is the coordinate space of the sketches.

use crate::{Error, Result};

/// Relative guard band at level boundaries.
pub const LEVEL_GUARD: f64 = 1.0 / (1u64 << 40) as f64;

/// Slack accepted on the unit-cube domain of non-radial nets.
const CUBE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NetIndex {
    Center,
    Cell { level: u32, cell: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    d: usize,
    eps: f64,
    center: Vec<f64>,
    r_max: f64,
    radial: bool,
    step: f64,
    per_axis: u32,
    levels: u32,
    size: u128,
}

impl NetConfig {
    /// Radial net around `center` covering distances up to `r_max`.
    pub fn radial(center: Vec<f64>, r_max: f64, eps: f64) -> Result<Self> {
        Self::build(center, r_max, eps, true)
    }

    /// Non-radial lattice over `[-1, 1]^d` with lattice spacing `eps/√d`.
    pub fn unit_cube(d: usize, eps: f64) -> Result<Self> {
        Self::build(vec![0.0; d], 1.0, eps, false)
    }

    fn build(center: Vec<f64>, r_max: f64, eps: f64, radial: bool) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Usage(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(r_max >= 0.0 && r_max.is_finite()) {
            return Err(Error::Usage(format!(
                "r_max must be finite and nonnegative, got {r_max}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("center must be finite".into()));
        }
        let sqrt_d = (d as f64).sqrt();
        let span = (2.0 * sqrt_d / eps).ceil();
        if span >= u32::MAX as f64 {
            return Err(Error::Overflow);
        }
        let per_axis = 1 + span as u32;
        let mut cfg = NetConfig {
            d,
            eps,
            center,
            r_max,
            radial,
            step: eps / sqrt_d,
            per_axis,
            levels: 1,
            size: 0,
        };
        if radial {
            cfg.levels = if r_max < 1.0 {
                1
            } else {
                (cfg.raw_level(r_max) + 1).max(1)
            };
        }
        cfg.size = if radial && r_max == 0.0 {
            1
        } else {
            cfg.cells_per_level()?
                .checked_mul(cfg.levels as u128)
                .and_then(|n| n.checked_add(1))
                .ok_or(Error::Overflow)?
        };
        Ok(cfg)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    /// Lattice spacing per axis, `eps/√d`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Lattice values per axis, `1 + ⌈2√d/eps⌉`.
    pub fn per_axis(&self) -> u32 {
        self.per_axis
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Universe size including the CENTER slot.
    pub fn net_size(&self) -> u128 {
        self.size
    }

    fn cells_per_level(&self) -> Result<u128> {
        let mut n: u128 = 1;
        for _ in 0..self.d {
            n = n
                .checked_mul(self.per_axis as u128)
                .ok_or(Error::Overflow)?;
        }
        Ok(n)
    }

    fn lattice_value(&self, i: u32) -> f64 {
        -1.0 + i as f64 * self.step
    }

    /// Level `l` with `(1+eps)^l ≤ norm ≤ (1+eps)^{l+1}`, clamped at 0.
    fn raw_level(&self, norm: f64) -> u32 {
        let base = 1.0 + self.eps;
        let x = norm.ln() / base.ln();
        let k = x.round();
        let mut l = if (base.powf(k) - norm).abs() <= LEVEL_GUARD * norm {
            k - 1.0
        } else {
            x.ceil() - 1.0
        };
        while base.powf(l + 1.0) < norm * (1.0 - LEVEL_GUARD) {
            l += 1.0;
        }
        while l >= 1.0 && base.powf(l) > norm * (1.0 + LEVEL_GUARD) {
            l -= 1.0;
        }
        l.max(0.0) as u32
    }

    /// Norm of the representative at `level`, `(1+eps)^{level+1}`.
    pub fn representative_norm(&self, level: u32) -> f64 {
        (1.0 + self.eps).powi(level as i32 + 1)
    }

    pub fn snap(&self, p: &[f64]) -> Result<NetIndex> {
        self.snap_with(p, false)
    }

    /// Like [`NetConfig::snap`], but radial points beyond the net radius go
    /// to the outermost level (the center on a center-only net).
    pub fn snap_clamped(&self, p: &[f64]) -> Result<NetIndex> {
        self.snap_with(p, true)
    }

    fn snap_with(&self, p: &[f64], clamp: bool) -> Result<NetIndex> {
        if p.len() != self.d {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.d,
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite coordinate".into()));
        }
        if self.radial {
            self.snap_radial(p, clamp)
        } else {
            self.snap_cube(p)
        }
    }

    fn snap_cube(&self, p: &[f64]) -> Result<NetIndex> {
        let top = self.per_axis - 1;
        let mut cell = Vec::with_capacity(self.d);
        for &x in p {
            if x.abs() > 1.0 + CUBE_SLACK {
                return Err(Error::Domain(format!("coordinate {x} outside [-1, 1]")));
            }
            let t = (x + 1.0) / self.step;
            // nearest lattice value, ties toward −∞
            let i = (t - 0.5).ceil().clamp(0.0, top as f64) as u32;
            cell.push(i);
        }
        Ok(NetIndex::Cell { level: 0, cell })
    }

    fn snap_radial(&self, p: &[f64], clamp: bool) -> Result<NetIndex> {
        let q: Vec<f64> = p.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(NetIndex::Center);
        }
        if self.size == 1 {
            if clamp {
                return Ok(NetIndex::Center);
            }
            return Err(Error::Domain(format!(
                "distance {norm} from center on a center-only net"
            )));
        }
        if norm < 1.0 {
            return Err(Error::Domain(format!(
                "distance {norm} from center is below 1; radial nets expect integer-grid input"
            )));
        }
        let mut level = self.raw_level(norm);
        if level >= self.levels && clamp {
            level = self.levels - 1;
        }
        if level >= self.levels {
            return Err(Error::Domain(format!(
                "distance {norm} exceeds the net radius {}",
                self.representative_norm(self.levels - 1)
            )));
        }
        let u: Vec<f64> = q.iter().map(|x| x / norm).collect();
        Ok(NetIndex::Cell {
            level,
            cell: self.nearest_direction(&u),
        })
    }

    /// Among the 2^d lattice corners around `u`, the one whose normalized
    /// direction is closest to `u`; ties go to the lexicographically smallest.
    fn nearest_direction(&self, u: &[f64]) -> Vec<u32> {
        let d = self.d;
        let top = self.per_axis - 2;
        let lo: Vec<u32> = u
            .iter()
            .map(|&x| ((x + 1.0) / self.step).floor().clamp(0.0, top as f64) as u32)
            .collect();
        let mut best: Option<(f64, Vec<u32>)> = None;
        let mut cell = vec![0u32; d];
        let mut v = vec![0.0; d];
        for mask in 0..(1usize << d) {
            for j in 0..d {
                // most significant bit drives the first axis so masks run lexicographically
                let bit = (mask >> (d - 1 - j)) & 1;
                cell[j] = lo[j] + bit as u32;
                v[j] = self.lattice_value(cell[j]);
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                continue;
            }
            let err: f64 = u
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b / n).powi(2))
                .sum::<f64>();
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, cell.clone()));
            }
        }
        best.expect("some corner is nonzero").1
    }

    pub fn unsnap(&self, idx: &NetIndex) -> Vec<f64> {
        match idx {
            NetIndex::Center => self.center.clone(),
            NetIndex::Cell { level, cell } => {
                let v: Vec<f64> = cell.iter().map(|&i| self.lattice_value(i)).collect();
                if !self.radial {
                    return v;
                }
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = self.representative_norm(*level);
                self.center
                    .iter()
                    .zip(&v)
                    .map(|(c, x)| if n == 0.0 { *c } else { c + r * x / n })
                    .collect()
            }
        }
    }

    pub fn flat_index(&self, idx: &NetIndex) -> u128 {
        match idx {
            NetIndex::Center => 0,
            NetIndex::Cell { level, cell } => {
                let k = self.per_axis as u128;
                let mut flat = *level as u128;
                for &c in cell {
                    flat = flat * k + c as u128;
                }
                flat + 1
            }
        }
    }

    pub fn from_flat(&self, flat: u128) -> Result<NetIndex> {
        if flat >= self.size {
            return Err(Error::IndexOutOfRange {
                index: flat,
                universe: self.size,
            });
        }
        if flat == 0 {
            return Ok(NetIndex::Center);
        }
        let k = self.per_axis as u128;
        let mut rest = flat - 1;
        let mut cell = vec![0u32; self.d];
        for j in (0..self.d).rev() {
            cell[j] = (rest % k) as u32;
            rest /= k;
        }
        Ok(NetIndex::Cell {
            level: rest as u32,
            cell,
        })
    }

    pub fn snap_flat_clamped(&self, p: &[f64]) -> Result<u128> {
        Ok(self.flat_index(&self.snap_clamped(p)?))
    }

    pub fn snap_flat(&self, p: &[f64]) -> Result<u128> {
        Ok(self.flat_index(&self.snap(p)?))
    }

    /// Representative point of a flat index.
    pub fn unsnap_flat(&self, flat: u128) -> Vec<f64> {
        match self.from_flat(flat) {
            Ok(idx) => self.unsnap(&idx),
            Err(_) => self.center.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_by_formula() {
        assert_eq!(NetConfig::unit_cube(1, 1.0).unwrap().net_size(), 4);
        assert_eq!(NetConfig::unit_cube(2, 0.5).unwrap().net_size(), 50);
        for d in 1..=4usize {
            let k = 1 + (2.0 * (d as f64).sqrt()).ceil() as u128;
            let net = NetConfig::radial(vec![0.0; d], 8.0, 1.0).unwrap();
            assert_eq!(net.levels(), 3);
            assert_eq!(net.net_size(), 3 * k.pow(d as u32) + 1);
        }
    }

    #[test]
    fn degenerate_radius_is_center_only() {
        let net = NetConfig::radial(vec![1.0, 2.0], 0.0, 0.1).unwrap();
        assert_eq!(net.net_size(), 1);
        assert_eq!(net.snap(&[1.0, 2.0]).unwrap(), NetIndex::Center);
        assert!(net.snap(&[2.0, 2.0]).is_err());
    }

    #[test]
    fn exact_power_boundary() {
        let net = NetConfig::radial(vec![0.0], 2.25, 0.5).unwrap();
        let idx = net.snap(&[1.5]).unwrap();
        match &idx {
            NetIndex::Cell { level, .. } => assert_eq!(*level, 0),
            NetIndex::Center => panic!(),
        }
        assert_eq!(net.unsnap(&idx), vec![1.5]);
    }

    #[test]
    fn center_round_trip() {
        let net = NetConfig::radial(vec![3.0, -1.0], 10.0, 0.2).unwrap();
        let idx = net.snap(&[3.0, -1.0]).unwrap();
        assert_eq!(net.unsnap(&idx), vec![3.0, -1.0]);
        assert_eq!(net.flat_index(&idx), 0);
    }

    #[test]
    fn out_of_radius_is_domain_error() {
        let net = NetConfig::radial(vec![0.0, 0.0], 4.0, 0.5).unwrap();
        assert!(matches!(net.snap(&[100.0, 0.0]), Err(Error::Domain(_))));
        let cube = NetConfig::unit_cube(2, 0.5).unwrap();
        assert!(matches!(cube.snap(&[1.5, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn cube_ties_go_down() {
        let cube = NetConfig::unit_cube(1, 1.0).unwrap();
        // lattice {-1, 0, 1}; -0.5 is equidistant
        assert_eq!(
            cube.snap(&[-0.5]).unwrap(),
            NetIndex::Cell {
                level: 0,
                cell: vec![0]
            }
        );
    }

    #[test]
    fn flat_index_bijective() {
        let net = NetConfig::radial(vec![0.0, 0.0], 5.0, 0.5).unwrap();
        for f in 0..net.net_size() {
            let idx = net.from_flat(f).unwrap();
            assert_eq!(net.flat_index(&idx), f);
        }
        assert!(net.from_flat(net.net_size()).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(NetConfig::unit_cube(0, 0.5).is_err());
        assert!(NetConfig::unit_cube(2, 0.0).is_err());
        assert!(NetConfig::unit_cube(2, 1.5).is_err());
        assert!(NetConfig::radial(vec![0.0], -1.0, 0.5).is_err());
        assert_eq!(NetConfig::unit_cube(64, 0.01), Err(Error::Overflow));
    }
}
