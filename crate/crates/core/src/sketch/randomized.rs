use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hash::{add_mod, mul_mod, signed_mod, LinearHash, PowerFingerprint};

/// Largest usable level; the hash range is 61 bits.
const LEVEL_CAP: usize = 58;

/// Occupancy fraction above which a level is considered saturated.
const SATURATION: f64 = 0.7;

pub(crate) fn max_level_for(universe: u128) -> usize {
    let bits = 128 - (universe.max(1) - 1).leading_zeros() as usize;
    bits.min(LEVEL_CAP)
}

/// Level-subsampled linear counting: each repetition hashes an index into a
/// level and a bucket and keeps fingerprint sums per (level, bucket).
#[derive(Debug, Clone)]
pub struct RandomizedEstimator {
    buckets: usize,
    max_level: usize,
    reps: Vec<EstimatorRep>,
}

#[derive(Debug, Clone)]
struct EstimatorRep {
    level_hash: LinearHash,
    bucket_hash: LinearHash,
    fp_hash: LinearHash,
    levels: BTreeMap<usize, Vec<u64>>,
}

impl RandomizedEstimator {
    pub fn new(universe: u128, zeta: f64, delta: f64, seed: u64) -> Self {
        let buckets = (16.0 / (zeta * zeta)).ceil() as usize;
        let mut reps = (1.0 / delta).ln().ceil().max(1.0) as usize;
        if reps % 2 == 0 {
            reps += 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4553_5449_4d41_5445);
        let reps = (0..reps)
            .map(|_| EstimatorRep {
                level_hash: LinearHash::draw(&mut rng),
                bucket_hash: LinearHash::draw(&mut rng),
                fp_hash: LinearHash::draw(&mut rng),
                levels: BTreeMap::new(),
            })
            .collect();
        RandomizedEstimator {
            buckets,
            max_level: max_level_for(universe),
            reps,
        }
    }

    pub fn update(&mut self, index: u128, delta: i64) {
        let c = signed_mod(delta);
        let buckets = self.buckets;
        for rep in &mut self.reps {
            let lvl = rep.level_hash.level(index, self.max_level);
            let b = rep.bucket_hash.bucket(index, buckets);
            let fp = mul_mod(c, rep.fp_hash.fingerprint(index));
            let cells = rep.levels.entry(lvl).or_insert_with(|| vec![0; buckets]);
            cells[b] = add_mod(cells[b], fp);
        }
    }

    pub fn absorb(&mut self, other: &RandomizedEstimator) {
        for (rep, orep) in self.reps.iter_mut().zip(&other.reps) {
            for (&lvl, ocells) in &orep.levels {
                let cells = rep
                    .levels
                    .entry(lvl)
                    .or_insert_with(|| vec![0; ocells.len()]);
                for (c, &o) in cells.iter_mut().zip(ocells) {
                    *c = add_mod(*c, o);
                }
            }
        }
    }

    pub fn estimate(&self) -> u64 {
        let mut per_rep: Vec<f64> = self
            .reps
            .iter()
            .map(|r| r.estimate(self.buckets, self.max_level))
            .collect();
        per_rep.sort_by(|a, b| a.total_cmp(b));
        per_rep[per_rep.len() / 2].round().max(0.0) as u64
    }

    /// Number of (repetition, level) cell blocks currently allocated.
    pub fn allocated_blocks(&self) -> usize {
        self.reps.iter().map(|r| r.levels.len()).sum()
    }

    pub fn cells_per_block(&self) -> usize {
        self.buckets
    }
}

impl EstimatorRep {
    fn estimate(&self, buckets: usize, max_level: usize) -> f64 {
        let mut acc = vec![0u64; buckets];
        let mut occupancy = vec![0usize; max_level + 1];
        let mut occ = 0usize;
        for lvl in (0..=max_level).rev() {
            if let Some(cells) = self.levels.get(&lvl) {
                for (a, &c) in acc.iter_mut().zip(cells) {
                    *a = add_mod(*a, c);
                }
                occ = acc.iter().filter(|&&a| a != 0).count();
            }
            occupancy[lvl] = occ;
        }
        let k = buckets as f64;
        let limit = (SATURATION * k).floor() as usize;
        let (lvl, occ) = occupancy
            .iter()
            .enumerate()
            .find(|(_, &o)| o <= limit)
            .map(|(l, &o)| (l, o))
            .unwrap_or((max_level, occupancy[max_level].min(buckets - 1)));
        let load = -k * (1.0 - occ as f64 / k).ln();
        load * (lvl as f64).exp2()
    }
}

impl PartialEq for RandomizedEstimator {
    fn eq(&self, other: &Self) -> bool {
        self.buckets == other.buckets
            && self.max_level == other.max_level
            && self.reps.len() == other.reps.len()
            && self.reps.iter().zip(&other.reps).all(|(a, b)| {
                a.level_hash == b.level_hash
                    && a.bucket_hash == b.bucket_hash
                    && a.fp_hash == b.fp_hash
                    && blocks_equal(&a.levels, &b.levels, |c| *c == 0)
            })
    }
}

fn blocks_equal<T: PartialEq>(
    a: &BTreeMap<usize, Vec<T>>,
    b: &BTreeMap<usize, Vec<T>>,
    is_zero: impl Fn(&T) -> bool,
) -> bool {
    let keys: std::collections::BTreeSet<usize> = a.keys().chain(b.keys()).copied().collect();
    keys.into_iter().all(|k| match (a.get(&k), b.get(&k)) {
        (Some(x), Some(y)) => x == y,
        (Some(x), None) | (None, Some(x)) => x.iter().all(&is_zero),
        (None, None) => true,
    })
}

const ROWS: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Cell {
    count: i64,
    lo: i128,
    hi: i128,
    fp: u64,
}

impl Cell {
    fn is_zero(&self) -> bool {
        self.count == 0 && self.lo == 0 && self.hi == 0 && self.fp == 0
    }

    fn add(&mut self, index: u128, delta: i64, fp: u64) {
        let c = delta as i128;
        self.count += delta;
        self.lo += c * (index as u64) as i128;
        self.hi += c * ((index >> 64) as u64) as i128;
        self.fp = add_mod(self.fp, mul_mod(signed_mod(delta), fp));
    }

    fn absorb(&mut self, o: &Cell) {
        self.count += o.count;
        self.lo += o.lo;
        self.hi += o.hi;
        self.fp = add_mod(self.fp, o.fp);
    }
}

/// Level-subsampled sparse recovery: each level keeps an invertible
/// three-row counting table that decodes by peeling once it holds at most a
/// few dozen distinct indices.
#[derive(Debug, Clone)]
pub struct RandomizedSampler {
    width: usize,
    max_level: usize,
    level_hash: LinearHash,
    row_hash: [LinearHash; ROWS],
    fp_hash: PowerFingerprint,
    levels: BTreeMap<usize, Vec<Cell>>,
}

impl RandomizedSampler {
    pub fn new(universe: u128, zeta: f64, seed: u64) -> Self {
        // target recoverable support grows as the accuracy demand tightens
        let capacity = ((4.0 / zeta).ceil() as usize).clamp(16, 256);
        let width = 2 * capacity;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5341_4d50_4c45_5253);
        let level_hash = LinearHash::draw(&mut rng);
        let row_hash = [
            LinearHash::draw(&mut rng),
            LinearHash::draw(&mut rng),
            LinearHash::draw(&mut rng),
        ];
        let fp_hash = PowerFingerprint::draw(&mut rng);
        RandomizedSampler {
            width,
            max_level: max_level_for(universe),
            level_hash,
            row_hash,
            fp_hash,
            levels: BTreeMap::new(),
        }
    }

    pub fn update(&mut self, index: u128, delta: i64) {
        let lvl = self.level_hash.level(index, self.max_level);
        let fp = self.fp_hash.eval(index);
        let width = self.width;
        let cells = self
            .levels
            .entry(lvl)
            .or_insert_with(|| vec![Cell::default(); ROWS * width]);
        for (r, h) in self.row_hash.iter().enumerate() {
            let b = r * width + h.bucket(index, width);
            cells[b].add(index, delta, fp);
        }
    }

    pub fn absorb(&mut self, other: &RandomizedSampler) {
        for (&lvl, ocells) in &other.levels {
            let cells = self
                .levels
                .entry(lvl)
                .or_insert_with(|| vec![Cell::default(); ocells.len()]);
            for (c, o) in cells.iter_mut().zip(ocells) {
                c.absorb(o);
            }
        }
    }

    /// Decodes the deepest-to-shallowest suffix tables and returns the
    /// support recovered at the shallowest level that still decodes fully.
    pub fn recover(&self) -> Vec<u128> {
        let mut acc = vec![Cell::default(); ROWS * self.width];
        let mut best: Option<Vec<u128>> = None;
        for lvl in (0..=self.max_level).rev() {
            let Some(cells) = self.levels.get(&lvl) else {
                continue;
            };
            for (a, c) in acc.iter_mut().zip(cells) {
                a.absorb(c);
            }
            match self.peel(&acc) {
                Some(found) => {
                    if !found.is_empty() {
                        best = Some(found);
                    }
                }
                None => {
                    if best.is_some() {
                        break;
                    }
                }
            }
        }
        best.unwrap_or_default()
    }

    fn pure(&self, row: usize, bucket: usize, cell: &Cell) -> Option<u128> {
        if cell.count == 0 {
            return None;
        }
        let c = cell.count as i128;
        if cell.lo % c != 0 || cell.hi % c != 0 {
            return None;
        }
        let lo = cell.lo / c;
        let hi = cell.hi / c;
        if !(0..=u64::MAX as i128).contains(&lo) || !(0..=u64::MAX as i128).contains(&hi) {
            return None;
        }
        let index = ((hi as u128) << 64) | lo as u128;
        if self.row_hash[row].bucket(index, self.width) != bucket {
            return None;
        }
        let expect = mul_mod(signed_mod(cell.count), self.fp_hash.eval(index));
        (expect == cell.fp).then_some(index)
    }

    fn peel(&self, table: &[Cell]) -> Option<Vec<u128>> {
        let mut t = table.to_vec();
        let mut found = Vec::new();
        let mut progress = true;
        let limit = t.len();
        while progress {
            progress = false;
            if found.len() > limit {
                return None;
            }
            for pos in 0..t.len() {
                let (row, bucket) = (pos / self.width, pos % self.width);
                if let Some(index) = self.pure(row, bucket, &t[pos]) {
                    let count = t[pos].count;
                    let fp = self.fp_hash.eval(index);
                    for (r, h) in self.row_hash.iter().enumerate() {
                        let b = r * self.width + h.bucket(index, self.width);
                        t[b].add(index, -count, fp);
                    }
                    found.push(index);
                    progress = true;
                }
            }
        }
        if t.iter().all(Cell::is_zero) {
            found.sort_unstable();
            Some(found)
        } else {
            None
        }
    }

    pub fn allocated_blocks(&self) -> usize {
        self.levels.len()
    }

    pub fn cells_per_block(&self) -> usize {
        ROWS * self.width
    }
}

impl PartialEq for RandomizedSampler {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.max_level == other.max_level
            && self.level_hash == other.level_hash
            && self.row_hash == other.row_hash
            && self.fp_hash == other.fp_hash
            && blocks_equal(&self.levels, &other.levels, Cell::is_zero)
    }
}
