use crate::sketch::{L0Sampler, SketchBackend, SketchConfig};
use crate::solver::{derive_seed, Accumulator, LpTypeProblem, PassSource, SolverParams};
use crate::{Error, Result};

const TAG_CENTER: u64 = 20;
const TAG_RADIUS: u64 = 21;

/// Bijection between integer points of `[−Δ, Δ]^d` and `0..(2Δ+1)^d`,
/// first axis most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordCodec {
    d: usize,
    bound: u64,
    radix: u128,
    size: u128,
}

impl CoordCodec {
    pub fn new(d: usize, bound: u64) -> Result<Self> {
        if d == 0 || bound == 0 {
            return Err(Error::Usage(
                "coordinate bound and dimension must be positive".into(),
            ));
        }
        let radix = 2 * bound as u128 + 1;
        let mut size: u128 = 1;
        for _ in 0..d {
            size = size.checked_mul(radix).ok_or(Error::Overflow)?;
        }
        Ok(CoordCodec {
            d,
            bound,
            radix,
            size,
        })
    }

    pub fn size(&self) -> u128 {
        self.size
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn encode(&self, p: &[f64]) -> Result<u128> {
        if p.len() != self.d {
            return Err(Error::InputBounds("inconsistent point dimension".into()));
        }
        let b = self.bound as f64;
        let mut idx: u128 = 0;
        for &x in p {
            if x.fract() != 0.0 || x.abs() > b {
                return Err(Error::Domain(format!(
                    "turnstile centering needs integer coordinates in [-{}, {}], got {x}",
                    self.bound, self.bound
                )));
            }
            idx = idx * self.radix + (x + b) as u128;
        }
        Ok(idx)
    }

    pub fn decode(&self, mut idx: u128) -> Vec<f64> {
        let mut p = vec![0.0; self.d];
        for slot in p.iter_mut().rev() {
            *slot = (idx % self.radix) as f64 - self.bound as f64;
            idx /= self.radix;
        }
        p
    }

    /// Largest distance between two points of the box.
    pub fn diameter(&self) -> f64 {
        2.0 * self.bound as f64 * (self.d as f64).sqrt()
    }
}

pub fn encode_point(codec: &CoordCodec, p: &[f64]) -> Result<u128> {
    codec.encode(p)
}

struct Live {
    sampler: L0Sampler,
    events: u64,
}

impl Accumulator for Live {
    fn merge_into(&mut self, other: Self) -> Result<()> {
        self.events += other.events;
        self.sampler.merge_from(&other.sampler)
    }
}

fn live_pass<P, S, K>(
    source: &mut S,
    problem: &P,
    codec: &CoordCodec,
    config: SketchConfig,
    keep: K,
) -> Result<Live>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
    K: Fn(&[f64]) -> bool + Sync,
{
    source.run_pass(
        || Live {
            sampler: L0Sampler::new(config),
            events: 0,
        },
        |acc, item, delta| {
            problem.validate(item)?;
            acc.events += 1;
            let p = problem
                .point_of(item)
                .ok_or_else(|| Error::Internal("centering needs point items".into()))?;
            let idx = codec.encode(p)?;
            if keep(p) {
                acc.sampler.update(idx, delta)?;
            }
            Ok(())
        },
    )
}

fn config(codec: &CoordCodec, params: &SolverParams, seed: u64) -> Result<SketchConfig> {
    SketchConfig::new(
        codec.size(),
        params.zeta,
        params.delta,
        seed,
        params.backend,
    )
}

/// One pass feeding every event into an ℓ0 sampler over the integer point
/// universe; returns a live point and the number of events seen.
pub fn find_center_turnstile<P, S>(
    source: &mut S,
    problem: &P,
    codec: &CoordCodec,
    params: &SolverParams,
) -> Result<(Vec<f64>, u64)>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let cfg = config(codec, params, derive_seed(params.seed, &[TAG_CENTER]))?;
    let mut live = live_pass(source, problem, codec, cfg, |_| true)?;
    if params.backend == SketchBackend::ExactOracle {
        if let Some(counts) = live.sampler.exact_counts() {
            let neg = counts.negative();
            if !neg.is_empty() {
                return Err(Error::StrictTurnstile(format!(
                    "{} points end with negative multiplicity, e.g. {:?}",
                    neg.len(),
                    codec.decode(neg[0])
                )));
            }
        }
    }
    let idx = live.sampler.sample().ok_or(Error::EmptyInput)?;
    Ok((codec.decode(idx), live.events))
}

/// Binary search over thresholds `2^j` for the largest one exceeded by the
/// distance of some live point; returns `2^(j+1)`, or 0 when every live
/// point equals `center`. One pass per probe.
pub fn approx_max_norm<P, S>(
    source: &mut S,
    problem: &P,
    center: &[f64],
    codec: &CoordCodec,
    params: &SolverParams,
) -> Result<f64>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let top = codec.diameter().log2().ceil() as i32;
    let (mut lo, mut hi) = (-1i32, top);
    let mut best: Option<i32> = None;
    while lo <= hi {
        let j = (lo + hi).div_euclid(2);
        let threshold = 2f64.powi(j);
        let cfg = config(
            codec,
            params,
            derive_seed(params.seed, &[TAG_RADIUS, (j + 1) as u64]),
        )?;
        let mut live = live_pass(source, problem, codec, cfg, |p| {
            let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() > threshold
        })?;
        if live.sampler.sample().is_some() {
            best = Some(j);
            lo = j + 1;
        } else {
            hi = j - 1;
        }
    }
    Ok(best.map_or(0.0, |j| 2f64.powi(j + 1)))
}
