use crate::sketch::SketchBackend;
use crate::{Error, Result};

/// Failure probability of the μ-net draw.
const NET_FAILURE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub eps: f64,
    /// Weight-base exponent; `None` means `⌈ln N⌉`.
    pub s: Option<f64>,
    pub seed: u64,
    pub backend: SketchBackend,
    /// Accuracy and failure probability of the sampling-pass sketches.
    pub zeta: f64,
    pub delta: f64,
    pub c_iter: usize,
    /// Replaces the μ-net sample size; used to exercise multi-iteration runs.
    pub sample_size_override: Option<usize>,
    /// Threads a pass may be split over.
    pub shards: usize,
}

impl SolverParams {
    pub fn new(eps: f64, seed: u64) -> Self {
        SolverParams {
            eps,
            s: None,
            seed,
            backend: SketchBackend::ExactOracle,
            zeta: 0.25,
            delta: 0.01,
            c_iter: 20,
            sample_size_override: None,
            shards: 1,
        }
    }

    pub fn with_backend(mut self, backend: SketchBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn with_sample_size(mut self, m: usize) -> Self {
        self.sample_size_override = Some(m);
        self
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    /// Values derived for a universe of size `n` and a problem with
    /// dimensions `nu`, `lambda`.
    pub fn derive(&self, n: u128, nu: usize, lambda: usize) -> Result<Derived> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Usage(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if n == 0 {
            return Err(Error::Usage("universe must be nonempty".into()));
        }
        if nu == 0 || lambda == 0 {
            return Err(Error::Usage("nu and lambda must be positive".into()));
        }
        if self.c_iter == 0 {
            return Err(Error::Usage("iteration constant must be positive".into()));
        }
        let ln_n = (n as f64).ln();
        let s_max = ln_n.ceil().max(1.0);
        let s = self.s.unwrap_or(s_max);
        if !(s >= 1.0 && s <= s_max) {
            return Err(Error::Usage(format!("s must lie in [1, {s_max}], got {s}")));
        }
        let class_step = ln_n / s;
        let mu = 1.0 / (10.0 * nu as f64 * class_step.exp());
        let a = 8.0 * lambda as f64 / mu;
        let m_formula = (a * a.ln()).max((4.0 / mu) * (2.0 / NET_FAILURE).ln());
        let m = match self.sample_size_override {
            Some(0) => return Err(Error::Usage("sample size must be positive".into())),
            Some(m) => m,
            None => m_formula.ceil() as usize,
        };
        Ok(Derived {
            universe: n,
            s,
            class_step,
            mu,
            m,
            max_iterations: self.c_iter * nu * s.ceil() as usize,
        })
    }
}

/// Parameters computed from [`SolverParams`] and the universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub universe: u128,
    pub s: f64,
    /// `ln N / s`: log of the per-violation weight multiplier.
    pub class_step: f64,
    pub mu: f64,
    pub m: usize,
    pub max_iterations: usize,
}

/// Mixes a master seed with a tag path into an independent 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut z = master ^ 0x6c70_7479_7065_0001;
    for &p in path {
        z = splitmix(z ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_and_m_by_formula() {
        let p = SolverParams::new(0.1, 0);
        let n: u128 = 1_000_000;
        let d = p.derive(n, 3, 3).unwrap();
        assert_eq!(d.s, 14.0);
        let mu = 1.0 / (30.0 * (1e6f64.ln() / 14.0).exp());
        assert!((d.mu - mu).abs() < 1e-15);
        let a = 24.0 / mu;
        assert_eq!(d.m, (a * a.ln()).max(4.0 / mu * 8f64.ln()).ceil() as usize);
        assert_eq!(d.max_iterations, 20 * 3 * 14);
    }

    #[test]
    fn s_range_enforced() {
        let p = SolverParams::new(0.1, 0).with_s(0.5);
        assert!(p.derive(100, 2, 2).is_err());
        let p = SolverParams::new(0.1, 0).with_s(6.0);
        assert!(p.derive(100, 2, 2).is_err());
        let p = SolverParams::new(0.1, 0).with_s(5.0);
        assert!(p.derive(100, 2, 2).is_ok());
    }

    #[test]
    fn singleton_universe() {
        let d = SolverParams::new(0.1, 0).derive(1, 3, 3).unwrap();
        assert_eq!(d.s, 1.0);
        assert_eq!(d.class_step, 0.0);
    }

    #[test]
    fn seeds_differ_by_path() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(7, &[3]), derive_seed(7, &[3]));
    }
}
