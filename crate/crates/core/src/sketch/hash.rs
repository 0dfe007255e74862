use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Mersenne prime 2^61 − 1.
pub const P61: u64 = (1u64 << 61) - 1;

const LIMB_BITS: u32 = 43;
const LIMB_MASK: u128 = (1u128 << LIMB_BITS) - 1;

#[inline]
pub fn mod_p(x: u128) -> u64 {
    let p = P61 as u128;
    let mut r = (x & p) + (x >> 61);
    r = (r & p) + (r >> 61);
    if r >= p {
        r -= p;
    }
    r as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64) -> u64 {
    mod_p(a as u128 * b as u128)
}

#[inline]
pub fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P61 {
        s - P61
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P61 - b
    }
}

/// Reduces a signed count into the field.
#[inline]
pub fn signed_mod(c: i64) -> u64 {
    if c >= 0 {
        (c as u64) % P61
    } else {
        sub_mod(0, c.unsigned_abs() % P61)
    }
}

/// Pairwise-independent linear hash over GF(2^61 − 1) applied to the three
/// 43-bit limbs of a 128-bit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearHash {
    coeffs: [u64; 4],
}

impl LinearHash {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut coeffs = [0u64; 4];
        for c in coeffs.iter_mut() {
            *c = rng.gen_range(0..P61);
        }
        // a nonzero limb coefficient keeps distinct limbs distinct
        for c in coeffs.iter_mut().skip(1) {
            if *c == 0 {
                *c = 1;
            }
        }
        LinearHash { coeffs }
    }

    #[inline]
    pub fn hash(&self, x: u128) -> u64 {
        let l0 = (x & LIMB_MASK) as u64;
        let l1 = ((x >> LIMB_BITS) & LIMB_MASK) as u64;
        let l2 = (x >> (2 * LIMB_BITS)) as u64;
        let mut h = self.coeffs[0];
        h = add_mod(h, mul_mod(self.coeffs[1], l0));
        h = add_mod(h, mul_mod(self.coeffs[2], l1));
        h = add_mod(h, mul_mod(self.coeffs[3], l2));
        h
    }

    /// Field hash passed through a fixed 64-bit bijection.
    #[inline]
    pub fn mixed(&self, x: u128) -> u64 {
        let mut z = self.hash(x).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Hash reduced into `0..buckets`.
    #[inline]
    pub fn bucket(&self, x: u128, buckets: usize) -> usize {
        (self.mixed(x) % buckets as u64) as usize
    }

    /// Geometric level: `Pr[level ≥ j] ≈ 2^-j`, capped at `max_level`.
    #[inline]
    pub fn level(&self, x: u128, max_level: usize) -> usize {
        (self.mixed(x).leading_zeros() as usize).min(max_level)
    }

    /// A nonzero field element used as a fingerprint weight.
    #[inline]
    pub fn fingerprint(&self, x: u128) -> u64 {
        let h = self.hash(x);
        if h == 0 {
            1
        } else {
            h
        }
    }
}

/// Power fingerprint `z^x mod p`; unlike a linear hash it does not let a
/// mixture of equal-count indices masquerade as their average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerFingerprint {
    z: u64,
}

impl PowerFingerprint {
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        PowerFingerprint {
            z: rng.gen_range(2..P61 - 1),
        }
    }

    pub fn eval(&self, x: u128) -> u64 {
        let mut e = x % (P61 as u128 - 1);
        let mut base = self.z;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(acc, base);
            }
            base = mul_mod(base, base);
            e >>= 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn mod_reduction_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let a: u128 = rng.gen();
            assert_eq!(mod_p(a) as u128, a % P61 as u128);
        }
        assert_eq!(mod_p(P61 as u128), 0);
        assert_eq!(mod_p(u128::MAX) as u128, u128::MAX % P61 as u128);
    }

    #[test]
    fn signed_counts_cancel() {
        for c in [-5i64, -1, 0, 1, 7, i64::MIN + 1, i64::MAX] {
            assert_eq!(add_mod(signed_mod(c), signed_mod(-c)), 0);
        }
    }

    #[test]
    fn levels_are_roughly_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = LinearHash::draw(&mut rng);
        let n = 1u128 << 16;
        let deep = (0..n).filter(|&x| h.level(x, 30) >= 3).count() as f64;
        let frac = deep / n as f64;
        assert!((frac - 0.125).abs() < 0.02, "{frac}");
    }
}
