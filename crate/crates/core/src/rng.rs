//! Seedable random streams.
//!
//! Every stream is a xoshiro256++ generator. Replica streams are derived from
//! a master seed with [`derive_replica_seed`], so results never depend on how
//! replicas are scheduled onto threads.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Name of the generator backing [`RngStream`], echoed into run manifests.
pub const RNG_ALGORITHM: &str = "xoshiro256++ (seeded via SplitMix64)";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer (Stafford variant 13).
#[inline]
pub fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replica `replica_index` of a run seeded with `master_seed`.
///
/// `splitmix64_finalize(master_seed ^ (replica_index * 0x9E3779B97F4A7C15))`,
/// with wrapping multiplication. The finalizer is a bijection on `u64`, so
/// distinct replica indices below 2^64 / gcd never collide for a fixed master.
pub fn derive_replica_seed(master_seed: u64, replica_index: u64) -> u64 {
    splitmix64_finalize(master_seed ^ replica_index.wrapping_mul(GOLDEN_GAMMA))
}

/// A single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Stream for one replica of a seeded run.
    pub fn for_replica(master_seed: u64, replica_index: u64) -> Self {
        Self::from_seed(derive_replica_seed(master_seed, replica_index))
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn open01(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits, offset by half an ulp.
            let u = ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
