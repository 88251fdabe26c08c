//! Seed derivation.
//!
//! All randomness in the engine flows from a 64-bit master seed through
//! [`derive`], then into a [`ChaCha8Rng`]. The mixing function is splitmix64's
//! finalizer, which is simple enough to reimplement bit-exactly elsewhere:
//!
//! ```text
//! derive(parent, key) = fmix(parent ^ fmix(key + 0x9E3779B97F4A7C15))
//! fmix(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!          z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!          z ^ (z >> 31)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Human-readable description written into manifest headers.
pub const DERIVATION: &str = "derive(parent,key)=fmix(parent^fmix(key+0x9E3779B97F4A7C15)); \
fmix=splitmix64 finalizer; per-scene seed=derive(master_seed,index); rng=ChaCha8 seed_from_u64";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags that keep independent seed streams apart.
pub mod domain {
    pub const BACKGROUND_POOL: u64 = 0xB6_0001;
    pub const FOREGROUND_POOL: u64 = 0xF6_0002;
    pub const SCENE: u64 = 0x5C_0003;
    pub const PLACEMENT: u64 = 0x91_0004;
    pub const MIX: u64 = 0xA3_0005;
    pub const PLAN_OP: u64 = 0x0F_0006;
    pub const SCHEDULE: u64 = 0x5D_0007;
}

#[inline]
pub fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive(parent: u64, key: u64) -> u64 {
    fmix(parent ^ fmix(key.wrapping_add(GOLDEN)))
}

/// Seed for the scene at `index`.
#[inline]
pub fn scene_seed(master: u64, index: usize) -> u64 {
    derive(master, index as u64)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
