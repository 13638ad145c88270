//! Deterministic derivation of sub-seeds from a master seed.

/// splitmix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed for (`domain`, `index`) under `master`.
///
/// Pipelines use distinct domain tags per randomness site (initial layouts,
/// per-level coarsening, jitter, ...) so that changing the iteration count of
/// one stage never perturbs another stage's draws.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    mix(mix(master ^ mix(domain)) ^ index)
}

/// Domain tags for [`derive_seed`].
pub mod domains {
    pub const INIT_LAYOUT: u64 = 1;
    pub const COARSEN: u64 = 2;
    pub const INTERPOLATE: u64 = 3;
    pub const PARTITION: u64 = 4;
    pub const EXPAND: u64 = 5;
    pub const FUZZY_PART: u64 = 6;
    pub const REFINE: u64 = 7;
    pub const COMPONENT: u64 = 8;
}
