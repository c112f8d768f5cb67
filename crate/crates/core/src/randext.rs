//! Small sampling helpers on top of `RngCore`.
//!
//! Keeping these local avoids pulling a full distributions crate into a
//! `no_std` build; everything here is a few lines and fully deterministic
//! for a given generator state.

use rand_core::RngCore;

/// Uniform draw from `0..bound` via rejection sampling (no modulo bias).
pub(crate) fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u32) -> u32 {
    debug_assert!(bound > 0);
    let zone = (u64::from(u32::MAX) + 1) - ((u64::from(u32::MAX) + 1) % u64::from(bound));
    loop {
        let x = u64::from(rng.next_u32());
        if x < zone {
            return (x % u64::from(bound)) as u32;
        }
    }
}

/// Uniform draw from `[0, 1)` with 53 random mantissa bits.
pub(crate) fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
