//! Small deterministic hashing utilities.
//!
//! Everything that needs a content hash (program identity, suite identity,
//! seeded mock derivation) goes through these so results are stable across
//! processes and platforms.

/// FNV-1a over raw bytes.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Combine two values with a splitmix64-style finalizer.
pub fn mix64(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_distinguishes_inputs() {
        assert_ne!(fnv1a_64(b"a"), fnv1a_64(b"b"));
        assert_eq!(fnv1a_64(b"same"), fnv1a_64(b"same"));
    }

    #[test]
    fn mix_is_order_sensitive() {
        assert_ne!(mix64(1, 2), mix64(2, 1));
    }
}
