//! Morton (Z-order) packing of signed voxel coordinates into a single key.
//!
//! Keys give the sparse voxel store a deterministic octree-order
//! iteration sequence, which the exporters rely on for stable output.

/// Coordinates are biased by this much so negatives pack into unsigned bits.
const BIAS: i64 = 1 << 20;
/// Each axis gets 21 bits after biasing, so 63 of the 64 key bits are used.
const AXIS_BITS: u32 = 21;
const AXIS_MAX: i64 = 1 << AXIS_BITS;

/// Largest voxel index representable on any axis.
pub const COORD_MAX: i32 = (AXIS_MAX - BIAS - 1) as i32;
/// Smallest voxel index representable on any axis.
pub const COORD_MIN: i32 = (-BIAS) as i32;

fn spread(v: u64) -> u64 {
    // Classic bit-interleave spread: 21 significant bits end up 3 apart.
    let mut x = v & 0x1f_ffff;
    x = (x | (x << 32)) & 0x1f00000000ffff;
    x = (x | (x << 16)) & 0x1f0000ff0000ff;
    x = (x | (x << 8)) & 0x100f00f00f00f00f;
    x = (x | (x << 4)) & 0x10c30c30c30c30c3;
    x = (x | (x << 2)) & 0x1249249249249249;
    x
}

fn compact(v: u64) -> u64 {
    let mut x = v & 0x1249249249249249;
    x = (x | (x >> 2)) & 0x10c30c30c30c30c3;
    x = (x | (x >> 4)) & 0x100f00f00f00f00f;
    x = (x | (x >> 8)) & 0x1f0000ff0000ff;
    x = (x | (x >> 16)) & 0x1f00000000ffff;
    x = (x | (x >> 32)) & 0x1f_ffff;
    x
}

/// Packs a signed voxel coordinate triple into one 63-bit Morton key.
/// Returns `None` when any axis falls outside the representable range.
pub fn encode(ix: i32, iy: i32, iz: i32) -> Option<u64> {
    let bias = |v: i32| -> Option<u64> {
        let b = v as i64 + BIAS;
        if (0..AXIS_MAX).contains(&b) {
            Some(b as u64)
        } else {
            None
        }
    };
    let (x, y, z) = (bias(ix)?, bias(iy)?, bias(iz)?);
    Some(spread(x) | (spread(y) << 1) | (spread(z) << 2))
}

/// Inverse of [`encode`].
pub fn decode(key: u64) -> (i32, i32, i32) {
    let unbias = |v: u64| (v as i64 - BIAS) as i32;
    (
        unbias(compact(key)),
        unbias(compact(key >> 1)),
        unbias(compact(key >> 2)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trips_hand_picked_coordinates() {
        for &c in &[
            (0, 0, 0),
            (1, 2, 3),
            (-1, -2, -3),
            (COORD_MAX, COORD_MIN, 0),
            (COORD_MIN, COORD_MIN, COORD_MIN),
            (COORD_MAX, COORD_MAX, COORD_MAX),
        ] {
            let key = encode(c.0, c.1, c.2).unwrap();
            assert_eq!(decode(key), c);
        }
    }

    #[test]
    fn round_trips_random_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let c = (
                rng.gen_range(COORD_MIN..=COORD_MAX),
                rng.gen_range(COORD_MIN..=COORD_MAX),
                rng.gen_range(COORD_MIN..=COORD_MAX),
            );
            assert_eq!(decode(encode(c.0, c.1, c.2).unwrap()), c);
        }
    }

    #[test]
    fn rejects_out_of_range_axes() {
        assert!(encode(COORD_MAX + 1, 0, 0).is_none());
        assert!(encode(0, COORD_MIN - 1, 0).is_none());
        assert!(encode(0, 0, i32::MAX).is_none());
    }

    #[test]
    fn keys_are_unique_per_coordinate() {
        let a = encode(5, 9, -2).unwrap();
        let b = encode(9, 5, -2).unwrap();
        let c = encode(5, 9, -3).unwrap();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
