//! Fixed-width index packing, LSB-first within each byte.

use crate::error::{CoreError, Result};

/// Bytes needed to hold `count` values of `bits` width.
pub fn packed_len(count: usize, bits: u8) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Packs indices into a dense LSB-first bit stream. Every index must
/// fit in `bits`; the final byte's unused high bits are zero.
pub fn pack_indices(indices: &[u32], bits: u8) -> Result<Vec<u8>> {
    if !(1..=32).contains(&bits) {
        return Err(CoreError::InvalidInput(format!(
            "index width must be 1..=32 bits, got {bits}"
        )));
    }
    let limit = if bits == 32 { u32::MAX } else { (1u32 << bits) - 1 };
    let mut out = vec![0u8; packed_len(indices.len(), bits)];
    let mut bitpos = 0usize;
    for (i, &idx) in indices.iter().enumerate() {
        if idx > limit {
            return Err(CoreError::InvalidInput(format!(
                "index {idx} at position {i} does not fit in {bits} bits"
            )));
        }
        for b in 0..bits as usize {
            if (idx >> b) & 1 == 1 {
                out[bitpos >> 3] |= 1 << (bitpos & 7);
            }
            bitpos += 1;
        }
    }
    Ok(out)
}

/// Inverse of [`pack_indices`]. The byte slice must be exactly the
/// packed length and any trailing padding bits must be zero.
pub fn unpack_indices(bytes: &[u8], bits: u8, count: usize) -> Result<Vec<u32>> {
    if !(1..=32).contains(&bits) {
        return Err(CoreError::InvalidInput(format!(
            "index width must be 1..=32 bits, got {bits}"
        )));
    }
    let need = packed_len(count, bits);
    if bytes.len() != need {
        return Err(CoreError::Wire(format!(
            "packed index block is {} bytes, expected {need}",
            bytes.len()
        )));
    }
    let total_bits = count * bits as usize;
    for pos in total_bits..need * 8 {
        if (bytes[pos >> 3] >> (pos & 7)) & 1 == 1 {
            return Err(CoreError::Wire("nonzero padding in index block".into()));
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut bitpos = 0usize;
    for _ in 0..count {
        let mut v = 0u32;
        for b in 0..bits as usize {
            if (bytes[bitpos >> 3] >> (bitpos & 7)) & 1 == 1 {
                v |= 1 << b;
            }
            bitpos += 1;
        }
        out.push(v);
    }
    Ok(out)
}
