use crate::codec::config::CodecConfig;
use crate::codec::model::CodecModel;
use crate::error::{CoreError, Result};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

/// Codec checkpoint: a little-endian u32 header length, a JSON codec
/// configuration, then the binary tensor container. The SHA-256 of the
/// whole byte stream identifies the checkpoint for codebook
/// synchronization checks.
pub fn to_bytes(model: &CodecModel) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&model.config)?;
    let mut out = Vec::new();
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let records = model.named_tensors();
    scmap_nn::checkpoint::save_records(&mut out, &records)
        .map_err(CoreError::from)?;
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<CodecModel> {
    if bytes.len() < 4 {
        return Err(CoreError::InvalidInput(
            "checkpoint too short for a header length".into(),
        ));
    }
    let hlen = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let rest = &bytes[4..];
    if rest.len() < hlen {
        return Err(CoreError::InvalidInput(format!(
            "checkpoint header claims {hlen} bytes, {} available",
            rest.len()
        )));
    }
    let config: CodecConfig = serde_json::from_slice(&rest[..hlen])?;
    let mut model = CodecModel::new(config, 0)?;

    let records = scmap_nn::checkpoint::load_records(&mut &rest[hlen..])?;
    let mut by_name: HashMap<String, scmap_nn::Tensor> = records.into_iter().collect();
    let mut assign = |name: String, slot: &mut scmap_nn::Tensor| -> Result<()> {
        let rec = by_name.remove(&name).ok_or_else(|| {
            CoreError::InvalidInput(format!("checkpoint is missing tensor '{name}'"))
        })?;
        if rec.shape() != slot.shape() {
            return Err(CoreError::InvalidInput(format!(
                "tensor '{name}' has shape {:?}, model expects {:?}",
                rec.shape(),
                slot.shape()
            )));
        }
        *slot = rec;
        Ok(())
    };
    for (name, slot) in model.named_params_mut() {
        assign(name, slot)?;
    }
    for (name, slot) in model.named_stats_mut() {
        assign(name, slot)?;
    }
    if let Some(name) = by_name.keys().next() {
        return Err(CoreError::InvalidInput(format!(
            "checkpoint contains unknown tensor '{name}'"
        )));
    }
    Ok(model)
}

pub fn hash_bytes(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// Writes the checkpoint and returns its content hash.
pub fn save_file<P: AsRef<Path>>(model: &CodecModel, path: P) -> Result<[u8; 32]> {
    let bytes = to_bytes(model)?;
    std::fs::write(path, &bytes)?;
    Ok(hash_bytes(&bytes))
}

pub fn load_file<P: AsRef<Path>>(path: P) -> Result<(CodecModel, [u8; 32])> {
    let bytes = std::fs::read(path)?;
    Ok((from_bytes(&bytes)?, hash_bytes(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use scmap_nn::Tensor;

    fn model() -> CodecModel {
        CodecModel::new(CodecConfig::tiny(16), 42).unwrap()
    }

    #[test]
    fn round_trip_preserves_every_tensor() {
        let m = model();
        let bytes = to_bytes(&m).unwrap();
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back.config, m.config);
        for ((n0, t0), (n1, t1)) in m.named_tensors().iter().zip(back.named_tensors().iter()) {
            assert_eq!(n0, n1);
            assert_eq!(t0.data(), t1.data(), "tensor {n0}");
        }
    }

    #[test]
    fn serialization_is_deterministic_and_hash_stable() {
        let m = model();
        let a = to_bytes(&m).unwrap();
        let b = to_bytes(&m).unwrap();
        assert_eq!(a, b);
        assert_eq!(hash_bytes(&a), hash_bytes(&b));
    }

    #[test]
    fn hash_detects_any_byte_change() {
        let m = model();
        let mut bytes = to_bytes(&m).unwrap();
        let h0 = hash_bytes(&bytes);
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        assert_ne!(h0, hash_bytes(&bytes));
    }

    #[test]
    fn loaded_model_reproduces_inference() {
        let m = model();
        let img = Tensor::from_fn(vec![1, 3, 16, 16], |i| ((i * 13) % 29) as f64 / 28.0);
        let lat = m.encode_digital(&img, 10.0).unwrap();
        let recon = m.decode_digital(&lat, 10.0).unwrap();

        let back = from_bytes(&to_bytes(&m).unwrap()).unwrap();
        let lat2 = back.encode_digital(&img, 10.0).unwrap();
        assert_eq!(lat.indices, lat2.indices);
        let recon2 = back.decode_digital(&lat2, 10.0).unwrap();
        assert_eq!(recon.data(), recon2.data());
    }

    #[test]
    fn rejects_missing_tensor() {
        let m = model();
        let header = serde_json::to_vec(&m.config).unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(header.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&header);
        let records = m.named_tensors();
        scmap_nn::checkpoint::save_records(&mut bytes, &records[..records.len() - 1]).unwrap();
        let err = from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("missing tensor"), "{err}");
    }

    #[test]
    fn rejects_truncated_stream() {
        let m = model();
        let bytes = to_bytes(&m).unwrap();
        assert!(from_bytes(&bytes[..bytes.len() / 2]).is_err());
        assert!(from_bytes(&bytes[..2]).is_err());
    }

    #[test]
    fn file_round_trip_reports_matching_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codec.ckpt");
        let m = model();
        let h = save_file(&m, &path).unwrap();
        let (_, h2) = load_file(&path).unwrap();
        assert_eq!(h, h2);
    }
}
