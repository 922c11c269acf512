use crate::error::{NnError, Result};
use crate::tensor::Tensor;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SLNN";
pub const FORMAT_VERSION: u16 = 1;

/// Binary tensor container: magic, format version, then length-prefixed
/// named records until EOF. All integers little endian, payloads f64 bits.
///
/// Record layout: name_len u16, name bytes, ndim u8, dims u32 each, data.
pub fn save_records<W: Write>(w: &mut W, records: &[(String, &Tensor)]) -> Result<()> {
    for (i, (name, _)) in records.iter().enumerate() {
        if records[..i].iter().any(|(n, _)| n == name) {
            return Err(NnError::Checkpoint(format!("duplicate record name '{name}'")));
        }
    }
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for (name, t) in records {
        let nb = name.as_bytes();
        if nb.len() > u16::MAX as usize {
            return Err(NnError::Checkpoint(format!("record name too long: {} bytes", nb.len())));
        }
        if t.shape().len() > u8::MAX as usize {
            return Err(NnError::Checkpoint(format!(
                "record '{name}' has rank {}",
                t.shape().len()
            )));
        }
        w.write_all(&(nb.len() as u16).to_le_bytes())?;
        w.write_all(nb)?;
        w.write_all(&[t.shape().len() as u8])?;
        for &d in t.shape() {
            if d > u32::MAX as usize {
                return Err(NnError::Checkpoint(format!("record '{name}' dim {d} too large")));
            }
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_records<R: Read>(r: &mut R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| NnError::Checkpoint("container too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let mut ver = [0u8; 2];
    r.read_exact(&mut ver)
        .map_err(|_| NnError::Checkpoint("container too short for version".into()))?;
    let version = u16::from_le_bytes(ver);
    if version != FORMAT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported container version {version}"
        )));
    }

    let mut records = Vec::new();
    loop {
        let mut len_buf = [0u8; 2];
        match read_or_eof(r, &mut len_buf)? {
            ReadState::Eof => break,
            ReadState::Full => {}
        }
        let name_len = u16::from_le_bytes(len_buf) as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf)
            .map_err(|_| NnError::Checkpoint("truncated record name".into()))?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| NnError::Checkpoint("record name is not UTF-8".into()))?;

        let mut ndim = [0u8; 1];
        r.read_exact(&mut ndim)
            .map_err(|_| NnError::Checkpoint(format!("truncated rank for '{name}'")))?;
        let mut shape = Vec::with_capacity(ndim[0] as usize);
        let mut numel: usize = 1;
        for _ in 0..ndim[0] {
            let mut d = [0u8; 4];
            r.read_exact(&mut d)
                .map_err(|_| NnError::Checkpoint(format!("truncated shape for '{name}'")))?;
            let dim = u32::from_le_bytes(d) as usize;
            numel = numel
                .checked_mul(dim)
                .ok_or_else(|| NnError::Checkpoint(format!("shape overflow in '{name}'")))?;
            shape.push(dim);
        }
        let mut data = vec![0.0f64; numel];
        let mut buf = [0u8; 8];
        for slot in &mut data {
            r.read_exact(&mut buf)
                .map_err(|_| NnError::Checkpoint(format!("truncated data for '{name}'")))?;
            *slot = f64::from_le_bytes(buf);
        }
        if records.iter().any(|(n, _)| *n == name) {
            return Err(NnError::Checkpoint(format!("duplicate record name '{name}'")));
        }
        records.push((name, Tensor::new(shape, data)?));
    }
    Ok(records)
}

enum ReadState {
    Full,
    Eof,
}

fn read_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<ReadState> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(ReadState::Eof);
            }
            return Err(NnError::Checkpoint("truncated record header".into()));
        }
        filled += n;
    }
    Ok(ReadState::Full)
}

pub fn save_file<P: AsRef<Path>>(path: P, records: &[(String, &Tensor)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    save_records(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Vec<(String, Tensor)>> {
    let mut r = BufReader::new(File::open(path)?);
    load_records(&mut r)
}
