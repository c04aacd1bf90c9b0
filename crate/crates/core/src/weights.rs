//! TMSW weight files.
//!
//! Little-endian layout:
//!
//! | offset | size          | content                      |
//! |--------|---------------|------------------------------|
//! | 0      | 4             | magic `TMSW`                 |
//! | 4      | 1             | version `0x01`               |
//! | 5      | 4             | `n_s` (u32)                  |
//! | 9      | 4             | `n_d` (u32)                  |
//! | 13     | 8 n_d n_s     | `W_in`, f64, row-major       |
//! |        | 8 n_s n_d     | `W_out`, f64, row-major      |
//! |        | 8 n_s         | `b`, f64                     |

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::ToyModel;

pub const MAGIC: &[u8; 4] = b"TMSW";
pub const VERSION: u8 = 0x01;
const HEADER_LEN: usize = 13;

pub fn encode(model: &ToyModel) -> Result<Vec<u8>> {
    let n_s = u32::try_from(model.n_s()).map_err(|_| Error::invalid("n_s exceeds u32"))?;
    let n_d = u32::try_from(model.n_d()).map_err(|_| Error::invalid("n_d exceeds u32"))?;
    let count = 2 * model.w_in.len() + model.b.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * count);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&n_s.to_le_bytes());
    out.extend_from_slice(&n_d.to_le_bytes());
    // iter() walks logical row-major order regardless of memory layout
    for v in model
        .w_in
        .iter()
        .chain(model.w_out.iter())
        .chain(model.b.iter())
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<ToyModel> {
    if bytes.len() < HEADER_LEN {
        if !MAGIC.starts_with(&bytes[..bytes.len().min(4)]) {
            return Err(Error::MalformedWeights("bad magic".into()));
        }
        return Err(Error::TruncatedWeights {
            position: bytes.len(),
            expected: HEADER_LEN,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedWeights(format!(
            "bad magic {:?}",
            &bytes[..4]
        )));
    }
    if bytes[4] != VERSION {
        return Err(Error::MalformedWeights(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let n_s = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let n_d = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes")) as usize;
    if n_s == 0 || n_d == 0 {
        return Err(Error::MalformedWeights(format!(
            "zero dimension n_s = {n_s}, n_d = {n_d}"
        )));
    }
    let expected = n_s
        .checked_mul(n_d)
        .and_then(|m| m.checked_mul(2))
        .and_then(|m| m.checked_add(n_s))
        .and_then(|m| m.checked_mul(8))
        .and_then(|m| m.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::MalformedWeights(format!("dimensions {n_s} x {n_d} overflow")))?;
    if bytes.len() < expected {
        let position = HEADER_LEN + (bytes.len() - HEADER_LEN) / 8 * 8;
        return Err(Error::TruncatedWeights { position, expected });
    }
    if bytes.len() > expected {
        return Err(Error::MalformedWeights(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }

    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let w_in = Array2::from_shape_vec((n_d, n_s), take(n_d * n_s)).expect("length checked");
    let w_out = Array2::from_shape_vec((n_s, n_d), take(n_s * n_d)).expect("length checked");
    let b = Array1::from_vec(take(n_s));
    ToyModel::from_parts(w_in, w_out, b)
}

pub fn save_model(model: &ToyModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ToyModel> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = ToyModel::init(3, 2, 0).unwrap();
        let bytes = encode(&m).unwrap();
        assert_eq!(&bytes[..5], b"TMSW\x01");
        assert_eq!(&bytes[5..9], &3u32.to_le_bytes());
        assert_eq!(&bytes[9..13], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 13 + 8 * (6 + 6 + 3));
        assert_eq!(&bytes[13..21], &m.w_in[[0, 0]].to_le_bytes());
        assert_eq!(&bytes[21..29], &m.w_in[[0, 1]].to_le_bytes());
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tmsw");
        let mut m = ToyModel::init(17, 5, 4).unwrap();
        m.b.mapv_inplace(|_| -0.125);
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn transposed_layout_still_encodes_row_major() {
        let m = ToyModel::init(4, 3, 1).unwrap();
        let t = ToyModel::from_parts(
            m.w_out.clone().reversed_axes(),
            m.w_in.clone().reversed_axes(),
            m.b.clone(),
        )
        .unwrap();
        let back = decode(&encode(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut bytes = encode(&ToyModel::init(3, 2, 0).unwrap()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::MalformedWeights(_))));
        assert!(matches!(decode(b"NOPE"), Err(Error::MalformedWeights(_))));
    }

    #[test]
    fn rejects_wrong_version() {
        let mut bytes = encode(&ToyModel::init(3, 2, 0).unwrap()).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode(&bytes), Err(Error::MalformedWeights(_))));
    }

    #[test]
    fn truncated_payload_reports_position() {
        let bytes = encode(&ToyModel::init(3, 2, 0).unwrap()).unwrap();
        let cut = &bytes[..13 + 8 * 4 + 3];
        match decode(cut) {
            Err(Error::TruncatedWeights { position, expected }) => {
                assert_eq!(position, 13 + 32);
                assert_eq!(expected, bytes.len());
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            decode(&bytes[..7]),
            Err(Error::TruncatedWeights { .. })
        ));
    }

    #[test]
    fn rejects_overflowing_dimensions() {
        let mut bytes = b"TMSW\x01".to_vec();
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        // either overflow (32-bit) or a truncation report (64-bit); never an allocation
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = encode(&ToyModel::init(3, 2, 0).unwrap()).unwrap();
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(Error::MalformedWeights(_))));
    }
}
