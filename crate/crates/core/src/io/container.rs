//! Binary grid container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SEBG"
//! 4       2     version (1), u16 LE
//! 6       2     dtype: 1 = f32 planes, 2 = u32 class bitfield, u16 LE
//! 8       4     height, u32 LE
//! 12      4     width, u32 LE
//! 16      4     num_planes, u32 LE
//! 20      ...   payload: planar, row-major, little-endian
//! ```
//!
//! Label bitfields are a single plane; the number of classes lives in the
//! dataset manifest, not in the file.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::grid::{GridError, MultiLabelMap, ProbMap, MAX_CLASSES};

pub const MAGIC: [u8; 4] = *b"SEBG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;
pub const DTYPE_F32: u16 = 1;
pub const DTYPE_U32: u16 = 2;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("byte {offset}: bad magic {found:?}, expected \"SEBG\"")]
    BadMagic { offset: usize, found: Vec<u8> },
    #[error("byte {offset}: unsupported version {found}")]
    BadVersion { offset: usize, found: u16 },
    #[error("byte {offset}: unknown dtype code {found}")]
    BadDtype { offset: usize, found: u16 },
    #[error("byte {offset}: {what} is {found}, must be {expected}")]
    BadField {
        offset: usize,
        what: &'static str,
        found: u64,
        expected: &'static str,
    },
    #[error("byte {offset}: truncated {what}, expected {expected} bytes, got {actual}")]
    Truncated {
        offset: usize,
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("byte {offset}: {extra} trailing bytes after payload")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("byte {offset}: invalid payload: {source}")]
    Payload { offset: usize, source: GridError },
    #[error("expected a {expected} container, found {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
}

/// Contents of a container.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Prob(ProbMap),
    Labels(MultiLabelMap),
}

impl Grid {
    fn kind(&self) -> &'static str {
        match self {
            Grid::Prob(_) => "f32",
            Grid::Labels(_) => "u32",
        }
    }
}

pub fn encode(grid: &Grid) -> Vec<u8> {
    let (dtype, h, w, planes, len) = match grid {
        Grid::Prob(p) => (
            DTYPE_F32,
            p.height(),
            p.width(),
            p.num_classes(),
            p.values().len(),
        ),
        Grid::Labels(l) => (DTYPE_U32, l.height(), l.width(), 1, l.fields().len()),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dtype.to_le_bytes());
    for v in [h, w, planes] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    match grid {
        Grid::Prob(p) => p
            .values()
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Grid::Labels(l) => l
            .fields()
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
    }
    out
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a container. Label bitfields are returned with `MAX_CLASSES`
/// classes; narrow them with [`with_num_classes`].
pub fn decode(bytes: &[u8]) -> Result<Grid, ContainerError> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic {
            offset: 0,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(ContainerError::Truncated {
            offset: bytes.len(),
            what: "header",
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let version = u16_at(bytes, 4);
    if version != VERSION {
        return Err(ContainerError::BadVersion {
            offset: 4,
            found: version,
        });
    }
    let dtype = u16_at(bytes, 6);
    if dtype != DTYPE_F32 && dtype != DTYPE_U32 {
        return Err(ContainerError::BadDtype {
            offset: 6,
            found: dtype,
        });
    }
    let h = u32_at(bytes, 8) as usize;
    let w = u32_at(bytes, 12) as usize;
    let planes = u32_at(bytes, 16) as usize;
    for (offset, what, v) in [
        (8, "height", h),
        (12, "width", w),
        (16, "num_planes", planes),
    ] {
        if v == 0 {
            return Err(ContainerError::BadField {
                offset,
                what,
                found: 0,
                expected: "positive",
            });
        }
    }
    if dtype == DTYPE_U32 && planes != 1 {
        return Err(ContainerError::BadField {
            offset: 16,
            what: "num_planes",
            found: planes as u64,
            expected: "1 for a label bitfield",
        });
    }
    let count = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(planes))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or(ContainerError::BadField {
            offset: 8,
            what: "cell count",
            found: u64::MAX,
            expected: "addressable",
        })?;
    let expected = count * 4;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(ContainerError::Truncated {
            offset: bytes.len(),
            what: "payload",
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(ContainerError::TrailingBytes {
            offset: HEADER_LEN + expected,
            extra: payload.len() - expected,
        });
    }
    let words = payload.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]);
    let to_payload_err = |source: GridError| {
        let offset = match source {
            GridError::ProbabilityRange { index, .. } => HEADER_LEN + 4 * index,
            _ => HEADER_LEN,
        };
        ContainerError::Payload { offset, source }
    };
    if dtype == DTYPE_F32 {
        let values = words.map(f32::from_le_bytes).collect();
        ProbMap::from_values(h, w, planes, values)
            .map(Grid::Prob)
            .map_err(to_payload_err)
    } else {
        let fields = words.map(u32::from_le_bytes).collect();
        MultiLabelMap::from_fields(h, w, MAX_CLASSES, fields)
            .map(Grid::Labels)
            .map_err(to_payload_err)
    }
}

/// Reinterprets a decoded bitfield as having `num_classes` classes,
/// rejecting bits at or above that index.
pub fn with_num_classes(
    labels: MultiLabelMap,
    num_classes: usize,
) -> Result<MultiLabelMap, ContainerError> {
    let (h, w) = labels.dims();
    MultiLabelMap::from_fields(h, w, num_classes, labels.fields().to_vec()).map_err(|source| {
        ContainerError::Payload {
            offset: HEADER_LEN,
            source,
        }
    })
}

fn io_err(path: &Path, e: std::io::Error) -> ContainerError {
    ContainerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn write_container(grid: &Grid, path: &Path) -> Result<(), ContainerError> {
    fs::write(path, encode(grid)).map_err(|e| io_err(path, e))
}

pub fn read_container(path: &Path) -> Result<Grid, ContainerError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes)
}

pub fn read_prob(path: &Path) -> Result<ProbMap, ContainerError> {
    match read_container(path)? {
        Grid::Prob(p) => Ok(p),
        other => Err(ContainerError::WrongKind {
            expected: "f32",
            found: other.kind(),
        }),
    }
}

pub fn read_labels(path: &Path, num_classes: usize) -> Result<MultiLabelMap, ContainerError> {
    match read_container(path)? {
        Grid::Labels(l) => with_num_classes(l, num_classes),
        other => Err(ContainerError::WrongKind {
            expected: "u32",
            found: other.kind(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_prob() -> ProbMap {
        ProbMap::from_values(2, 3, 2, (0..12).map(|i| i as f32 / 11.0).collect()).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&Grid::Prob(sample_prob()));
        assert_eq!(&bytes[..4], b"SEBG");
        assert_eq!(&bytes[4..8], &[1, 0, 1, 0]);
        assert_eq!(&bytes[8..20], &[2, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(bytes.len(), 20 + 48);
    }

    #[test]
    fn truncated_payload_reports_sizes() {
        let mut bytes = encode(&Grid::Prob(sample_prob()));
        bytes.truncate(30);
        match decode(&bytes) {
            Err(ContainerError::Truncated {
                what: "payload",
                expected: 48,
                actual: 10,
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_magic_rejected_first() {
        let mut bytes = encode(&Grid::Prob(sample_prob()));
        bytes[0] = b'X';
        bytes.truncate(6);
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::BadMagic { offset: 0, .. })
        ));
    }

    #[test]
    fn header_field_errors() {
        let good = encode(&Grid::Prob(sample_prob()));
        let mut v = good.clone();
        v[4] = 9;
        assert!(matches!(
            decode(&v),
            Err(ContainerError::BadVersion {
                offset: 4,
                found: 9
            })
        ));
        let mut d = good.clone();
        d[6] = 7;
        assert!(matches!(
            decode(&d),
            Err(ContainerError::BadDtype { offset: 6, .. })
        ));
        let mut z = good.clone();
        z[12..16].copy_from_slice(&[0; 4]);
        assert!(matches!(
            decode(&z),
            Err(ContainerError::BadField { offset: 12, .. })
        ));
        let mut extra = good;
        extra.push(0);
        assert!(matches!(
            decode(&extra),
            Err(ContainerError::TrailingBytes {
                offset: 68,
                extra: 1
            })
        ));
    }

    #[test]
    fn out_of_range_probability_located() {
        let mut bytes = encode(&Grid::Prob(sample_prob()));
        bytes[20 + 4 * 5..20 + 4 * 6].copy_from_slice(&2.0f32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::Payload { offset: 40, .. })
        ));
    }

    #[test]
    fn narrowing_rejects_high_bits() {
        let l = MultiLabelMap::from_fields(1, 2, 8, vec![0b1000_0000, 1]).unwrap();
        let g = decode(&encode(&Grid::Labels(l.clone()))).unwrap();
        let Grid::Labels(wide) = g else { panic!() };
        assert_eq!(with_num_classes(wide.clone(), 8).unwrap(), l);
        assert!(with_num_classes(wide, 7).is_err());
    }

    proptest! {
        #[test]
        fn prob_round_trip(h in 1usize..6, w in 1usize..6, k in 1usize..4, seed in any::<u64>()) {
            let n = h * w * k;
            let values: Vec<f32> = (0..n)
                .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 40) as f32) / (1u64 << 24) as f32)
                .collect();
            let p = ProbMap::from_values(h, w, k, values).unwrap();
            let back = decode(&encode(&Grid::Prob(p.clone()))).unwrap();
            prop_assert_eq!(back, Grid::Prob(p));
        }

        #[test]
        fn label_round_trip(fields in proptest::collection::vec(any::<u32>(), 12)) {
            let l = MultiLabelMap::from_fields(3, 4, 32, fields).unwrap();
            let bytes = encode(&Grid::Labels(l.clone()));
            prop_assert_eq!(decode(&bytes).unwrap(), Grid::Labels(l));
        }
    }
}
