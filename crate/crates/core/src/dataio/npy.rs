//! Reader and writer for the NumPy `.npy` format (versions 1.0 and 2.0).
//!
//! Only C-order, little-endian `float32`/`float64` arrays of rank 1 or 2 are
//! accepted. A rank-1 array of length `n` is read as an `n x 1` matrix.
//! Output is always version 1.0, `<f8`, with the header padded to a 64-byte
//! boundary.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Reads a matrix from a `.npy` stream. Values are widened to `f64`.
pub fn read_npy<R: Read>(mut reader: R) -> Result<FeatureMatrix> {
    let mut magic = [0u8; 8];
    read_exact(&mut reader, &mut magic, "magic and version")?;
    if &magic[..6] != MAGIC {
        return Err(Error::MalformedHeader("missing \\x93NUMPY magic".into()));
    }
    let header_len = match (magic[6], magic[7]) {
        (1, 0) => {
            let mut b = [0u8; 2];
            read_exact(&mut reader, &mut b, "header length")?;
            u16::from_le_bytes(b) as usize
        }
        (2, 0) => {
            let mut b = [0u8; 4];
            read_exact(&mut reader, &mut b, "header length")?;
            u32::from_le_bytes(b) as usize
        }
        (major, minor) => {
            return Err(Error::MalformedHeader(format!(
                "unsupported npy version {major}.{minor}"
            )))
        }
    };
    let mut raw = vec![0u8; header_len];
    read_exact(&mut reader, &mut raw, "header dictionary")?;
    let text = std::str::from_utf8(&raw)
        .map_err(|_| Error::MalformedHeader("header is not valid ASCII".into()))?;
    let header = parse_header(text)?;

    if header.fortran_order {
        return Err(Error::MalformedHeader(
            "Fortran-order arrays are not supported".into(),
        ));
    }
    let (rows, cols) = match header.shape.as_slice() {
        [n] => (*n, 1),
        [r, c] => (*r, *c),
        other => {
            return Err(Error::MalformedHeader(format!(
                "expected a 1-D or 2-D array, got shape {other:?}"
            )))
        }
    };
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::MalformedHeader("shape overflows".into()))?;
    let mut data = vec![0u8; count * header.dtype.width()];
    read_exact(&mut reader, &mut data, "array data")?;

    let values: Vec<f64> = match header.dtype {
        Dtype::F8 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F4 => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    FeatureMatrix::new(rows, cols, values)
}

/// Writes a matrix as a version 1.0 `<f8` C-order `.npy` stream.
pub fn write_npy<W: Write>(mut writer: W, m: &FeatureMatrix) -> Result<()> {
    let dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.rows(),
        m.cols()
    );
    // magic(6) + version(2) + len(2) + dict + padding + '\n' is a multiple of 64
    let unpadded = 10 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    let header_len = dict.len() + pad + 1;
    let mut out = Vec::with_capacity(10 + header_len + m.values().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', pad));
    out.push(b'\n');
    for v in m.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&out)?;
    Ok(())
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => {
            Error::Truncated(format!("npy {what} ends early ({} bytes expected)", buf.len()))
        }
        _ => Error::Stream(e),
    })
}

fn parse_header(text: &str) -> Result<Header> {
    let body = text.trim();
    let body = body
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| Error::MalformedHeader(format!("header is not a dict: {body:?}")))?;

    let descr = dict_value(body, "descr")?;
    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    let dtype = match descr {
        "<f8" => Dtype::F8,
        "<f4" => Dtype::F4,
        other => return Err(Error::UnsupportedDtype(other.to_string())),
    };

    let fortran_order = match dict_value(body, "fortran_order")? {
        "True" => true,
        "False" => false,
        other => {
            return Err(Error::MalformedHeader(format!(
                "fortran_order must be True or False, got {other:?}"
            )))
        }
    };

    let shape_text = dict_value(body, "shape")?;
    let inner = shape_text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::MalformedHeader(format!("shape is not a tuple: {shape_text:?}")))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim_end_matches('L')
                .parse::<usize>()
                .map_err(|_| Error::MalformedHeader(format!("bad shape entry {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Header {
        dtype,
        fortran_order,
        shape,
    })
}

/// Extracts the raw text of the value stored under `key` in a Python dict literal.
fn dict_value<'a>(body: &'a str, key: &str) -> Result<&'a str> {
    let start = ["'", "\""]
        .iter()
        .find_map(|q| body.find(&format!("{q}{key}{q}")).map(|i| i + key.len() + 2))
        .ok_or_else(|| Error::MalformedHeader(format!("missing key {key:?}")))?;
    let rest = body[start..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| Error::MalformedHeader(format!("missing ':' after {key:?}")))?
        .trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else if let Some(q) = rest.chars().next().filter(|c| *c == '\'' || *c == '"') {
        rest[1..].find(q).map(|i| i + 2)
    } else {
        Some(rest.find(',').unwrap_or(rest.len()))
    }
    .ok_or_else(|| Error::MalformedHeader(format!("unterminated value for {key:?}")))?;
    Ok(rest[..end].trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npy_bytes(descr: &str, fortran: bool, shape: &str, payload: &[u8]) -> Vec<u8> {
        let dict = format!(
            "{{'descr': '{descr}', 'fortran_order': {}, 'shape': {shape}, }}\n",
            if fortran { "True" } else { "False" }
        );
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn reads_float32_and_widens() {
        let payload: Vec<u8> = (0..15).flat_map(|i| (i as f32 * 0.5).to_le_bytes()).collect();
        let m = read_npy(&npy_bytes("<f4", false, "(3, 5)", &payload)[..]).unwrap();
        assert_eq!(m.shape(), (3, 5));
        assert_eq!(m.get(2, 4), 7.0);
    }

    #[test]
    fn one_dimensional_is_a_column() {
        let payload: Vec<u8> = [1.0f64, 2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let m = read_npy(&npy_bytes("<f8", false, "(2,)", &payload)[..]).unwrap();
        assert_eq!(m.shape(), (2, 1));
    }

    #[test]
    fn rejects_fortran_order_and_big_endian() {
        let payload = [0u8; 32];
        assert!(matches!(
            read_npy(&npy_bytes("<f8", true, "(2, 2)", &payload)[..]),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            read_npy(&npy_bytes(">f8", false, "(2, 2)", &payload)[..]),
            Err(Error::UnsupportedDtype(_))
        ));
        assert!(matches!(
            read_npy(&npy_bytes("<i8", false, "(2, 2)", &payload)[..]),
            Err(Error::UnsupportedDtype(_))
        ));
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let payload = [0u8; 24];
        assert!(matches!(
            read_npy(&npy_bytes("<f8", false, "(2, 2)", &payload)[..]),
            Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn rejects_nan_payload() {
        let payload: Vec<u8> = [1.0f64, f64::NAN].iter().flat_map(|v| v.to_le_bytes()).collect();
        assert!(matches!(
            read_npy(&npy_bytes("<f8", false, "(1, 2)", &payload)[..]),
            Err(Error::NonFinite { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn written_header_is_aligned() {
        let m = FeatureMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_npy(&mut buf, &m).unwrap();
        let header_len = u16::from_le_bytes([buf[8], buf[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        assert_eq!(buf[10 + header_len - 1], b'\n');
        assert_eq!(buf.len(), 10 + header_len + 32);
        assert_eq!(read_npy(&buf[..]).unwrap(), m);
    }
}
