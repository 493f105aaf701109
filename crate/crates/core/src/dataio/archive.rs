//! `.combood` detector archives.
//!
//! Layout (all integers and reals little-endian):
//!
//! ```text
//! magic        8 bytes   "COMBOOD\0"
//! version      u32       FORMAT_VERSION
//! sections     u32       number of sections that follow
//! per section:
//!   tag        4 bytes   CONF | XFRM | MAHA | KNN_ | THRS
//!   length     u64       payload bytes
//!   payload
//!
//! CONF  reg_c f64, k u64, target_tpr f64, clamp_eps f64
//! XFRM  n u64, lambdas n×f64, means n×f64, stds n×f64
//! MAHA  dim u64, reg_c f64, logdet f64, mean dim×f64, factor dim²×f64 (row-major)
//! KNN_  rows u64, cols u64, k u64, normalized rows rows·cols×f64 (row-major)
//! THRS  present u8, threshold f64
//! ```
//!
//! Every section must appear exactly once. Reals are stored as raw IEEE-754
//! bits, so a save/load cycle is bit-exact.

use std::path::Path;

use crate::detector::{ComboodDetector, DetectorConfig};
use crate::error::{Error, Result};
use crate::knn::KnnModel;
use crate::mahalanobis::MahalanobisModel;
use crate::matrix::FeatureMatrix;
use crate::transform::FittedTransform;

pub const MAGIC: &[u8; 8] = b"COMBOOD\0";
pub const FORMAT_VERSION: u32 = 1;
pub const EXTENSION: &str = "combood";

const TAG_CONFIG: &[u8; 4] = b"CONF";
const TAG_TRANSFORM: &[u8; 4] = b"XFRM";
const TAG_MAHALANOBIS: &[u8; 4] = b"MAHA";
const TAG_KNN: &[u8; 4] = b"KNN_";
const TAG_THRESHOLD: &[u8; 4] = b"THRS";

pub fn save_detector(detector: &ComboodDetector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(detector)).map_err(|e| Error::io(path, e))
}

pub fn load_detector(path: impl AsRef<Path>) -> Result<ComboodDetector> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn encode(d: &ComboodDetector) -> Vec<u8> {
    let mut sections: Vec<(&[u8; 4], Vec<u8>)> = Vec::with_capacity(5);

    let c = d.config();
    let mut w = Writer::default();
    w.f64(c.reg_c).u64(c.k as u64).f64(c.target_tpr).f64(c.clamp_eps);
    sections.push((TAG_CONFIG, w.0));

    let t = d.transform();
    let mut w = Writer::default();
    w.u64(t.n_features() as u64)
        .f64s(t.lambdas())
        .f64s(t.means())
        .f64s(t.stds());
    sections.push((TAG_TRANSFORM, w.0));

    let m = d.mahalanobis();
    let mut w = Writer::default();
    w.u64(m.dim() as u64)
        .f64(m.reg_c())
        .f64(m.logdet())
        .f64s(m.mean())
        .f64s(m.cholesky_factor());
    sections.push((TAG_MAHALANOBIS, w.0));

    let k = d.knn();
    let mut w = Writer::default();
    w.u64(k.train().rows() as u64)
        .u64(k.train().cols() as u64)
        .u64(k.k() as u64)
        .f64s(k.train().values());
    sections.push((TAG_KNN, w.0));

    let mut w = Writer::default();
    w.u8(u8::from(d.threshold().is_some()))
        .f64(d.threshold().unwrap_or(0.0));
    sections.push((TAG_THRESHOLD, w.0));

    let mut out = Writer::default();
    out.bytes(MAGIC).u32(FORMAT_VERSION).u32(sections.len() as u32);
    for (tag, payload) in sections {
        out.bytes(tag).u64(payload.len() as u64).bytes(&payload);
    }
    out.0
}

pub fn decode(bytes: &[u8]) -> Result<ComboodDetector> {
    let mut r = Reader::new(bytes, "archive");
    if r.take(8)? != MAGIC {
        return Err(Error::CorruptArchive("not a .combood archive (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let count = r.u32()?;

    let mut config = None;
    let mut transform = None;
    let mut maha = None;
    let mut knn = None;
    let mut threshold = None;

    for _ in 0..count {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let len = usize::try_from(r.u64()?)
            .map_err(|_| Error::CorruptArchive("section length overflows".into()))?;
        let name = String::from_utf8_lossy(&tag).into_owned();
        let mut s = Reader::new(r.take(len)?, &name);
        let slot_filled = match &tag {
            TAG_CONFIG => config.replace(read_config(&mut s)?).is_some(),
            TAG_TRANSFORM => transform.replace(read_transform(&mut s)?).is_some(),
            TAG_MAHALANOBIS => maha.replace(read_mahalanobis(&mut s)?).is_some(),
            TAG_KNN => knn.replace(read_knn(&mut s)?).is_some(),
            TAG_THRESHOLD => threshold.replace(read_threshold(&mut s)?).is_some(),
            _ => return Err(Error::CorruptArchive(format!("unknown section {name:?}"))),
        };
        if slot_filled {
            return Err(Error::CorruptArchive(format!("duplicate section {name:?}")));
        }
        s.finish()?;
    }
    r.finish()?;

    let missing = |n: &str| Error::CorruptArchive(format!("missing section {n}"));
    ComboodDetector::from_parts(
        config.ok_or_else(|| missing("CONF"))?,
        transform.ok_or_else(|| missing("XFRM"))?,
        maha.ok_or_else(|| missing("MAHA"))?,
        knn.ok_or_else(|| missing("KNN_"))?,
        threshold.ok_or_else(|| missing("THRS"))?,
    )
}

fn read_config(r: &mut Reader) -> Result<DetectorConfig> {
    Ok(DetectorConfig {
        reg_c: r.f64()?,
        k: r.usize()?,
        target_tpr: r.f64()?,
        clamp_eps: r.f64()?,
    })
}

fn read_transform(r: &mut Reader) -> Result<FittedTransform> {
    let n = r.usize()?;
    let lambdas = r.f64s(n)?;
    let means = r.f64s(n)?;
    let stds = r.f64s(n)?;
    FittedTransform::from_parts(lambdas, means, stds)
}

fn read_mahalanobis(r: &mut Reader) -> Result<MahalanobisModel> {
    let dim = r.usize()?;
    let reg_c = r.f64()?;
    let logdet = r.f64()?;
    let mu = r.f64s(dim)?;
    let chol = r.f64s(dim.checked_mul(dim).ok_or_else(overflow)?)?;
    MahalanobisModel::from_parts(mu, reg_c, chol, logdet)
}

fn read_knn(r: &mut Reader) -> Result<KnnModel> {
    let rows = r.usize()?;
    let cols = r.usize()?;
    let k = r.usize()?;
    let values = r.f64s(rows.checked_mul(cols).ok_or_else(overflow)?)?;
    KnnModel::build(FeatureMatrix::new(rows, cols, values)?, k)
}

fn read_threshold(r: &mut Reader) -> Result<Option<f64>> {
    let present = r.u8()?;
    let value = r.f64()?;
    match present {
        0 => Ok(None),
        1 => Ok(Some(value)),
        other => Err(Error::CorruptArchive(format!("bad threshold flag {other}"))),
    }
}

fn overflow() -> Error {
    Error::CorruptArchive("dimension overflows".into())
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.extend_from_slice(b);
        self
    }
    fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }
    fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }
    fn f64s(&mut self, vs: &[f64]) -> &mut Self {
        vs.iter().for_each(|&v| {
            self.f64(v);
        });
        self
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: String,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], what: &str) -> Self {
        Self {
            buf,
            pos: 0,
            what: what.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Truncated(format!(
                "{} needs {n} more bytes at offset {}, only {} left",
                self.what,
                self.pos,
                self.buf.len() - self.pos
            ))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| overflow())
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(overflow)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::CorruptArchive(format!(
                "{} has {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_detector() -> ComboodDetector {
        let extrema: Vec<[f64; 4]> = (0..10)
            .map(|i| {
                let t = i as f64;
                [t.sin(), (1.3 * t).cos() + 2.0, t * 0.1 - 0.4, (t * 0.7).sin() * 3.0]
            })
            .collect();
        let embed: Vec<[f64; 3]> = (0..10)
            .map(|i| {
                let t = i as f64;
                [1.0 + t.cos(), 0.5 * t, 2.0 - t.sin()]
            })
            .collect();
        let cfg = DetectorConfig {
            k: 3,
            ..Default::default()
        };
        let mut d = ComboodDetector::fit(
            &FeatureMatrix::from_rows(&extrema).unwrap(),
            &FeatureMatrix::from_rows(&embed).unwrap(),
            cfg,
        )
        .unwrap();
        d.set_threshold(Some(-4.25));
        d
    }

    #[test]
    fn round_trip_is_exact() {
        let d = small_detector();
        let back = decode(&encode(&d)).unwrap();
        assert_eq!(back, d);
        let probe = ([0.3, 2.1, 0.0, -1.0], [0.2, 0.9, 1.0]);
        assert_eq!(
            back.score(&probe.0, &probe.1).unwrap(),
            d.score(&probe.0, &probe.1).unwrap()
        );
    }

    #[test]
    fn version_99_is_rejected() {
        let mut bytes = encode(&small_detector());
        bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(Error::VersionMismatch { found: 99, .. })
        ));
    }

    #[test]
    fn every_truncation_fails_cleanly() {
        let bytes = encode(&small_detector());
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut]).is_err(), "prefix of {cut} bytes decoded");
        }
    }

    #[test]
    fn bad_magic_and_trailing_bytes() {
        let mut bytes = encode(&small_detector());
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(Error::CorruptArchive(_))));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::CorruptArchive(_))));
    }

    #[test]
    fn inconsistent_dimensions_are_rejected() {
        let d = small_detector();
        // a transform of the wrong width paired with the original Mahalanobis model
        let t = FittedTransform::from_parts(vec![1.0; 3], vec![0.0; 3], vec![1.0; 3]).unwrap();
        let err = ComboodDetector::from_parts(
            *d.config(),
            t,
            d.mahalanobis().clone(),
            d.knn().clone(),
            None,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
