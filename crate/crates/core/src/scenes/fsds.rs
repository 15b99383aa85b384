//! Binary dataset files.
//!
//! Layout, all little-endian: magic `FSDS`, `u32` version, `u64` sample
//! count, `u32` rank, `rank` x `u32` dims, `u32` class count, `f32` features
//! and finally one `u16` label per sample.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FSDS_MAGIC: &[u8; 4] = b"FSDS";
pub const FSDS_VERSION: u32 = 1;

pub fn write_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.classes() > usize::from(u16::MAX) + 1 {
        return Err(Error::Data(format!("{} classes do not fit u16 labels", ds.classes())));
    }
    let dims = ds.sample_shape();
    let mut out = Vec::with_capacity(28 + 4 * dims.len() + ds.features().len() * 4 + ds.len() * 2);
    out.extend_from_slice(FSDS_MAGIC);
    out.extend_from_slice(&FSDS_VERSION.to_le_bytes());
    out.extend_from_slice(&(ds.len() as u64).to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(ds.classes() as u32).to_le_bytes());
    for &v in ds.features().data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &y in ds.labels() {
        out.extend_from_slice(&(y as u16).to_le_bytes());
    }
    Ok(out)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let bytes = write_dataset(ds)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(&fs::read(path)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset: self.pos as u64,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.buf.len() => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => self.fail(format!("truncated while reading {what}")),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn read_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != FSDS_MAGIC {
        r.pos = 0;
        return r.fail("bad magic, expected \"FSDS\"");
    }
    let version = r.u32("version")?;
    if version != FSDS_VERSION {
        r.pos -= 4;
        return r.fail(format!("unsupported version {version}"));
    }
    let n = r.u64("sample count")?;
    if n == 0 {
        r.pos -= 8;
        return r.fail("file holds no samples");
    }
    let rank = r.u32("rank")?;
    if rank == 0 {
        r.pos -= 4;
        return r.fail("samples have no feature dimensions");
    }
    let mut shape = vec![n as usize];
    for _ in 0..rank {
        let d = r.u32("dims")?;
        if d == 0 {
            r.pos -= 4;
            return r.fail("zero-sized feature dimension");
        }
        shape.push(d as usize);
    }
    let classes = r.u32("class count")? as usize;
    if classes == 0 {
        r.pos -= 4;
        return r.fail("class count is zero");
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|c| c.checked_mul(4).is_some())
        .ok_or(Error::Format {
            offset: r.pos as u64,
            reason: "feature block size overflows".into(),
        })?;
    let raw = r.take(count * 4, "features")?;
    let data: Vec<f64> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        r.pos = r.pos - raw.len() + 4 * i;
        return r.fail("non-finite feature value");
    }
    let label_start = r.pos;
    let labels_raw = r.take(shape[0] * 2, "labels")?;
    let mut labels = Vec::with_capacity(shape[0]);
    for (i, c) in labels_raw.chunks_exact(2).enumerate() {
        let y = u16::from_le_bytes([c[0], c[1]]) as usize;
        if y >= classes {
            r.pos = label_start + 2 * i;
            return r.fail(format!("record {i} has label {y} >= {classes} classes"));
        }
        labels.push(y);
    }
    if r.pos != bytes.len() {
        return r.fail(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Dataset::new(Tensor::new(shape, data)?, labels, classes)
}
