//! Binary field ensembles.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header  "GMCF" | version u32 | d u32 | N u32 | level u32 | family u32 | seed u64
//! records N^d f64 values per replica, row-major site order
//! footer  record offsets u64 x count | count u64 | "GMCI"
//! ```
//!
//! A file holding a single record is a per-replica dump; the footer is always
//! written so both forms read the same way.

use std::io::{Read, Seek, SeekFrom, Write};

use crate::error::{Error, Result};
use crate::kernels::Family;

const MAGIC: &[u8; 4] = b"GMCF";
const INDEX_MAGIC: &[u8; 4] = b"GMCI";
pub const VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 * 5 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleHeader {
    pub d: u32,
    pub resolution: u32,
    pub level: u32,
    pub family: Family,
    pub seed: u64,
}

impl EnsembleHeader {
    pub fn sites(&self) -> usize {
        (self.resolution as usize).pow(self.d)
    }
}

pub struct EnsembleWriter<W: Write + Seek> {
    inner: W,
    header: EnsembleHeader,
    offsets: Vec<u64>,
}

impl<W: Write + Seek> EnsembleWriter<W> {
    pub fn new(mut inner: W, header: EnsembleHeader) -> Result<Self> {
        inner.write_all(MAGIC)?;
        for v in [VERSION, header.d, header.resolution, header.level, header.family.code()] {
            inner.write_all(&v.to_le_bytes())?;
        }
        inner.write_all(&header.seed.to_le_bytes())?;
        Ok(Self { inner, header, offsets: Vec::new() })
    }

    pub fn push(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.header.sites() {
            return Err(Error::LatticeMismatch);
        }
        self.offsets.push(self.inner.stream_position()?);
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        for off in &self.offsets {
            self.inner.write_all(&off.to_le_bytes())?;
        }
        self.inner.write_all(&(self.offsets.len() as u64).to_le_bytes())?;
        self.inner.write_all(INDEX_MAGIC)?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub struct EnsembleReader<R: Read + Seek> {
    inner: R,
    header: EnsembleHeader,
    offsets: Vec<u64>,
}

impl<R: Read + Seek> EnsembleReader<R> {
    pub fn open(mut inner: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        inner.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a field ensemble (bad magic)".into()));
        }
        let version = read_u32(&mut inner)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported ensemble version {version}")));
        }
        let d = read_u32(&mut inner)?;
        let resolution = read_u32(&mut inner)?;
        let level = read_u32(&mut inner)?;
        let family = Family::from_code(read_u32(&mut inner)?)?;
        let seed = read_u64(&mut inner)?;
        if d != 1 && d != 2 {
            return Err(Error::Format(format!("dimension {d} in header")));
        }
        let header = EnsembleHeader { d, resolution, level, family, seed };

        let end = inner.seek(SeekFrom::End(0))?;
        if end < HEADER_LEN + 12 {
            return Err(Error::Format("truncated ensemble".into()));
        }
        inner.seek(SeekFrom::End(-12))?;
        let count = read_u64(&mut inner)?;
        inner.read_exact(&mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(Error::Format("missing index footer".into()));
        }
        let record = header.sites() as u64 * 8;
        let index_start = HEADER_LEN + count * record;
        if index_start + count * 8 + 12 != end {
            return Err(Error::Format("record count does not match file size".into()));
        }
        inner.seek(SeekFrom::Start(index_start))?;
        let offsets = (0..count).map(|_| read_u64(&mut inner)).collect::<Result<Vec<_>>>()?;
        for (i, &off) in offsets.iter().enumerate() {
            if off != HEADER_LEN + i as u64 * record {
                return Err(Error::Format(format!("bad offset for record {i}")));
            }
        }
        Ok(Self { inner, header, offsets })
    }

    pub fn header(&self) -> &EnsembleHeader {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn record(&mut self, i: usize) -> Result<Vec<f64>> {
        let off = *self.offsets.get(i).ok_or_else(|| Error::Format(format!("no record {i}")))?;
        self.inner.seek(SeekFrom::Start(off))?;
        let mut buf = vec![0u8; self.header.sites() * 8];
        self.inner.read_exact(&mut buf)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn round_trip() {
        let header = EnsembleHeader { d: 2, resolution: 3, level: 5, family: Family::ExactScale2D, seed: 42 };
        let mut w = EnsembleWriter::new(Cursor::new(Vec::new()), header).unwrap();
        let recs: Vec<Vec<f64>> = (0..3).map(|r| (0..9).map(|i| r as f64 * 0.1 - i as f64).collect()).collect();
        for r in &recs {
            w.push(r).unwrap();
        }
        assert!(w.push(&[1.0]).is_err());
        let bytes = w.finish().unwrap().into_inner();
        assert_eq!(&bytes[..4], b"GMCF");
        let mut rd = EnsembleReader::open(Cursor::new(bytes.clone())).unwrap();
        assert_eq!(*rd.header(), header);
        assert_eq!(rd.len(), 3);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(&rd.record(i).unwrap(), r);
        }
        let mut bad = bytes;
        let k = bad.len() - 1;
        bad[k] = b'X';
        assert!(EnsembleReader::open(Cursor::new(bad)).is_err());
    }
}
