//! Raw tensor container.
//!
//! Layout: the magic bytes `METN`, a version byte (1), the rank as a
//! little-endian `u32`, one little-endian `u32` per dimension, then the
//! payload as little-endian `f32` values in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"METN";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl RawTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::TensorFormat(format!("dims {dims:?} hold {n} values, payload has {}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |what: &str| Error::TensorFormat(what.to_string());
        let mut head = [0u8; 5];
        r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
        if &head[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        if head[4] != VERSION {
            return Err(Error::TensorFormat(format!("unsupported version {}", head[4])));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(|_| bad("truncated rank"))?;
        let rank = u32::from_le_bytes(word) as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut word).map_err(|_| bad("truncated dims"))?;
            dims.push(u32::from_le_bytes(word) as usize);
        }
        let n: usize = dims.iter().product();
        let mut payload = vec![0u8; 4 * n];
        r.read_exact(&mut payload).map_err(|_| bad("truncated payload"))?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(Self { dims, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_exact() {
        let t = RawTensor::new(vec![2, 1], vec![1.0, -2.5]).unwrap();
        let b = t.to_bytes();
        assert_eq!(&b[..4], b"METN");
        assert_eq!(b[4], 1);
        assert_eq!(&b[5..9], &2u32.to_le_bytes());
        assert_eq!(&b[9..13], &2u32.to_le_bytes());
        assert_eq!(&b[13..17], &1u32.to_le_bytes());
        assert_eq!(&b[17..21], &1.0f32.to_le_bytes());
        assert_eq!(&b[21..25], &(-2.5f32).to_le_bytes());
        assert_eq!(b.len(), 25);
    }

    #[test]
    fn rejects_garbage() {
        assert!(RawTensor::from_bytes(b"NOPE\x01").is_err());
        assert!(RawTensor::from_bytes(b"METN\x02\0\0\0\0").is_err());
        let mut b = RawTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap().to_bytes();
        b.pop();
        assert!(RawTensor::from_bytes(&b).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(dims in prop::collection::vec(1usize..5, 0..4), seed in any::<u32>()) {
            let n: usize = dims.iter().product();
            let data: Vec<f32> = (0..n).map(|i| (i as f32 + seed as f32).sin()).collect();
            let t = RawTensor::new(dims, data).unwrap();
            prop_assert_eq!(RawTensor::from_bytes(&t.to_bytes()).unwrap(), t);
        }
    }
}
