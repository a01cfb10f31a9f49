//! Named-tensor container file.
//!
//! Layout (all integers little-endian):
//!   magic "MUGP" | version u32 | count u64
//!   then per tensor:
//!   name_len u32 | name bytes (utf-8) | rank u32 (= 2) | dims u64 x rank |
//!   values f64 x (rows * cols), row-major
//!
//! Round trips are bit-exact.

use crate::error::{MugError, Result};
use crate::neural::tensor::Tensor;
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MUGP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// An ordered collection of named tensors. Used for model parameters,
/// gradients (same names and shapes as the parameters), and optimizer state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NamedTensors {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

/// One gradient tensor per parameter tensor, congruent shapes, same order.
pub type GradientSet = NamedTensors;

impl NamedTensors {
    pub fn new() -> Self {
        NamedTensors::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.names.push(name.into());
        self.tensors.push(tensor);
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter())
    }

    /// Check shape congruence against another set (for gradient sets and
    /// optimizer state).
    pub fn congruent_with(&self, other: &NamedTensors) -> bool {
        self.len() == other.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.shape() == b.shape())
            && self.names == other.names
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (name, t) in self.iter() {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&2u32.to_le_bytes())?;
            w.write_all(&(t.rows() as u64).to_le_bytes())?;
            w.write_all(&(t.cols() as u64).to_le_bytes())?;
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<NamedTensors> {
        let bad = |msg: &str| MugError::Format(format!("checkpoint: {msg}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("wrong magic bytes"));
        }
        let mut u32buf = [0u8; 4];
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u32buf).map_err(|_| bad("truncated version"))?;
        let version = u32::from_le_bytes(u32buf);
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        r.read_exact(&mut u64buf).map_err(|_| bad("truncated count"))?;
        let count = u64::from_le_bytes(u64buf) as usize;

        let mut out = NamedTensors::new();
        for _ in 0..count {
            r.read_exact(&mut u32buf).map_err(|_| bad("truncated name length"))?;
            let name_len = u32::from_le_bytes(u32buf) as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes).map_err(|_| bad("truncated name"))?;
            let name = String::from_utf8(name_bytes).map_err(|_| bad("name not utf-8"))?;
            r.read_exact(&mut u32buf).map_err(|_| bad("truncated rank"))?;
            let rank = u32::from_le_bytes(u32buf);
            if rank != 2 {
                return Err(bad(&format!("unsupported rank {rank}")));
            }
            r.read_exact(&mut u64buf).map_err(|_| bad("truncated dims"))?;
            let rows = u64::from_le_bytes(u64buf) as usize;
            r.read_exact(&mut u64buf).map_err(|_| bad("truncated dims"))?;
            let cols = u64::from_le_bytes(u64buf) as usize;
            let mut data = vec![0.0f64; rows * cols];
            for v in &mut data {
                r.read_exact(&mut u64buf).map_err(|_| bad("truncated values"))?;
                *v = f64::from_le_bytes(u64buf);
            }
            out.push(name, Tensor::from_vec(rows, cols, data)?);
        }
        Ok(out)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| MugError::io(path, e))?;
        self.write(std::io::BufWriter::new(f))
            .map_err(|e| MugError::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<NamedTensors> {
        let f = std::fs::File::open(path).map_err(|e| MugError::io(path, e))?;
        NamedTensors::read(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut set = NamedTensors::new();
        set.push(
            "layer.w",
            Tensor::from_vec(2, 3, vec![1.5, -2.25, 1e-300, 0.1 + 0.2, f64::MIN_POSITIVE, 7.0])
                .unwrap(),
        );
        set.push("layer.b", Tensor::from_vec(1, 3, vec![0.0, -0.0, 3.125]).unwrap());
        let mut buf = Vec::new();
        set.write(&mut buf).unwrap();
        let back = NamedTensors::read(buf.as_slice()).unwrap();
        assert_eq!(set.len(), back.len());
        for ((n1, t1), (n2, t2)) in set.iter().zip(back.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.shape(), t2.shape());
            for (a, b) in t1.data().iter().zip(t2.data()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_wrong_magic() {
        let buf = b"NOPE\x01\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00".to_vec();
        assert!(NamedTensors::read(buf.as_slice()).is_err());
    }
}
