//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   8 bytes  "MMADENSE"
//! version u32      currently 1
//! layers  u32
//! per layer:
//!   inputs  u32
//!   outputs u32
//!   weights outputs*inputs f64, row-major
//!   bias    outputs f64
//! ```

use std::path::Path;

use super::model::{DenseModel, Layer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MMADENSE";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode(model: &DenseModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * model.num_params() + 8 * model.layers().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for l in model.layers() {
        out.extend_from_slice(&(l.inputs as u32).to_le_bytes());
        out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                message: format!("truncated checkpoint: need {n} more bytes"),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<DenseModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad checkpoint magic".into(),
        });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 8,
            message: format!("unsupported checkpoint version {version}"),
        });
    }
    let n = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let inputs = r.u32()? as usize;
        let outputs = r.u32()? as usize;
        let weights = (0..inputs * outputs)
            .map(|_| r.f64())
            .collect::<Result<Vec<_>>>()?;
        let bias = (0..outputs).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        layers.push(Layer::new(inputs, outputs, weights, bias)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            message: "trailing bytes after checkpoint".into(),
        });
    }
    DenseModel::new(layers)
}

pub fn save(model: &DenseModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<DenseModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
