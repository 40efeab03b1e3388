//! Model checkpoint format.
//!
//! ```text
//! "TAPN" | u32 version | u32 layer count | layers...
//! layer := u32 tag, then
//!   1 dense:      u32 out, u32 in, f64 weights[out*in] (row-major), f64 bias[out]
//!   2 batch norm: u32 width, f64 gamma[w], beta[w], running_mean[w], running_var[w],
//!                 f64 epsilon, f64 momentum
//!   3 shrinkage:  f64 alpha
//!   4 dropout:    f64 rate
//! ```
//!
//! All integers and floats little-endian.

use std::fs;
use std::path::Path;

use super::layers::{BatchNormLayer, DenseLayer, DropoutLayer, ShrinkageLayer};
use super::network::{Layer, Network};
use super::tensor::Tensor2;
use crate::bytes::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TAPN";
pub const VERSION: u32 = 1;

const TAG_DENSE: u32 = 1;
const TAG_BATCH_NORM: u32 = 2;
const TAG_SHRINKAGE: u32 = 3;
const TAG_DROPOUT: u32 = 4;

pub fn encode(net: &Network) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.u32(net.layers.len() as u32);
    for layer in &net.layers {
        match layer {
            Layer::Dense(d) => {
                w.u32(TAG_DENSE);
                w.u32(d.outputs() as u32);
                w.u32(d.inputs() as u32);
                w.f64s(&d.weights.data);
                w.f64s(&d.bias);
            }
            Layer::BatchNorm(b) => {
                w.u32(TAG_BATCH_NORM);
                w.u32(b.width() as u32);
                w.f64s(&b.gamma);
                w.f64s(&b.beta);
                w.f64s(&b.running_mean);
                w.f64s(&b.running_var);
                w.f64(b.epsilon);
                w.f64(b.momentum);
            }
            Layer::Shrinkage(s) => {
                w.u32(TAG_SHRINKAGE);
                w.f64(s.alpha);
            }
            Layer::Dropout(d) => {
                w.u32(TAG_DROPOUT);
                w.f64(d.rate);
            }
        }
    }
    w.buf
}

pub fn decode(buf: &[u8]) -> Result<Network> {
    let mut r = Reader::new(buf);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let count = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let layer = match r.u32("layer tag")? {
            TAG_DENSE => {
                let out = r.u32("dense rows")? as usize;
                let inp = r.u32("dense cols")? as usize;
                let weights = r.f64s(out * inp, "dense weights")?;
                let bias = r.f64s(out, "dense bias")?;
                Layer::Dense(DenseLayer::new(Tensor2::from_vec(out, inp, weights)?, bias)?)
            }
            TAG_BATCH_NORM => {
                let w = r.u32("batch-norm width")? as usize;
                let mut bn = BatchNormLayer::new(w, 1e-5, 0.9);
                bn.gamma = r.f64s(w, "gamma")?;
                bn.beta = r.f64s(w, "beta")?;
                bn.running_mean = r.f64s(w, "running mean")?;
                bn.running_var = r.f64s(w, "running var")?;
                bn.epsilon = r.f64("epsilon")?;
                bn.momentum = r.f64("momentum")?;
                Layer::BatchNorm(bn)
            }
            TAG_SHRINKAGE => Layer::Shrinkage(ShrinkageLayer { alpha: r.f64("alpha")? }),
            TAG_DROPOUT => {
                let rate = r.f64("dropout rate")?;
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Corrupt(format!("dropout rate {rate}")));
                }
                Layer::Dropout(DropoutLayer::new(rate))
            }
            tag => return Err(Error::Corrupt(format!("unknown layer tag {tag} at layer {i}"))),
        };
        layers.push(layer);
    }
    r.finish()?;
    Network::from_layers(layers).map_err(|e| Error::Corrupt(e.to_string()))
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    decode(&buf)
}
