//! Binary model container.
//!
//! All integers are little-endian `u32`, all reals little-endian IEEE-754
//! `f64`, matrices row-major (out × in):
//!
//! ```text
//! magic            4 bytes  "CCNM"
//! version          u32      1
//! k1, n1           u32, u32
//! batch_size       u32
//! encoder_hidden   u32
//! decoder_hidden   u32
//! normalization    u8       0 = per batch, 1 = frozen
//!   [frozen only]  n1 × f64 mean, n1 × f64 std
//! layer_count      u32      6 (3 encoder, then 3 decoder)
//! per layer:
//!   role           u8       0 = encoder, 1 = decoder
//!   activation     u8       0 = linear, 1 = relu
//!   out, in        u32, u32
//!   weights        out·in × f64
//!   bias           out × f64
//! checksum         u32      CRC-32 (IEEE) of every preceding byte
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, BatchStats, LayerParams, NeuralCodeModel, Normalization};
use crate::error::{CcnError, Result};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 4] = b"CCNM";
pub const MODEL_VERSION: u32 = 1;

struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn reals<T: Scalar>(&mut self, vals: impl IntoIterator<Item = T>) {
        for v in vals {
            self.buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(CcnError::ModelFormat("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn reals<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| CcnError::ModelFormat("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }
}

pub fn write_model<T: Scalar, W: Write>(model: &NeuralCodeModel<T>, mut out: W) -> Result<()> {
    let mut e = Encoder { buf: Vec::new() };
    e.buf.extend_from_slice(MODEL_MAGIC);
    e.u32(MODEL_VERSION as usize);
    e.u32(model.k1());
    e.u32(model.n1());
    e.u32(model.batch_size());
    e.u32(model.encoder_hidden());
    e.u32(model.decoder_hidden());
    match &model.normalization {
        Normalization::PerBatch => e.u8(0),
        Normalization::Frozen(s) => {
            e.u8(1);
            e.reals(s.mean.iter().copied());
            e.reals(s.std.iter().copied());
        }
    }
    e.u32(model.encoder.len() + model.decoder.len());
    for (role, layers) in [(0u8, &model.encoder), (1u8, &model.decoder)] {
        for l in layers {
            e.u8(role);
            e.u8(l.activation.tag());
            e.u32(l.out_dim());
            e.u32(l.in_dim());
            e.reals(l.weights.iter().copied());
            e.reals(l.bias.iter().copied());
        }
    }
    let crc = crc32fast::hash(&e.buf);
    e.buf.extend_from_slice(&crc.to_le_bytes());
    out.write_all(&e.buf)?;
    Ok(())
}

pub fn read_model<T: Scalar, R: Read>(mut input: R) -> Result<NeuralCodeModel<T>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        return Err(CcnError::ModelFormat("truncated file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if &body[..4] != MODEL_MAGIC {
        return Err(CcnError::ModelFormat("bad magic".into()));
    }
    if crc32fast::hash(body) != stored {
        return Err(CcnError::ModelFormat("checksum mismatch".into()));
    }
    let mut d = Decoder { bytes: body, pos: 4 };
    let version = d.u32()?;
    if version != MODEL_VERSION as usize {
        return Err(CcnError::ModelFormat(format!("unsupported version {version}")));
    }
    let k1 = d.u32()?;
    let n1 = d.u32()?;
    let batch_size = d.u32()?;
    let enc_hidden = d.u32()?;
    let dec_hidden = d.u32()?;
    if k1 == 0 || k1 > 16 {
        return Err(CcnError::ModelFormat(format!("k1 = {k1} unsupported")));
    }
    let normalization = match d.u8()? {
        0 => Normalization::PerBatch,
        1 => Normalization::Frozen(BatchStats {
            mean: Array1::from(d.reals::<T>(n1)?),
            std: Array1::from(d.reals::<T>(n1)?),
        }),
        t => return Err(CcnError::ModelFormat(format!("unknown normalization tag {t}"))),
    };
    let count = d.u32()?;
    if count != 6 {
        return Err(CcnError::ModelFormat(format!("expected 6 layers, found {count}")));
    }
    let mut encoder = Vec::new();
    let mut decoder = Vec::new();
    for _ in 0..count {
        let role = d.u8()?;
        let activation = Activation::from_tag(d.u8()?)
            .ok_or_else(|| CcnError::ModelFormat("unknown activation tag".into()))?;
        let out_dim = d.u32()?;
        let in_dim = d.u32()?;
        let weights = Array2::from_shape_vec((out_dim, in_dim), d.reals::<T>(out_dim * in_dim)?)
            .map_err(|e| CcnError::ModelFormat(e.to_string()))?;
        let bias = Array1::from(d.reals::<T>(out_dim)?);
        let layer = LayerParams { weights, bias, activation };
        match role {
            0 => encoder.push(layer),
            1 => decoder.push(layer),
            r => return Err(CcnError::ModelFormat(format!("unknown layer role {r}"))),
        }
    }
    if d.pos != body.len() {
        return Err(CcnError::ModelFormat("trailing bytes".into()));
    }
    let model = NeuralCodeModel::from_layers(k1, n1, batch_size, encoder, decoder, normalization)
        .map_err(|e| CcnError::ModelFormat(e.to_string()))?;
    if model.encoder_hidden() != enc_hidden || model.decoder_hidden() != dec_hidden {
        return Err(CcnError::ModelFormat("hidden widths disagree with header".into()));
    }
    Ok(model)
}

pub fn save_model<T: Scalar>(model: &NeuralCodeModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let f = File::create(path.as_ref())?;
    let mut w = BufWriter::new(f);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<NeuralCodeModel<T>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|source| CcnError::Unreadable { path: path.to_path_buf(), source })?;
    read_model(BufReader::new(f))
}
