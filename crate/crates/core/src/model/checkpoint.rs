//! Versioned binary checkpoint container.
//!
//! ```text
//! magic        8 bytes   "POLPROP\0"
//! version      u32 LE
//! vocab count  u64 LE, then per token: u32 LE byte length + UTF-8 bytes (id order)
//! encoder      u8 (0 = mean, 1 = recurrent)
//! dim          u64 LE
//! n_params     u64 LE
//! params       n_params × f64 LE
//! checksum     32 bytes, SHA-256 of everything above
//! ```

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{
    EncoderKind, ModelError, ModelShape, Parameters, PolarityModel, Vocabulary, UNK_TOKEN,
};
use crate::io::write_atomic;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"POLPROP\0";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

/// Everything in a checkpoint except the parameter values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub vocab_size: usize,
    pub dim: usize,
    pub encoder: EncoderKind,
    pub num_params: usize,
}

pub fn write_checkpoint<T: Scalar>(
    model: &PolarityModel<T>,
    w: &mut dyn Write,
) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let tokens = model.vocab().tokens();
    buf.extend_from_slice(&(tokens.len() as u64).to_le_bytes());
    for t in tokens {
        buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.as_bytes());
    }
    buf.push(match model.encoder() {
        EncoderKind::MeanOfEmbeddings => 0,
        EncoderKind::SimpleRecurrent => 1,
    });
    buf.extend_from_slice(&(model.dim() as u64).to_le_bytes());
    let params = model.params().as_slice();
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for &v in params {
        buf.extend_from_slice(&v.to_f64_exact().to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    w.write_all(&buf)?;
    w.write_all(&digest)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.data.len() - self.pos < n {
            return Err(ModelError::Malformed("unexpected end of checkpoint".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize, ModelError> {
        usize::try_from(self.u64()?)
            .map_err(|_| ModelError::Malformed("size overflows usize".into()))
    }
}

fn parse<T: Scalar>(data: &[u8]) -> Result<(CheckpointHeader, PolarityModel<T>), ModelError> {
    if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    if data.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(ModelError::Malformed("checkpoint truncated".into()));
    }
    let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, stored) = data.split_at(data.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != stored {
        return Err(ModelError::CorruptChecksum);
    }

    let mut cur = Cursor {
        data: body,
        pos: 12,
    };
    let vocab_len = cur.usize()?;
    let mut tokens = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let n = cur.u32()? as usize;
        let bytes = cur.take(n)?;
        tokens.push(
            String::from_utf8(bytes.to_vec())
                .map_err(|_| ModelError::Malformed("vocabulary token is not UTF-8".into()))?,
        );
    }
    if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
        return Err(ModelError::Malformed(
            "vocabulary must start with the UNK token".into(),
        ));
    }
    let vocab = Vocabulary::from_tokens(tokens.into_iter().skip(1));
    if vocab.len() != vocab_len {
        return Err(ModelError::Malformed("duplicate vocabulary tokens".into()));
    }
    let encoder = match cur.take(1)?[0] {
        0 => EncoderKind::MeanOfEmbeddings,
        1 => EncoderKind::SimpleRecurrent,
        other => {
            return Err(ModelError::Malformed(format!(
                "unknown encoder tag {other}"
            )))
        }
    };
    let dim = cur.usize()?;
    let num_params = cur.usize()?;
    let shape = ModelShape {
        vocab_size: vocab_len,
        dim,
        encoder,
    };
    if shape.num_params() != num_params {
        return Err(ModelError::Malformed(format!(
            "header declares {num_params} parameters, shape implies {}",
            shape.num_params()
        )));
    }
    let raw = cur.take(
        num_params
            .checked_mul(8)
            .ok_or_else(|| ModelError::Malformed("size overflow".into()))?,
    )?;
    let values: Vec<T> = raw
        .chunks_exact(8)
        .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    if cur.pos != body.len() {
        return Err(ModelError::Malformed(
            "trailing bytes before checksum".into(),
        ));
    }
    let header = CheckpointHeader {
        version,
        vocab_size: vocab_len,
        dim,
        encoder,
        num_params,
    };
    let model = PolarityModel::from_parts(vocab, Parameters::from_values(shape, values)?)?;
    Ok((header, model))
}

pub fn read_checkpoint<T: Scalar>(
    r: &mut dyn Read,
) -> Result<(CheckpointHeader, PolarityModel<T>), ModelError> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    parse(&data)
}

pub fn save_checkpoint<T: Scalar>(model: &PolarityModel<T>, path: &Path) -> Result<(), ModelError> {
    write_atomic(path, |w| write_checkpoint(model, w))?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<PolarityModel<T>, ModelError> {
    let data = std::fs::read(path)?;
    parse(&data).map(|(_, m)| m)
}

/// Debug dump: a header comment, then one `name<TAB>value` line per parameter.
pub fn export_text<T: Scalar>(model: &PolarityModel<T>, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        w,
        "# encoder={} dim={} vocab={} params={}",
        model.encoder(),
        model.dim(),
        model.vocab().len(),
        model.params().len()
    )?;
    let params = model.params();
    for (i, v) in params.as_slice().iter().enumerate() {
        writeln!(w, "{}\t{:e}", params.describe(i), v.to_f64_exact())?;
    }
    Ok(())
}
