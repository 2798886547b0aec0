//! Versioned binary checkpoints: a header (magic, version, dims, language
//! tags) followed by named parameter blocks of little-endian f64 with
//! per-block length prefixes, sealed by a SHA-256 digest so truncation or
//! corruption is detected instead of silently misloading.

use crate::data::LanguageTag;
use crate::error::{Error, Result};
use crate::model::{AlignmentLayer, LstmEncoder, ModelDims, ModelParams};
use crate::numcore::Matrix;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"GRND";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn save_model(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(params);
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    decode(&bytes)
}

fn encode(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(params.dims.textual as u32).to_le_bytes());
    out.extend_from_slice(&(params.dims.grounded as u32).to_le_bytes());
    out.extend_from_slice(&(params.dims.hidden as u32).to_le_bytes());
    let langs = params.languages();
    out.extend_from_slice(&(langs.len() as u32).to_le_bytes());
    for lang in &langs {
        write_str(&mut out, lang.as_str());
    }
    let named = params.named_params();
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, matrix) in named {
        write_str(&mut out, &name);
        out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(matrix.cols() as u32).to_le_bytes());
        out.extend_from_slice(&(matrix.numel() as u64).to_le_bytes());
        for v in matrix.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

fn decode(bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < DIGEST_LEN {
        return Err(Error::Checkpoint("file too short for a digest".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let expected = Sha256::digest(body);
    if digest != expected.as_slice() {
        return Err(Error::Checkpoint(
            "digest mismatch: file is corrupted or truncated".into(),
        ));
    }

    let mut r = Reader { bytes: body, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic: not a model checkpoint".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}, expected {VERSION}"
        )));
    }
    let dims = ModelDims {
        textual: r.u32()? as usize,
        grounded: r.u32()? as usize,
        hidden: r.u32()? as usize,
    };
    let n_langs = r.u32()? as usize;
    let mut langs = Vec::with_capacity(n_langs);
    for _ in 0..n_langs {
        langs.push(LanguageTag::new(r.string()?));
    }

    let n_blocks = r.u32()? as usize;
    let mut blocks: BTreeMap<String, Matrix> = BTreeMap::new();
    for _ in 0..n_blocks {
        let name = r.string()?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let count = r.u64()? as usize;
        if count != rows * cols {
            return Err(Error::Checkpoint(format!(
                "block '{name}' declares {count} values for a {rows}x{cols} matrix"
            )));
        }
        let raw = r.take(count * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let matrix = Matrix::from_vec(rows, cols, data)
            .map_err(|e| Error::Checkpoint(format!("block '{name}': {e}")))?;
        blocks.insert(name, matrix);
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after parameter blocks".into()));
    }

    let mut take = |name: &str, shape: (usize, usize)| -> Result<Matrix> {
        let m = blocks
            .remove(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter block '{name}'")))?;
        if m.shape() != shape {
            return Err(Error::Checkpoint(format!(
                "block '{name}' has shape {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
        Ok(m)
    };

    let alignment = AlignmentLayer::new(take("alignment", (dims.textual, dims.grounded))?);
    let mut encoders = BTreeMap::new();
    for lang in &langs {
        let (c, h) = (dims.grounded, dims.hidden);
        let enc = LstmEncoder {
            language: lang.clone(),
            w_input: take(&format!("{lang}.w_input"), (c, h))?,
            w_forget: take(&format!("{lang}.w_forget"), (c, h))?,
            w_output: take(&format!("{lang}.w_output"), (c, h))?,
            w_cell: take(&format!("{lang}.w_cell"), (c, h))?,
            u_input: take(&format!("{lang}.u_input"), (h, h))?,
            u_forget: take(&format!("{lang}.u_forget"), (h, h))?,
            u_output: take(&format!("{lang}.u_output"), (h, h))?,
            u_cell: take(&format!("{lang}.u_cell"), (h, h))?,
            b_input: take(&format!("{lang}.b_input"), (1, h))?,
            b_forget: take(&format!("{lang}.b_forget"), (1, h))?,
            b_output: take(&format!("{lang}.b_output"), (1, h))?,
            b_cell: take(&format!("{lang}.b_cell"), (1, h))?,
        };
        encoders.insert(lang.clone(), enc);
    }
    if !blocks.is_empty() {
        let extra: Vec<String> = blocks.keys().cloned().collect();
        return Err(Error::Checkpoint(format!(
            "unexpected parameter blocks: {}",
            extra.join(", ")
        )));
    }
    Ok(ModelParams {
        dims,
        alignment,
        encoders,
    })
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::Checkpoint("non-UTF-8 string in header".into()))
    }
}
