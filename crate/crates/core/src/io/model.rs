//! Versioned model files.
//!
//! Layout: the magic bytes `FSVM`, one version byte, the payload length as a
//! little-endian `u64`, a JSON payload, then the SHA-256 digest of the
//! payload. Floats are written with round-trip precision, so a loaded model
//! reproduces decision values bit for bit.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::func::SamplingGrid;
use crate::kernel::FunctionalKernel;
use crate::svm::{SupportVector, SvmModel, TrainingMeta};

pub const MAGIC: &[u8; 4] = b"FSVM";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8;
const DIGEST_LEN: usize = 32;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    kernel: FunctionalKernel,
    abscissae: Vec<f64>,
    weights: Vec<f64>,
    support: Vec<SupportVector>,
    bias: f64,
    meta: TrainingMeta,
}

pub fn encode_model(model: &SvmModel) -> Result<Vec<u8>> {
    let doc = ModelDocument {
        kernel: model.kernel().clone(),
        abscissae: model.grid().abscissae().to_vec(),
        weights: model.grid().weights().to_vec(),
        support: model.support().to_vec(),
        bias: model.bias(),
        meta: model.meta().clone(),
    };
    let payload = serde_json::to_vec(&doc).map_err(|e| Error::Serialization(e.to_string()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&Sha256::digest(&payload));
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<SvmModel> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::Integrity("missing FSVM magic header".into()));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Integrity("truncated header".into()));
    }
    let len = u64::from_le_bytes(bytes[5..HEADER_LEN].try_into().expect("8 bytes")) as usize;
    let expected = HEADER_LEN
        .checked_add(len)
        .and_then(|n| n.checked_add(DIGEST_LEN))
        .ok_or_else(|| Error::Integrity("payload length overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Integrity(format!(
            "file is {} bytes, header announces {expected}",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + len];
    if Sha256::digest(payload).as_slice() != &bytes[HEADER_LEN + len..] {
        return Err(Error::Integrity("payload digest mismatch".into()));
    }
    let doc: ModelDocument =
        serde_json::from_slice(payload).map_err(|e| Error::Serialization(e.to_string()))?;
    let grid = Arc::new(SamplingGrid::with_weights(doc.abscissae, doc.weights)?);
    if let Some(i) = doc.support.iter().position(|s| s.features.is_empty()) {
        return Err(Error::Integrity(format!("support vector {i} has no features")));
    }
    SvmModel::from_parts(&doc.kernel, grid, doc.support, doc.bias, doc.meta)
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<()> {
    atomic_write(path, &encode_model(model)?)
}

pub fn load_model(path: &Path) -> Result<SvmModel> {
    decode_model(&std::fs::read(path)?)
}

/// Whether `bytes` starts like a model file.
pub fn is_model_file(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}
