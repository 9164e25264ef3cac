//! Binary weight checkpoints.
//!
//! Layout: 5-byte magic `RBCW1`, a version byte, a length-prefixed JSON
//! header (model kind + architecture config), then each parameter tensor as
//! a length-prefixed name, a shape, and little-endian f32 values. Loading
//! rebuilds the architecture from the header and requires every tensor to
//! match by name and shape, so a round trip is bit-exact.

use super::model::{CnnModel, NetworkConfig, SiameseModel};
use super::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 5] = b"RBCW1";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a weight checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u8),
    #[error("malformed header: {0}")]
    BadHeader(#[from] serde_json::Error),
    #[error("checkpoint holds a {found} model, expected {expected}")]
    KindMismatch { expected: String, found: String },
    #[error("tensor mismatch: {0}")]
    TensorMismatch(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    config: NetworkConfig,
    seed: u64,
}

fn write_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn write_store<S: Scalar>(
    w: &mut impl Write,
    kind: &str,
    config: &NetworkConfig,
    seed: u64,
    params: &[super::layers::Param<S>],
) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    let header = serde_json::to_vec(&Header {
        kind: kind.to_string(),
        config: config.clone(),
        seed,
    })?;
    write_u32(w, header.len() as u32)?;
    w.write_all(&header)?;
    write_u32(w, params.len() as u32)?;
    for p in params {
        write_u32(w, p.name.len() as u32)?;
        w.write_all(p.name.as_bytes())?;
        write_u32(w, p.shape.len() as u32)?;
        for &dim in &p.shape {
            write_u32(w, dim as u32)?;
        }
        write_u32(w, p.values.len() as u32)?;
        for &v in &p.values {
            w.write_all(&(v.to_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<Header, CheckpointError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != VERSION {
        return Err(CheckpointError::BadVersion(version[0]));
    }
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(serde_json::from_slice(&buf)?)
}

fn read_into_store<S: Scalar>(
    r: &mut impl Read,
    params: &mut [super::layers::Param<S>],
) -> Result<(), CheckpointError> {
    let count = read_u32(r)? as usize;
    if count != params.len() {
        return Err(CheckpointError::TensorMismatch(format!(
            "expected {} tensors, found {count}",
            params.len()
        )));
    }
    for p in params.iter_mut() {
        let name_len = read_u32(r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8_lossy(&name).into_owned();
        if name != p.name {
            return Err(CheckpointError::TensorMismatch(format!(
                "expected {}, found {name}",
                p.name
            )));
        }
        let shape_len = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(shape_len);
        for _ in 0..shape_len {
            shape.push(read_u32(r)? as usize);
        }
        if shape != p.shape {
            return Err(CheckpointError::TensorMismatch(format!(
                "{name}: shape {shape:?} does not match {:?}",
                p.shape
            )));
        }
        let len = read_u32(r)? as usize;
        if len != p.values.len() {
            return Err(CheckpointError::TensorMismatch(format!(
                "{name}: {len} values for {} slots",
                p.values.len()
            )));
        }
        let mut bytes = vec![0u8; len * 4];
        r.read_exact(&mut bytes)?;
        for (slot, chunk) in p.values.iter_mut().zip(bytes.chunks_exact(4)) {
            *slot = S::from_f64(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
    }
    Ok(())
}

pub fn save_siamese<S: Scalar>(
    path: &Path,
    model: &SiameseModel<S>,
    seed: u64,
) -> Result<(), CheckpointError> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_store(&mut file, "siamese", &model.config, seed, &model.store.params)
}

pub fn load_siamese<S: Scalar>(path: &Path) -> Result<SiameseModel<S>, CheckpointError> {
    let mut file = io::BufReader::new(std::fs::File::open(path)?);
    let header = read_header(&mut file)?;
    if header.kind != "siamese" {
        return Err(CheckpointError::KindMismatch {
            expected: "siamese".into(),
            found: header.kind,
        });
    }
    let mut model = SiameseModel::new(header.config, header.seed);
    read_into_store(&mut file, &mut model.store.params)?;
    Ok(model)
}

pub fn save_cnn<S: Scalar>(
    path: &Path,
    model: &CnnModel<S>,
    seed: u64,
) -> Result<(), CheckpointError> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_store(&mut file, "cnn", &model.config, seed, &model.store.params)
}

pub fn load_cnn<S: Scalar>(path: &Path) -> Result<CnnModel<S>, CheckpointError> {
    let mut file = io::BufReader::new(std::fs::File::open(path)?);
    let header = read_header(&mut file)?;
    if header.kind != "cnn" {
        return Err(CheckpointError::KindMismatch {
            expected: "cnn".into(),
            found: header.kind,
        });
    }
    let mut model = CnnModel::new(header.config, header.seed);
    read_into_store(&mut file, &mut model.store.params)?;
    Ok(model)
}
