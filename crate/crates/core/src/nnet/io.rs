use std::path::Path;

use super::{Dense, Mlp};
use crate::binio::{read_file, write_file, ByteReader};
use crate::error::Result;
use crate::linalg::Matrix;

pub const MODEL_MAGIC: &[u8; 4] = b"MLPB";
pub const MODEL_VERSION: u16 = 1;

pub fn model_to_bytes(model: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + model.parameter_count() * 8 + model.layers.len() * 8);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers.len() as u16).to_le_bytes());
    for l in &model.layers {
        out.extend_from_slice(&(l.output_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(l.input_dim() as u32).to_le_bytes());
        for v in l.w.as_slice().iter().chain(&l.b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn model_from_bytes(name: &str, bytes: &[u8]) -> Result<Mlp> {
    let mut r = ByteReader::new(name, bytes);
    let magic = r.take(4, "magic")?;
    if magic != MODEL_MAGIC {
        return Err(r.error_at(0, format!("bad magic {magic:02x?}, expected \"MLPB\"")));
    }
    let version = r.u16_le("version")?;
    if version != MODEL_VERSION {
        return Err(r.error_at(4, format!("unsupported version {version}")));
    }
    let count = r.u16_le("layer count")? as usize;
    if count == 0 {
        return Err(r.error_at(6, "model has no layers"));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.offset() as usize;
        let out = r.u32_le("layer rows")? as usize;
        let inp = r.u32_le("layer columns")? as usize;
        if out == 0 || inp == 0 {
            return Err(r.error_at(at, "zero-sized layer"));
        }
        let w = r.f64_vec(out * inp, "weights")?;
        let b = r.f64_vec(out, "biases")?;
        layers.push(Dense {
            w: Matrix::from_vec(out, inp, w)?,
            b,
        });
    }
    r.finish()?;
    Mlp::new(layers).map_err(|e| r.error(e.to_string()))
}

pub fn save_model(model: &Mlp, path: &Path) -> Result<()> {
    write_file(path, &model_to_bytes(model))
}

pub fn load_model(path: &Path) -> Result<Mlp> {
    model_from_bytes(&path.display().to_string(), &read_file(path)?)
}
