//! Binary checkpoint format.
//!
//! ```text
//! SSLNET01
//! format_version 1
//! config num_mics=8 frame_len=480 ...
//! meta epochs=20 seed=1 train_loss=... val_loss=...
//! tensor conv1.kernel 32x8x7 offset=0 bytes=7168
//! ...
//! end
//! <raw little-endian f32 data; offsets relative to the first data byte>
//! ```

use std::fs;
use std::path::Path;

use super::config::ModelConfig;
use super::net::Model;
use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::wav::write_atomic;

pub const MAGIC: &[u8; 8] = b"SSLNET01";
pub const FORMAT_VERSION: u32 = 1;

/// Provenance stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub seed: u64,
    pub train_loss: Option<f64>,
    pub val_loss: Option<f64>,
}

impl TrainingMeta {
    fn to_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"));
        format!(
            "meta epochs={} seed={} train_loss={} val_loss={}",
            self.epochs,
            self.seed,
            opt(self.train_loss),
            opt(self.val_loss)
        )
    }

    fn parse(fields: &str) -> Option<Self> {
        let mut meta = TrainingMeta::default();
        for f in fields.split_whitespace() {
            let (k, v) = f.split_once('=')?;
            let opt = |v: &str| -> Option<Option<f64>> {
                if v == "none" {
                    Some(None)
                } else {
                    v.parse().ok().map(Some)
                }
            };
            match k {
                "epochs" => meta.epochs = v.parse().ok()?,
                "seed" => meta.seed = v.parse().ok()?,
                "train_loss" => meta.train_loss = opt(v)?,
                "val_loss" => meta.val_loss = opt(v)?,
                _ => return None,
            }
        }
        Some(meta)
    }
}

/// Every stored tensor of `model` as `(name, shape, values)`, in file order.
fn named_tensors(model: &mut Model) -> Vec<(String, Vec<usize>, Vec<f32>)> {
    let names = model.param_names();
    let mut out: Vec<(String, Vec<usize>, Vec<f32>)> = names
        .into_iter()
        .zip(model.params_mut())
        .map(|(n, t)| (n, t.shape().to_vec(), t.data().to_vec()))
        .collect();
    for (prefix, bn) in model.batch_norms_mut() {
        let c = bn.channels();
        out.push((format!("{prefix}.running_mean"), vec![c], bn.running_mean.clone()));
        out.push((format!("{prefix}.running_var"), vec![c], bn.running_var.clone()));
    }
    out
}

pub fn encode_checkpoint(model: &mut Model, meta: &TrainingMeta) -> Vec<u8> {
    let tensors = named_tensors(model);
    let mut header = format!(
        "format_version {FORMAT_VERSION}\nconfig {}\n{}\n",
        model.config(),
        meta.to_line()
    );
    let mut offset = 0usize;
    for (name, shape, data) in &tensors {
        let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
        let bytes = data.len() * 4;
        header.push_str(&format!(
            "tensor {name} {} offset={offset} bytes={bytes}\n",
            dims.join("x")
        ));
        offset += bytes;
    }
    header.push_str("end\n");

    let mut out = Vec::with_capacity(MAGIC.len() + header.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(header.as_bytes());
    for (_, _, data) in &tensors {
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    bytes: usize,
}

/// Parses a checkpoint; nothing is returned unless every tensor loaded.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Model, TrainingMeta)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(0, "missing SSLNET01 magic"));
    }
    let mut pos = MAGIC.len();
    let next_line = |pos: &mut usize| -> Result<(u64, String)> {
        let start = *pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(start as u64, "header truncated"))?;
        let line = std::str::from_utf8(&bytes[start..start + end])
            .map_err(|_| Error::format(start as u64, "header is not UTF-8"))?
            .to_string();
        *pos = start + end + 1;
        Ok((start as u64, line))
    };

    let (at, line) = next_line(&mut pos)?;
    let version: u32 = line
        .strip_prefix("format_version ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::format(at, "expected `format_version`"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (at, line) = next_line(&mut pos)?;
    let cfg: ModelConfig = line
        .strip_prefix("config ")
        .ok_or_else(|| Error::format(at, "expected `config`"))?
        .parse()
        .map_err(|e| Error::format(at, format!("bad config: {e}")))?;
    let (at, line) = next_line(&mut pos)?;
    let meta = line
        .strip_prefix("meta ")
        .and_then(TrainingMeta::parse)
        .ok_or_else(|| Error::format(at, "expected `meta`"))?;

    let mut entries = Vec::new();
    loop {
        let (at, line) = next_line(&mut pos)?;
        if line == "end" {
            break;
        }
        let bad = || Error::format(at, format!("bad tensor line `{line}`"));
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "tensor" {
            return Err(bad());
        }
        let shape: Vec<usize> = parts[2]
            .split('x')
            .map(|d| d.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let offset = parts[3].strip_prefix("offset=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let nbytes: usize = parts[4].strip_prefix("bytes=").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if nbytes != shape.iter().product::<usize>() * 4 {
            return Err(Error::format(at, format!("tensor {} byte count does not match shape", parts[1])));
        }
        entries.push(TensorEntry {
            name: parts[1].to_string(),
            shape,
            offset,
            bytes: nbytes,
        });
    }
    let data_start = pos;

    let mut model = Model::build(&cfg, 0).map_err(|e| Error::format(0, format!("bad config: {e}")))?;
    let expected = named_tensors(&mut model);
    if expected.len() != entries.len() {
        return Err(Error::format(
            data_start as u64,
            format!("{} tensors stored, architecture needs {}", entries.len(), expected.len()),
        ));
    }
    let mut values = Vec::with_capacity(entries.len());
    for ((name, shape, _), e) in expected.iter().zip(&entries) {
        if *name != e.name || *shape != e.shape {
            return Err(Error::format(
                data_start as u64,
                format!("tensor `{}` {:?} does not match expected `{name}` {shape:?}", e.name, e.shape),
            ));
        }
        let start = data_start + e.offset;
        let end = start + e.bytes;
        if end > bytes.len() {
            return Err(Error::format(
                bytes.len() as u64,
                format!("data truncated inside tensor `{}` (needs bytes up to {end})", e.name),
            ));
        }
        values.push(
            bytes[start..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect::<Vec<f32>>(),
        );
    }

    let n_params = model.param_names().len();
    let mut it = values.into_iter();
    for (p, v) in model.params_mut().into_iter().zip(it.by_ref().take(n_params)) {
        *p = Tensor::from_vec(&p.shape().to_vec(), v)?;
    }
    for (_, bn) in model.batch_norms_mut() {
        bn.running_mean = it.next().expect("count checked");
        bn.running_var = it.next().expect("count checked");
    }
    Ok((model, meta))
}

pub fn save_checkpoint(model: &mut Model, meta: &TrainingMeta, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(model, meta))
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, TrainingMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
