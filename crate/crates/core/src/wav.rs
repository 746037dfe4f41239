//! Canonical 16-bit PCM WAV reading and writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const PCM_FORMAT: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavSpec {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
}

impl WavSpec {
    pub fn pcm16(sample_rate: u32, channels: u16) -> Self {
        Self {
            sample_rate,
            channels,
            bits_per_sample: 16,
        }
    }
}

/// Outcome of a write; `clipped` counts samples clamped into [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    pub clipped: usize,
}

/// Rounds half away from zero after clamping to the 16-bit range; the flag
/// reports whether clamping happened.
pub fn quantize(x: f32) -> (i16, bool) {
    let clipped = !(x.abs() <= 1.0);
    if x.is_nan() {
        return (0, true);
    }
    let q = (x as f64 * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64);
    (q as i16, clipped)
}

pub fn dequantize(q: i16) -> f32 {
    q as f32 / 32768.0
}

/// Serializes channels (equal lengths) into a canonical 44-byte-header file.
pub fn encode_wav(spec: &WavSpec, channels: &[Vec<f32>]) -> Result<(Vec<u8>, WriteReport)> {
    if spec.bits_per_sample != 16 {
        return Err(Error::wav("fmt ", format!("unsupported bit depth {}", spec.bits_per_sample)));
    }
    if channels.len() != spec.channels as usize || channels.is_empty() {
        return Err(Error::Dimension(format!(
            "spec declares {} channels, got {}",
            spec.channels,
            channels.len()
        )));
    }
    let frames = channels[0].len();
    if channels.iter().any(|c| c.len() != frames) {
        return Err(Error::Dimension("channels differ in length".into()));
    }
    let block_align = spec.channels as u32 * 2;
    let data_bytes = frames as u64 * block_align as u64;
    if data_bytes > u32::MAX as u64 - 36 {
        return Err(Error::wav("data", "audio too long for a RIFF file"));
    }
    let data_bytes = data_bytes as u32;

    let mut out = Vec::with_capacity(44 + data_bytes as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&spec.channels.to_le_bytes());
    out.extend_from_slice(&spec.sample_rate.to_le_bytes());
    out.extend_from_slice(&(spec.sample_rate * block_align).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    let mut report = WriteReport::default();
    for t in 0..frames {
        for ch in channels {
            let (q, clipped) = quantize(ch[t]);
            report.clipped += clipped as usize;
            out.extend_from_slice(&q.to_le_bytes());
        }
    }
    Ok((out, report))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a PCM16 file into per-channel samples scaled by 1/32768.
pub fn decode_wav(bytes: &[u8]) -> Result<(WavSpec, Vec<Vec<f32>>)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::wav("RIFF", "missing RIFF/WAVE signature"));
    }
    let mut pos = 12;
    let mut spec: Option<WavSpec> = None;
    loop {
        if pos + 8 > bytes.len() {
            let chunk = if spec.is_none() { "fmt " } else { "data" };
            return Err(Error::wav(chunk, format!("chunk missing (file ends at byte {pos})")));
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(Error::wav("fmt ", "chunk truncated"));
                }
                let format = u16_at(bytes, body);
                if format != PCM_FORMAT {
                    return Err(Error::wav("fmt ", format!("format tag {format} is not PCM")));
                }
                let channels = u16_at(bytes, body + 2);
                let sample_rate = u32_at(bytes, body + 4);
                let bits = u16_at(bytes, body + 14);
                if bits != 16 {
                    return Err(Error::wav("fmt ", format!("unsupported bit depth {bits}")));
                }
                if channels == 0 {
                    return Err(Error::wav("fmt ", "zero channels"));
                }
                if u16_at(bytes, body + 12) != channels * 2 {
                    return Err(Error::wav("fmt ", "block alignment does not match channels"));
                }
                spec = Some(WavSpec::pcm16(sample_rate, channels));
            }
            b"data" => {
                let spec = spec.ok_or_else(|| Error::wav("data", "data chunk before fmt chunk"))?;
                if body + size > bytes.len() {
                    return Err(Error::wav(
                        "data",
                        format!("declares {size} bytes, only {} present", bytes.len() - body),
                    ));
                }
                let m = spec.channels as usize;
                if size % (2 * m) != 0 {
                    return Err(Error::wav("data", "size is not a whole number of frames"));
                }
                let frames = size / (2 * m);
                let mut channels = vec![Vec::with_capacity(frames); m];
                for t in 0..frames {
                    for (c, ch) in channels.iter_mut().enumerate() {
                        let at = body + 2 * (t * m + c);
                        ch.push(dequantize(i16::from_le_bytes([bytes[at], bytes[at + 1]])));
                    }
                }
                return Ok((spec, channels));
            }
            _ => {}
        }
        // chunks are padded to even length
        pos = body + size + (size & 1);
    }
}

pub fn read_wav(path: &Path) -> Result<(WavSpec, Vec<Vec<f32>>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

/// Writes through a temporary sibling file that is renamed into place, so a
/// failed write leaves no partial file at `path`.
pub fn write_wav(path: &Path, spec: &WavSpec, channels: &[Vec<f32>]) -> Result<WriteReport> {
    let (bytes, report) = encode_wav(spec, channels)?;
    write_atomic(path, &bytes)?;
    Ok(report)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("path has no file name")))?
        .to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes))
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
