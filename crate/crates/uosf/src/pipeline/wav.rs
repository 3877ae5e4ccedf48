//! Minimal RIFF/WAVE decoding and encoding.
//!
//! Reads PCM 16/24/32-bit integer and 32-bit IEEE float files (plus the
//! WAVE_FORMAT_EXTENSIBLE wrappers around those), mono or multichannel with
//! channel 0 extracted, normalizing samples to [-1, 1]. Every read is
//! bounds-checked; malformed input returns an ingestion error, never a
//! panic. Writing emits 32-bit float mono.

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;
use std::path::Path;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn bad(msg: impl Into<String>) -> Error {
    Error::Ingestion(msg.into())
}

fn take(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8]> {
    bytes
        .get(offset..offset.checked_add(len).ok_or_else(|| bad("length overflow"))?)
        .ok_or_else(|| bad(format!("truncated file: need {len} bytes at offset {offset}")))
}

fn u16_le(bytes: &[u8], offset: usize) -> Result<u16> {
    let b = take(bytes, offset, 2)?;
    Ok(u16::from_le_bytes([b[0], b[1]]))
}

fn u32_le(bytes: &[u8], offset: usize) -> Result<u32> {
    let b = take(bytes, offset, 4)?;
    Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

#[derive(Debug, Clone, Copy)]
struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
    block_align: u16,
}

/// Decodes a WAV file from memory into a mono [`TimeSeries`].
pub fn parse_wav(bytes: &[u8]) -> Result<TimeSeries> {
    if take(bytes, 0, 4)? != b"RIFF" {
        return Err(bad("missing RIFF header"));
    }
    if take(bytes, 8, 4)? != b"WAVE" {
        return Err(bad("missing WAVE form type"));
    }

    let mut offset = 12usize;
    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;

    while offset + 8 <= bytes.len() {
        let id = take(bytes, offset, 4)?;
        let size = u32_le(bytes, offset + 4)? as usize;
        let body_offset = offset + 8;
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                let body = take(bytes, body_offset, size)?;
                let mut code = u16_le(body, 0)?;
                let channels = u16_le(body, 2)?;
                let sample_rate = u32_le(body, 4)?;
                let block_align = u16_le(body, 12)?;
                let bits_per_sample = u16_le(body, 14)?;
                if code == FORMAT_EXTENSIBLE {
                    // sub-format GUID starts at byte 24; its first two bytes
                    // are the effective format code
                    if size < 40 {
                        return Err(bad("extensible fmt chunk too short"));
                    }
                    code = u16_le(body, 24)?;
                }
                format = Some(Format { code, channels, sample_rate, bits_per_sample, block_align });
            }
            b"data" => {
                data = Some(take(bytes, body_offset, size)?);
                break;
            }
            _ => {}
        }
        // chunks are word-aligned
        let advance = 8usize
            .checked_add(size)
            .and_then(|a| a.checked_add(size & 1))
            .ok_or_else(|| bad("chunk size overflow"))?;
        offset = offset.checked_add(advance).ok_or_else(|| bad("chunk offset overflow"))?;
    }

    let format = format.ok_or_else(|| bad("no fmt chunk before data"))?;
    let data = data.ok_or_else(|| bad("no data chunk"))?;

    if format.channels == 0 {
        return Err(bad("zero channels"));
    }
    if format.sample_rate == 0 {
        return Err(bad("zero sample rate"));
    }
    let bytes_per_sample = match (format.code, format.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 24) => 3,
        (FORMAT_PCM, 32) => 4,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (code, bits) => {
            return Err(bad(format!("unsupported codec: format {code}, {bits} bits")));
        }
    };
    let frame_size = bytes_per_sample * format.channels as usize;
    if format.block_align as usize != frame_size {
        return Err(bad(format!(
            "block align {} does not match {} channels of {} bytes",
            format.block_align, format.channels, bytes_per_sample
        )));
    }
    let n_frames = data.len() / frame_size;
    if n_frames == 0 {
        return Err(bad("empty data chunk"));
    }

    let mut samples = Vec::with_capacity(n_frames);
    for frame in 0..n_frames {
        let at = frame * frame_size; // channel 0 leads each frame
        let value = match (format.code, format.bits_per_sample) {
            (FORMAT_PCM, 16) => {
                i16::from_le_bytes([data[at], data[at + 1]]) as f64 / 32768.0
            }
            (FORMAT_PCM, 24) => {
                let raw =
                    i32::from_le_bytes([0, data[at], data[at + 1], data[at + 2]]) >> 8;
                raw as f64 / 8_388_608.0
            }
            (FORMAT_PCM, 32) => {
                i32::from_le_bytes([data[at], data[at + 1], data[at + 2], data[at + 3]]) as f64
                    / 2_147_483_648.0
            }
            (FORMAT_IEEE_FLOAT, 32) => {
                let v = f32::from_le_bytes([
                    data[at],
                    data[at + 1],
                    data[at + 2],
                    data[at + 3],
                ]) as f64;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite float sample at frame {frame}")));
                }
                v
            }
            _ => unreachable!("codec validated above"),
        };
        samples.push(value);
    }

    TimeSeries::new(samples, format.sample_rate as f64)
        .map_err(|e| bad(format!("decoded samples rejected: {e}")))
}

/// Reads a WAV file from disk; see [`parse_wav`].
pub fn read_wav(path: &Path) -> Result<TimeSeries> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", path.display())))?;
    parse_wav(&bytes)
}

/// Encodes a mono 32-bit float WAV.
pub fn encode_wav_f32(series: &TimeSeries) -> Vec<u8> {
    let n = series.len();
    let data_len = (n * 4) as u32;
    // RIFF + fmt(16) + fact(4) + data
    let riff_len = 4 + 8 + 16 + 8 + 4 + 8 + data_len;
    let rate = series.sample_rate_hz().round() as u32;

    let mut out = Vec::with_capacity(riff_len as usize + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // channels
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 4).to_le_bytes()); // byte rate
    out.extend_from_slice(&4u16.to_le_bytes()); // block align
    out.extend_from_slice(&32u16.to_le_bytes()); // bits
    out.extend_from_slice(b"fact");
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in series.samples() {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Writes a mono 32-bit float WAV to disk.
pub fn write_wav_f32(path: &Path, series: &TimeSeries) -> Result<()> {
    std::fs::write(path, encode_wav_f32(series))?;
    Ok(())
}
