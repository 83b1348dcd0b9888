//! Binary PPM (`P6`) and PGM (`P5`) images with 8-bit samples, and saliency
//! output as a PGM plus JSON sidecar.

use std::path::Path;

use clipwise_core::nnkern::Tensor;
use clipwise_core::visual::SaliencyMap;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 for PGM, 3 for PPM.
    pub channels: usize,
    /// Row-major, channels interleaved.
    pub pixels: Vec<u8>,
}

fn format_err(msg: impl Into<String>) -> AppError {
    AppError::Format(msg.into())
}

/// Parses header tokens, skipping whitespace and `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err(format_err("PNM header truncated")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| format_err("PNM header is not ASCII"))
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(bytes, pos)?;
    tok.parse().map_err(|_| format_err(format!("PNM {what} {tok:?} is not a number")))
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || !matches!(channels, 1 | 3) {
            return Err(format_err(format!("unsupported image {width}×{height}×{channels}")));
        }
        if pixels.len() != width * height * channels {
            return Err(format_err(format!(
                "{} pixel bytes for a {width}×{height}×{channels} image",
                pixels.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let channels = match header_token(bytes, &mut pos)? {
            "P6" => 3,
            "P5" => 1,
            other => return Err(format_err(format!("unsupported PNM magic {other:?}, expected P5 or P6"))),
        };
        let width = header_number(bytes, &mut pos, "width")?;
        let height = header_number(bytes, &mut pos, "height")?;
        let maxval = header_number(bytes, &mut pos, "maxval")?;
        if maxval != 255 {
            return Err(format_err(format!("only 8-bit PNM is supported, maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(format_err("PNM header truncated"));
        }
        pos += 1;
        let n = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| format_err("PNM dimensions overflow"))?;
        let raster = &bytes[pos..];
        if raster.len() < n {
            return Err(format_err(format!("PNM raster truncated: {} of {n} bytes", raster.len())));
        }
        Image::new(width, height, channels, raster[..n].to_vec())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = if self.channels == 3 { "P6" } else { "P5" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&crate::error::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::error::write(path, &self.to_bytes())
    }

    /// `[H, W, C]` tensor with samples scaled to `[-1, 1]`.
    pub fn to_tensor(&self) -> Tensor {
        let data = self.pixels.iter().map(|&p| f64::from(p) / 127.5 - 1.0).collect();
        Tensor::from_vec(&[self.height, self.width, self.channels], data).expect("validated extents")
    }

    /// Inverse of [`Image::to_tensor`], clamping and rounding samples.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let s = t.shape();
        if s.len() != 3 {
            return Err(format_err(format!("image tensor must be [H, W, C], got {s:?}")));
        }
        let pixels = t.data().iter().map(|v| ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8).collect();
        Image::new(s[1], s[0], s[2], pixels)
    }
}

/// The JSON sidecar written next to each saliency PGM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencySidecar {
    pub frame_index: usize,
    /// Range of the heat map before normalization.
    pub min: f64,
    pub max: f64,
}

pub fn saliency_image(map: &SaliencyMap) -> Image {
    Image::new(map.width, map.height, 1, map.to_gray8()).expect("map extents are positive")
}

pub fn saliency_sidecar(map: &SaliencyMap) -> SaliencySidecar {
    SaliencySidecar {
        frame_index: map.frame_index,
        min: map.raw_min,
        max: map.raw_max,
    }
}

/// Writes `saliency_%05d.pgm` and `saliency_%05d.json` into `dir`.
pub fn write_saliency(dir: impl AsRef<Path>, map: &SaliencyMap) -> Result<()> {
    let stem = dir.as_ref().join(format!("saliency_{:05}", map.frame_index));
    saliency_image(map).write(stem.with_extension("pgm"))?;
    let json = serde_json::to_vec_pretty(&saliency_sidecar(map)).expect("plain struct");
    crate::error::write(stem.with_extension("json"), &json)
}

/// Reads every `frame_*.ppm`/`frame_*.pgm` in `dir`, ordered by file name.
pub fn read_frame_dir(dir: impl AsRef<Path>) -> Result<Vec<Image>> {
    let dir = dir.as_ref();
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("frame_") && (name.ends_with(".ppm") || name.ends_with(".pgm"))
        })
        .collect();
    names.sort();
    names.iter().map(Image::read).collect()
}
