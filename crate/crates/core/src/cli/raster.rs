//! Binary PGM (P5) and PNG decoding/encoding.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Luminance weights applied to RGB input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pgm,
    Png,
}

impl Format {
    /// PNG for a `.png` extension, PGM otherwise.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => Format::Png,
            _ => Format::Pgm,
        }
    }
}

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Decode("not a binary PGM (missing P5 magic)".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Decode("truncated PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Decode("PGM header value out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Decode("PGM header not followed by whitespace".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Decode(format!("PGM has empty dimensions {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Decode(format!("only 8-bit PGM is supported, maxval {maxval}")));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_start: pos,
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_pgm_header(bytes)?;
    let n = h.width * h.height;
    let data = bytes
        .get(h.data_start..h.data_start + n)
        .ok_or_else(|| Error::Decode(format!("PGM pixel data truncated, expected {n} bytes")))?;
    if let Some(&v) = data.iter().find(|&&v| v as usize > h.maxval) {
        return Err(Error::Decode(format!("sample {v} exceeds maxval {}", h.maxval)));
    }
    GrayImage::from_u8(h.height, h.width, data)
}

pub fn encode_pgm(height: usize, width: usize, samples: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

pub fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let px = rgb
            .pixels()
            .map(|p| {
                LUMA_WEIGHTS[0] * f64::from(p[0]) + LUMA_WEIGHTS[1] * f64::from(p[1]) + LUMA_WEIGHTS[2] * f64::from(p[2])
            })
            .collect();
        GrayImage::new(h, w, px)
    } else {
        GrayImage::from_u8(h, w, img.to_luma8().as_raw())
    }
}

pub fn encode_png(height: usize, width: usize, samples: &[u8]) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, samples.to_vec())
        .ok_or_else(|| Error::InvalidImage("sample count does not match dimensions".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(e.to_string()))?;
    Ok(out.into_inner())
}

/// Decodes by content: P5 magic means PGM, the PNG signature means PNG.
pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else {
        Err(Error::Decode("unrecognized image format (expected binary PGM or PNG)".into()))
    }
}

pub fn encode(format: Format, height: usize, width: usize, samples: &[u8]) -> Result<Vec<u8>> {
    match format {
        Format::Pgm => Ok(encode_pgm(height, width, samples)),
        Format::Png => encode_png(height, width, samples),
    }
}
