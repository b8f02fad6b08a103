//! Binary PNM image codecs.
//!
//! Depth images are stored as 16-bit big-endian PGM (P5, maxval 65535) with
//! depths quantized to millimeters, semantic images as 8-bit PGM (P5,
//! maxval 255, one label id per pixel) and color images as binary PPM (P6).

use std::path::Path;

use thiserror::Error;

use crate::cloud::Rgb;
use crate::image::{ColorImage, DepthImage, SemanticImage};

/// Largest depth representable by the millimeter-quantized 16-bit PGM.
pub const MAX_PGM16_DEPTH: f64 = 65.535;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic number '{found}' at byte 0; expected {expected}")]
    BadMagic { expected: &'static str, found: String },
    #[error("malformed header: {what} at byte {offset}")]
    MalformedHeader { what: String, offset: usize },
    #[error("maxval {got} at byte {offset}; expected {expected}")]
    MaxvalMismatch {
        expected: u32,
        got: u32,
        offset: usize,
    },
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("depth {value} m at pixel {index} exceeds the 16-bit millimeter range (< {MAX_PGM16_DEPTH} m)")]
    DepthRange { index: usize, value: f64 },
    #[error("label {value} at pixel {index} does not fit 8-bit PGM")]
    LabelRange { index: usize, value: u16 },
    #[error("invalid image: {0}")]
    Image(#[from] crate::image::ImageError),
}

fn header(magic: &str, width: u32, height: u32, maxval: u32) -> String {
    format!("{magic}\n{width} {height}\n{maxval}\n")
}

/// Encodes a depth image as 16-bit big-endian PGM, millimeters per sample.
pub fn encode_pgm16(depth: &DepthImage) -> Result<Vec<u8>, PnmError> {
    let mut bytes = header("P5", depth.width(), depth.height(), 65535).into_bytes();
    for (i, &d) in depth.depths().iter().enumerate() {
        if d >= MAX_PGM16_DEPTH {
            return Err(PnmError::DepthRange { index: i, value: d });
        }
        let mm = (d * 1000.0).round() as u16;
        bytes.extend_from_slice(&mm.to_be_bytes());
    }
    Ok(bytes)
}

pub fn write_pgm16(depth: &DepthImage, path: &Path) -> Result<(), PnmError> {
    crate::io::write_atomic(path, &encode_pgm16(depth)?)?;
    Ok(())
}

pub fn decode_pgm16(bytes: &[u8]) -> Result<DepthImage, PnmError> {
    let (width, height, payload) = parse_header(bytes, "P5", 65535)?;
    let expected = width as usize * height as usize * 2;
    check_payload(payload.len(), expected)?;
    let depths = payload
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 1000.0)
        .collect();
    Ok(DepthImage::new(width, height, depths)?)
}

pub fn read_pgm16(path: &Path) -> Result<DepthImage, PnmError> {
    decode_pgm16(&std::fs::read(path)?)
}

/// Encodes a semantic image as 8-bit PGM; every label must fit in a byte.
pub fn encode_pgm8(image: &SemanticImage) -> Result<Vec<u8>, PnmError> {
    let mut bytes = header("P5", image.width(), image.height(), 255).into_bytes();
    for (i, &label) in image.labels().iter().enumerate() {
        if label > 255 {
            return Err(PnmError::LabelRange { index: i, value: label });
        }
        bytes.push(label as u8);
    }
    Ok(bytes)
}

pub fn write_pgm8(image: &SemanticImage, path: &Path) -> Result<(), PnmError> {
    crate::io::write_atomic(path, &encode_pgm8(image)?)?;
    Ok(())
}

pub fn decode_pgm8(bytes: &[u8]) -> Result<SemanticImage, PnmError> {
    let (width, height, payload) = parse_header(bytes, "P5", 255)?;
    check_payload(payload.len(), width as usize * height as usize)?;
    let labels = payload.iter().map(|&b| b as u16).collect();
    Ok(SemanticImage::new(width, height, labels)?)
}

pub fn read_pgm8(path: &Path) -> Result<SemanticImage, PnmError> {
    decode_pgm8(&std::fs::read(path)?)
}

pub fn encode_ppm(image: &ColorImage) -> Vec<u8> {
    let mut bytes = header("P6", image.width(), image.height(), 255).into_bytes();
    for px in image.pixels() {
        bytes.extend_from_slice(&[px.r, px.g, px.b]);
    }
    bytes
}

pub fn write_ppm(image: &ColorImage, path: &Path) -> Result<(), PnmError> {
    crate::io::write_atomic(path, &encode_ppm(image))?;
    Ok(())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ColorImage, PnmError> {
    let (width, height, payload) = parse_header(bytes, "P6", 255)?;
    check_payload(payload.len(), width as usize * height as usize * 3)?;
    let pixels = payload
        .chunks_exact(3)
        .map(|c| Rgb::new(c[0], c[1], c[2]))
        .collect();
    Ok(ColorImage::new(width, height, pixels)?)
}

pub fn read_ppm(path: &Path) -> Result<ColorImage, PnmError> {
    decode_ppm(&std::fs::read(path)?)
}

fn check_payload(got: usize, expected: usize) -> Result<(), PnmError> {
    if got < expected {
        Err(PnmError::Truncated { expected, got })
    } else if got > expected {
        Err(PnmError::TrailingBytes { extra: got - expected })
    } else {
        Ok(())
    }
}

/// Parses "<magic> <width> <height> <maxval>" with PNM whitespace/comment
/// rules and returns the payload slice after the single whitespace byte
/// that terminates the header.
fn parse_header<'a>(
    bytes: &'a [u8],
    magic: &'static str,
    expected_maxval: u32,
) -> Result<(u32, u32, &'a [u8]), PnmError> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(PnmError::BadMagic { expected: magic, found });
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let (value, next) = next_token(bytes, pos, name)?;
        fields[i] = value;
        pos = next;
    }
    // Exactly one whitespace byte separates the maxval from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PnmError::MalformedHeader {
            what: "missing whitespace before payload".to_string(),
            offset: pos,
        });
    }
    pos += 1;
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != expected_maxval {
        return Err(PnmError::MaxvalMismatch {
            expected: expected_maxval,
            got: maxval,
            offset: pos,
        });
    }
    Ok((width, height, &bytes[pos..]))
}

/// Skips whitespace and '#' comments, then parses one unsigned decimal token.
fn next_token(bytes: &[u8], mut pos: usize, name: &str) -> Result<(u32, usize), PnmError> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    let start = pos;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if start == pos {
        return Err(PnmError::MalformedHeader {
            what: format!("expected {name}"),
            offset: start,
        });
    }
    let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
    let value = text.parse::<u32>().map_err(|_| PnmError::MalformedHeader {
        what: format!("{name} '{text}' out of range"),
        offset: start,
    })?;
    Ok((value, pos))
}
