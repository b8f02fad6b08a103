//! Binary little-endian PLY reader/writer.
//!
//! Supported layout: one `vertex` element with `x`, `y`, `z` as float64,
//! optionally followed by `red`, `green`, `blue` (uint8) and `label`
//! (uint16). Round trips are bit-exact. Parse errors carry the byte offset
//! at which the problem was detected.

use std::path::Path;

use thiserror::Error;

use crate::cloud::{LabelId, PointCloud, Rgb};
use crate::geom::Point3;

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a PLY file (bad magic at byte {offset})")]
    BadMagic { offset: usize },
    #[error("unsupported format '{found}' at byte {offset}; expected binary_little_endian 1.0")]
    UnsupportedFormat { found: String, offset: usize },
    #[error("malformed header line '{line}' at byte {offset}")]
    MalformedHeader { line: String, offset: usize },
    #[error("unsupported element '{name}' at byte {offset}")]
    UnsupportedElement { name: String, offset: usize },
    #[error("unsupported property '{property}' at byte {offset}")]
    UnsupportedProperty { property: String, offset: usize },
    #[error("header ended at byte {offset} without an 'end_header' line")]
    UnterminatedHeader { offset: usize },
    #[error("truncated payload: expected {expected} bytes, got {got} (file ends at byte {offset})")]
    Truncated {
        expected: usize,
        got: usize,
        offset: usize,
    },
    #[error("{extra} trailing bytes after payload at byte {offset}")]
    TrailingBytes { extra: usize, offset: usize },
    #[error("non-finite position in vertex {vertex} at byte {offset}")]
    InvalidValue { vertex: usize, offset: usize },
}

/// Serializes a cloud into the in-memory PLY byte layout.
pub fn encode_ply(cloud: &PointCloud) -> Vec<u8> {
    let has_colors = cloud.colors().is_some();
    let has_labels = cloud.labels().is_some();
    let mut header = String::new();
    header.push_str("ply\n");
    header.push_str("format binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    header.push_str("property double x\n");
    header.push_str("property double y\n");
    header.push_str("property double z\n");
    if has_colors {
        header.push_str("property uchar red\n");
        header.push_str("property uchar green\n");
        header.push_str("property uchar blue\n");
    }
    if has_labels {
        header.push_str("property ushort label\n");
    }
    header.push_str("end_header\n");

    let stride = 24 + if has_colors { 3 } else { 0 } + if has_labels { 2 } else { 0 };
    let mut bytes = Vec::with_capacity(header.len() + stride * cloud.len());
    bytes.extend_from_slice(header.as_bytes());
    for i in 0..cloud.len() {
        let p = cloud.positions()[i];
        bytes.extend_from_slice(&p.x().to_le_bytes());
        bytes.extend_from_slice(&p.y().to_le_bytes());
        bytes.extend_from_slice(&p.z().to_le_bytes());
        if let Some(colors) = cloud.colors() {
            let c = colors[i];
            bytes.extend_from_slice(&[c.r, c.g, c.b]);
        }
        if let Some(labels) = cloud.labels() {
            bytes.extend_from_slice(&labels[i].to_le_bytes());
        }
    }
    bytes
}

/// Writes `cloud` to `path` as binary little-endian PLY (atomic).
pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<(), PlyError> {
    crate::io::write_atomic(path, &encode_ply(cloud))?;
    Ok(())
}

/// Reads a PLY produced by [`write_ply`]. The returned cloud carries no
/// taxonomy name; attach one from the manifest if labels are present.
pub fn read_ply(path: &Path) -> Result<PointCloud, PlyError> {
    decode_ply(&std::fs::read(path)?)
}

struct HeaderInfo {
    vertex_count: usize,
    has_colors: bool,
    has_labels: bool,
    payload_start: usize,
}

/// Parses the in-memory PLY byte layout.
pub fn decode_ply(bytes: &[u8]) -> Result<PointCloud, PlyError> {
    let header = parse_header(bytes)?;
    let stride = 24 + if header.has_colors { 3 } else { 0 } + if header.has_labels { 2 } else { 0 };
    let expected = header.vertex_count * stride;
    let payload = &bytes[header.payload_start..];
    if payload.len() < expected {
        return Err(PlyError::Truncated {
            expected,
            got: payload.len(),
            offset: bytes.len(),
        });
    }
    if payload.len() > expected {
        return Err(PlyError::TrailingBytes {
            extra: payload.len() - expected,
            offset: header.payload_start + expected,
        });
    }

    let mut positions = Vec::with_capacity(header.vertex_count);
    let mut colors = header.has_colors.then(|| Vec::with_capacity(header.vertex_count));
    let mut labels = header.has_labels.then(|| Vec::with_capacity(header.vertex_count));
    for i in 0..header.vertex_count {
        let rec = &payload[i * stride..(i + 1) * stride];
        let x = f64::from_le_bytes(rec[0..8].try_into().unwrap());
        let y = f64::from_le_bytes(rec[8..16].try_into().unwrap());
        let z = f64::from_le_bytes(rec[16..24].try_into().unwrap());
        let point = Point3::new(x, y, z).map_err(|_| PlyError::InvalidValue {
            vertex: i,
            offset: header.payload_start + i * stride,
        })?;
        positions.push(point);
        let mut at = 24;
        if let Some(colors) = colors.as_mut() {
            colors.push(Rgb::new(rec[at], rec[at + 1], rec[at + 2]));
            at += 3;
        }
        if let Some(labels) = labels.as_mut() {
            labels.push(LabelId::from_le_bytes(rec[at..at + 2].try_into().unwrap()));
        }
    }
    // Lengths are equal by construction.
    Ok(PointCloud::new(positions, colors, labels, None).unwrap())
}

fn parse_header(bytes: &[u8]) -> Result<HeaderInfo, PlyError> {
    let mut lines = HeaderLines { bytes, offset: 0 };

    let (line, offset) = lines.next().ok_or(PlyError::BadMagic { offset: 0 })?;
    if line != "ply" {
        return Err(PlyError::BadMagic { offset });
    }
    let (line, offset) = lines.next().ok_or(PlyError::UnterminatedHeader { offset: bytes.len() })?;
    if line != "format binary_little_endian 1.0" {
        return Err(PlyError::UnsupportedFormat {
            found: line.to_string(),
            offset,
        });
    }

    let mut vertex_count: Option<usize> = None;
    // Property names seen so far for the vertex element, in order.
    let mut props: Vec<(String, String)> = Vec::new();
    loop {
        let (line, offset) = lines
            .next()
            .ok_or(PlyError::UnterminatedHeader { offset: bytes.len() })?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | Some("obj_info") => continue,
            Some("element") => {
                let name = words.next().unwrap_or("");
                if name != "vertex" || vertex_count.is_some() {
                    return Err(PlyError::UnsupportedElement {
                        name: name.to_string(),
                        offset,
                    });
                }
                let count = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| PlyError::MalformedHeader {
                        line: line.to_string(),
                        offset,
                    })?;
                vertex_count = Some(count);
            }
            Some("property") => {
                if vertex_count.is_none() {
                    return Err(PlyError::MalformedHeader {
                        line: line.to_string(),
                        offset,
                    });
                }
                let ty = words.next().unwrap_or("").to_string();
                let name = words.next().unwrap_or("").to_string();
                if name.is_empty() {
                    return Err(PlyError::MalformedHeader {
                        line: line.to_string(),
                        offset,
                    });
                }
                if !supported_property(&ty, &name, props.len()) {
                    return Err(PlyError::UnsupportedProperty {
                        property: format!("{ty} {name}"),
                        offset,
                    });
                }
                props.push((ty, name));
            }
            Some("end_header") => break,
            _ => {
                return Err(PlyError::MalformedHeader {
                    line: line.to_string(),
                    offset,
                })
            }
        }
    }

    let vertex_count = vertex_count.ok_or(PlyError::MalformedHeader {
        line: "missing 'element vertex'".to_string(),
        offset: lines.offset,
    })?;
    let names: Vec<&str> = props.iter().map(|(_, n)| n.as_str()).collect();
    let (has_colors, has_labels) = match names.as_slice() {
        ["x", "y", "z"] => (false, false),
        ["x", "y", "z", "red", "green", "blue"] => (true, false),
        ["x", "y", "z", "label"] => (false, true),
        ["x", "y", "z", "red", "green", "blue", "label"] => (true, true),
        _ => {
            return Err(PlyError::MalformedHeader {
                line: format!("unsupported property layout {names:?}"),
                offset: lines.offset,
            })
        }
    };
    Ok(HeaderInfo {
        vertex_count,
        has_colors,
        has_labels,
        payload_start: lines.offset,
    })
}

/// Checks a (type, name) pair against the slot it would occupy.
fn supported_property(ty: &str, name: &str, index: usize) -> bool {
    let is_double = matches!(ty, "double" | "float64");
    let is_uchar = matches!(ty, "uchar" | "uint8");
    let is_ushort = matches!(ty, "ushort" | "uint16");
    match name {
        "x" => is_double && index == 0,
        "y" => is_double && index == 1,
        "z" => is_double && index == 2,
        "red" => is_uchar && index == 3,
        "green" => is_uchar && index == 4,
        "blue" => is_uchar && index == 5,
        "label" => is_ushort && (index == 3 || index == 6),
        _ => false,
    }
}

/// Iterates '\n'-terminated header lines, yielding each line's start offset.
struct HeaderLines<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> HeaderLines<'a> {
    fn next(&mut self) -> Option<(&'a str, usize)> {
        let start = self.offset;
        let rest = &self.bytes[start..];
        let end = rest.iter().position(|&b| b == b'\n')?;
        self.offset = start + end + 1;
        let line = std::str::from_utf8(&rest[..end]).ok()?;
        Some((line.trim_end_matches('\r'), start))
    }
}
