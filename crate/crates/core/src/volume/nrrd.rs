//! Reader and writer for a strict subset of NRRD: three dimensions, raw
//! little-endian payload, `float` for intensities and `uint8` for labels.
//!
//! The writer emits a fixed header layout so output is byte-deterministic:
//!
//! ```text
//! NRRD0004
//! type: float
//! dimension: 3
//! sizes: 64 64 64
//! spacings: 1 1 1
//! endian: little
//! encoding: raw
//!
//! <payload>
//! ```

use std::fs;
use std::path::Path;

use super::{Geometry, LabelVolume, VoxelVolume};
use crate::error::{Error, Result};

/// Either kind of volume, as discriminated by the file's element type.
#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Intensity(VoxelVolume),
    Labels(LabelVolume),
}

impl Volume {
    pub fn geometry(&self) -> &Geometry {
        match self {
            Volume::Intensity(v) => v.geometry(),
            Volume::Labels(v) => v.geometry(),
        }
    }

    pub fn into_intensity(self) -> Result<VoxelVolume> {
        match self {
            Volume::Intensity(v) => Ok(v),
            Volume::Labels(_) => Err(Error::Format("expected a float volume, found uint8".into())),
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            Volume::Labels(v) => Ok(v),
            Volume::Intensity(_) => {
                Err(Error::Format("expected a uint8 volume, found float".into()))
            }
        }
    }
}

impl From<VoxelVolume> for Volume {
    fn from(v: VoxelVolume) -> Self {
        Volume::Intensity(v)
    }
}

impl From<LabelVolume> for Volume {
    fn from(v: LabelVolume) -> Self {
        Volume::Labels(v)
    }
}

/// Formats `x` with at most 6 significant digits and no trailing zeros.
fn format_spacing(x: f64) -> String {
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn write_header(out: &mut Vec<u8>, type_name: &str, g: &Geometry) {
    let [nx, ny, nz] = g.dims;
    let [sx, sy, sz] = g.spacing.map(format_spacing);
    out.extend_from_slice(
        format!(
            "NRRD0004\ntype: {type_name}\ndimension: 3\nsizes: {nx} {ny} {nz}\n\
             spacings: {sx} {sy} {sz}\nendian: little\nencoding: raw\n\n"
        )
        .as_bytes(),
    );
}

pub fn write_volume(volume: &Volume) -> Vec<u8> {
    let mut out = Vec::new();
    match volume {
        Volume::Intensity(v) => {
            write_header(&mut out, "float", v.geometry());
            out.reserve(v.data().len() * 4);
            for x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Volume::Labels(v) => {
            write_header(&mut out, "uint8", v.geometry());
            out.extend_from_slice(v.labels());
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ElementType {
    Float,
    Uint8,
}

fn parse_type(value: &str) -> Result<ElementType> {
    match value {
        "float" => Ok(ElementType::Float),
        "uint8" | "uchar" | "unsigned char" | "uint8_t" => Ok(ElementType::Uint8),
        other => Err(Error::Format(format!("unsupported type '{other}'"))),
    }
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Format(format!(
            "'{key}' needs 3 values, got '{value}'"
        )));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::Format(format!("bad value '{p}' in '{key}'")))?,
        );
    }
    match <[T; 3]>::try_from(out) {
        Ok(arr) => Ok(arr),
        Err(_) => unreachable!("length checked above"),
    }
}

/// Parses an NRRD-subset byte stream.
pub fn read_volume(bytes: &[u8]) -> Result<Volume> {
    let magic = bytes
        .get(..8)
        .ok_or_else(|| Error::Format("file shorter than magic".into()))?;
    if !matches!(
        magic,
        b"NRRD0001" | b"NRRD0002" | b"NRRD0003" | b"NRRD0004" | b"NRRD0005"
    ) {
        return Err(Error::Format(format!(
            "bad magic '{}'",
            String::from_utf8_lossy(magic)
        )));
    }

    let mut pos = 0;
    let mut lines = Vec::new();
    let payload_start = loop {
        let rest = &bytes[pos..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(Error::Format(
                "header not terminated by a blank line".into(),
            ));
        };
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::Format("header is not UTF-8".into()))?
            .trim_end_matches('\r');
        pos += nl + 1;
        if line.is_empty() {
            break pos;
        }
        lines.push(line);
    };

    let mut elem = None;
    let mut dimension = None;
    let mut sizes = None;
    let mut spacing = None;
    let mut endian = None;
    let mut encoding = None;
    for line in lines.iter().skip(1) {
        if line.starts_with('#') {
            continue;
        }
        // key:=value lines carry free-form metadata
        if line.contains(":=") {
            continue;
        }
        let Some((key, value)) = line.split_once(": ") else {
            return Err(Error::Format(format!("malformed header line '{line}'")));
        };
        let value = value.trim();
        match key {
            "type" => elem = Some(parse_type(value)?),
            "dimension" => {
                dimension = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad dimension '{value}'")))?,
                )
            }
            "sizes" => sizes = Some(parse_triple::<usize>(key, value)?),
            "spacings" => spacing = Some(parse_triple::<f64>(key, value)?),
            "endian" => endian = Some(value.to_string()),
            "encoding" => encoding = Some(value.to_string()),
            _ => {}
        }
    }

    let elem = elem.ok_or_else(|| Error::Format("missing field 'type'".into()))?;
    match dimension {
        Some(3) => {}
        Some(d) => return Err(Error::Format(format!("unsupported dimension {d}"))),
        None => return Err(Error::Format("missing field 'dimension'".into())),
    }
    let dims = sizes.ok_or_else(|| Error::Format("missing field 'sizes'".into()))?;
    match encoding.as_deref() {
        Some("raw") => {}
        Some(e) => return Err(Error::Format(format!("unsupported encoding '{e}'"))),
        None => return Err(Error::Format("missing field 'encoding'".into())),
    }
    match (elem, endian.as_deref()) {
        (_, Some("little")) | (ElementType::Uint8, None) => {}
        (_, Some(e)) => return Err(Error::Format(format!("unsupported endian '{e}'"))),
        (ElementType::Float, None) => return Err(Error::Format("missing field 'endian'".into())),
    }
    let geometry = Geometry::new(dims, spacing.unwrap_or([1.0; 3]))
        .map_err(|e| Error::Format(e.to_string()))?;

    let payload = &bytes[payload_start..];
    let width = match elem {
        ElementType::Float => 4,
        ElementType::Uint8 => 1,
    };
    let expected = geometry.len() * width;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }

    match elem {
        ElementType::Float => {
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            VoxelVolume::new(geometry, data)
                .map(Volume::Intensity)
                .map_err(|e| Error::Format(e.to_string()))
        }
        ElementType::Uint8 => Ok(Volume::Labels(LabelVolume::new(
            geometry,
            payload.to_vec(),
        )?)),
    }
}

pub fn read_volume_file(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_volume(&bytes).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_volume_file(path: impl AsRef<Path>, volume: &Volume) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_volume(volume)).map_err(|e| Error::io(path, e))
}
