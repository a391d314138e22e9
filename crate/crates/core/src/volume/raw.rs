//! Internal volume format: `<name>.vol` holds raw little-endian voxels in
//! x-fastest order, `<name>.json` is the sidecar:
//!
//! ```json
//! {"dims": [64, 64, 64], "spacing": [1.0, 1.0, 1.0], "datatype": "f32", "kind": "image"}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{io_err, Datatype, Endianness, MaskVolume, Volume3D, VolumeError, VolumeHeader};

const MASK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawKind {
    Image,
    Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawVolume {
    Image(Volume3D),
    Mask(MaskVolume),
}

fn key<'a>(doc: &'a Value, name: &'static str) -> Result<&'a Value, VolumeError> {
    doc.get(name).ok_or(VolumeError::SidecarMissingKey(name))
}

fn triple<T, F: Fn(&Value) -> Option<T>>(v: &Value, name: &str, conv: F) -> Result<[T; 3], VolumeError> {
    let arr =
        v.as_array().filter(|a| a.len() == 3).ok_or_else(|| VolumeError::InvalidSidecar(format!("`{name}` must be a 3-element array")))?;
    let mut out = Vec::with_capacity(3);
    for item in arr {
        out.push(conv(item).ok_or_else(|| VolumeError::InvalidSidecar(format!("bad element in `{name}`")))?);
    }
    out.try_into().map_err(|_| VolumeError::InvalidSidecar(name.to_string()))
}

pub fn read_raw(volume_path: &Path, sidecar_path: &Path) -> Result<RawVolume, VolumeError> {
    let text = std::fs::read(sidecar_path).map_err(io_err(sidecar_path))?;
    let doc: Value = serde_json::from_slice(&text).map_err(|source| VolumeError::Json { path: sidecar_path.to_path_buf(), source })?;

    let dims = triple(key(&doc, "dims")?, "dims", |v| v.as_u64().map(|d| d as usize))?;
    let spacing = triple(key(&doc, "spacing")?, "spacing", Value::as_f64)?;
    let datatype =
        key(&doc, "datatype")?.as_str().and_then(Datatype::parse).ok_or_else(|| VolumeError::InvalidSidecar("unknown datatype".into()))?;
    let kind: RawKind = serde_json::from_value(key(&doc, "kind")?.clone())
        .map_err(|_| VolumeError::InvalidSidecar("kind must be \"image\" or \"mask\"".into()))?;

    let header = VolumeHeader { dims, spacing, datatype, intensity_scale: 1.0, intensity_offset: 0.0, endianness: Endianness::Little };
    header.validate()?;

    let payload = std::fs::read(volume_path).map_err(io_err(volume_path))?;
    let expected = header.voxel_count() * datatype.size_bytes();
    if payload.len() != expected {
        return Err(VolumeError::PayloadSizeMismatch { expected, actual: payload.len() });
    }
    let values = decode_le(&payload, datatype);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(VolumeError::NonFinitePayload(i));
    }

    match kind {
        RawKind::Image => Ok(RawVolume::Image(Volume3D { header, voxels: values })),
        RawKind::Mask => {
            let mut voxels = Vec::with_capacity(values.len());
            for (index, &value) in values.iter().enumerate() {
                if value < -MASK_TOLERANCE || value > 1.0 + MASK_TOLERANCE {
                    return Err(VolumeError::MaskNotBinary { index, value });
                }
                voxels.push((value > 0.5) as u8);
            }
            let mut header = header;
            header.datatype = datatype;
            Ok(RawVolume::Mask(MaskVolume { header, voxels }))
        }
    }
}

fn decode_le(payload: &[u8], datatype: Datatype) -> Vec<f64> {
    let w = datatype.size_bytes();
    payload
        .chunks_exact(w)
        .map(|c| match datatype {
            Datatype::U8 => c[0] as f64,
            Datatype::I16 => i16::from_le_bytes([c[0], c[1]]) as f64,
            Datatype::I32 => i32::from_le_bytes(c.try_into().unwrap()) as f64,
            Datatype::F32 => f32::from_le_bytes(c.try_into().unwrap()) as f64,
            Datatype::F64 => f64::from_le_bytes(c.try_into().unwrap()),
        })
        .collect()
}

fn encode_le(values: impl Iterator<Item = f64>, datatype: Datatype, out: &mut Vec<u8>) {
    for v in values {
        match datatype {
            Datatype::U8 => out.push(v as u8),
            Datatype::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Datatype::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            Datatype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Datatype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

fn write_pair(stem: &Path, header: &VolumeHeader, kind: RawKind, payload: &[u8]) -> Result<(), VolumeError> {
    let vol = stem.with_extension("vol");
    let sidecar = stem.with_extension("json");
    std::fs::write(&vol, payload).map_err(io_err(&vol))?;
    let doc = json!({
        "dims": header.dims,
        "spacing": header.spacing,
        "datatype": header.datatype.as_str(),
        "kind": kind,
    });
    let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes");
    std::fs::write(&sidecar, text).map_err(io_err(&sidecar))
}

/// Writes an image as `<stem>.vol` + `<stem>.json` using the header's
/// datatype. f32 and f64 round-trip bit-exactly.
pub fn write_raw(vol: &Volume3D, stem: &Path) -> Result<(), VolumeError> {
    let mut payload = Vec::with_capacity(vol.voxels.len() * vol.header.datatype.size_bytes());
    encode_le(vol.voxels.iter().copied(), vol.header.datatype, &mut payload);
    write_pair(stem, &vol.header, RawKind::Image, &payload)
}

/// Writes a mask as u8 `<stem>.vol` + `<stem>.json`.
pub fn write_raw_mask(mask: &MaskVolume, stem: &Path) -> Result<(), VolumeError> {
    let mut header = mask.header.clone();
    header.datatype = Datatype::U8;
    write_pair(stem, &header, RawKind::Mask, &mask.voxels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_fixture(dir: &Path, dims: [usize; 3], datatype: &str, kind: &str, payload: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let vol = dir.join("x.vol");
        let side = dir.join("x.json");
        fs::write(&vol, payload).unwrap();
        fs::write(&side, json!({"dims": dims, "spacing": [1.0, 1.0, 1.0], "datatype": datatype, "kind": kind}).to_string()).unwrap();
        (vol, side)
    }

    #[test]
    fn single_voxel_image() {
        let dir = tempfile::tempdir().unwrap();
        let (v, s) = write_fixture(dir.path(), [1, 1, 1], "f64", "image", &7.0f64.to_le_bytes());
        match read_raw(&v, &s).unwrap() {
            RawVolume::Image(img) => assert_eq!(img.voxels, vec![7.0]),
            other => panic!("expected image, got {other:?}"),
        }
    }

    #[test]
    fn binary_mask() {
        let dir = tempfile::tempdir().unwrap();
        let payload: Vec<u8> = [0.0f32, 1.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let (v, s) = write_fixture(dir.path(), [2, 1, 1], "f32", "mask", &payload);
        match read_raw(&v, &s).unwrap() {
            RawVolume::Mask(m) => assert_eq!(m.voxels, vec![0, 1]),
            other => panic!("expected mask, got {other:?}"),
        }
    }

    #[test]
    fn short_payload() {
        let dir = tempfile::tempdir().unwrap();
        let (v, s) = write_fixture(dir.path(), [2, 1, 1], "f64", "image", &1.0f64.to_le_bytes());
        assert!(matches!(read_raw(&v, &s), Err(VolumeError::PayloadSizeMismatch { expected: 16, actual: 8 })));
    }

    #[test]
    fn missing_key() {
        let dir = tempfile::tempdir().unwrap();
        let vol = dir.path().join("x.vol");
        let side = dir.path().join("x.json");
        fs::write(&vol, [0u8]).unwrap();
        fs::write(&side, r#"{"dims": [1,1,1], "datatype": "u8", "kind": "image"}"#).unwrap();
        assert!(matches!(read_raw(&vol, &side), Err(VolumeError::SidecarMissingKey("spacing"))));
    }

    #[test]
    fn mask_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let payload: Vec<u8> = [0.0f32, 2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let (v, s) = write_fixture(dir.path(), [2, 1, 1], "f32", "mask", &payload);
        assert!(matches!(read_raw(&v, &s), Err(VolumeError::MaskNotBinary { index: 1, .. })));
    }

    #[test]
    fn mask_within_tolerance_is_thresholded() {
        let dir = tempfile::tempdir().unwrap();
        let payload: Vec<u8> = [-5e-7f64, 1.0 + 5e-7, 0.4, 0.6].iter().flat_map(|v| v.to_le_bytes()).collect();
        let (v, s) = write_fixture(dir.path(), [4, 1, 1], "f64", "mask", &payload);
        match read_raw(&v, &s).unwrap() {
            RawVolume::Mask(m) => assert_eq!(m.voxels, vec![0, 1, 0, 1]),
            other => panic!("expected mask, got {other:?}"),
        }
    }
}
