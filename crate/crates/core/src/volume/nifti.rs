//! NIfTI-1 reader (single-file `.nii`, gzip `.nii.gz`, and `.hdr`/`.img` pairs).
//!
//! Only the fields the pipeline needs are decoded. Orientation (qform/sform)
//! is ignored: everything downstream works in voxel space.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::{io_err, Datatype, Endianness, Volume3D, VolumeError, VolumeHeader};

pub const NIFTI1_HEADER_SIZE: usize = 348;

const OFF_DIM: usize = 40;
const OFF_DATATYPE: usize = 70;
const OFF_PIXDIM: usize = 76;
const OFF_VOX_OFFSET: usize = 108;
const OFF_SCL_SLOPE: usize = 112;
const OFF_SCL_INTER: usize = 116;
const OFF_MAGIC: usize = 344;

struct Reader<'a> {
    bytes: &'a [u8],
    endian: Endianness,
}

impl Reader<'_> {
    fn arr<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.bytes[off..off + N]);
        b
    }

    fn i16(&self, off: usize) -> i16 {
        match self.endian {
            Endianness::Little => i16::from_le_bytes(self.arr(off)),
            Endianness::Big => i16::from_be_bytes(self.arr(off)),
        }
    }

    fn i32(&self, off: usize) -> i32 {
        match self.endian {
            Endianness::Little => i32::from_le_bytes(self.arr(off)),
            Endianness::Big => i32::from_be_bytes(self.arr(off)),
        }
    }

    fn f32(&self, off: usize) -> f32 {
        match self.endian {
            Endianness::Little => f32::from_le_bytes(self.arr(off)),
            Endianness::Big => f32::from_be_bytes(self.arr(off)),
        }
    }

    fn f64(&self, off: usize) -> f64 {
        match self.endian {
            Endianness::Little => f64::from_le_bytes(self.arr(off)),
            Endianness::Big => f64::from_be_bytes(self.arr(off)),
        }
    }
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>, VolumeError> {
    if bytes.len() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out).map_err(|source| VolumeError::Io { path: "<gzip stream>".into(), source })?;
        Ok(std::borrow::Cow::Owned(out))
    } else {
        Ok(std::borrow::Cow::Borrowed(bytes))
    }
}

struct ParsedHeader {
    header: VolumeHeader,
    vox_offset: usize,
    pair: bool,
}

fn parse_header(bytes: &[u8]) -> Result<ParsedHeader, VolumeError> {
    if bytes.len() < NIFTI1_HEADER_SIZE {
        return Err(VolumeError::HeaderTooShort(bytes.len()));
    }
    let probe: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    let endian = if i32::from_le_bytes(probe) == 348 {
        Endianness::Little
    } else if i32::from_be_bytes(probe) == 348 {
        Endianness::Big
    } else {
        return Err(VolumeError::BadHeaderSize);
    };
    let r = Reader { bytes, endian };

    let magic: [u8; 4] = r.arr(OFF_MAGIC);
    let pair = match &magic {
        b"n+1\0" => false,
        b"ni1\0" => true,
        _ => return Err(VolumeError::BadMagic(magic)),
    };

    let mut dim = [0i16; 8];
    for (i, d) in dim.iter_mut().enumerate() {
        *d = r.i16(OFF_DIM + 2 * i);
    }
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(VolumeError::UnsupportedDims(dim));
    }
    let mut dims = [1usize; 3];
    for axis in 0..3 {
        if (axis as i16) < ndim {
            let d = dim[axis + 1];
            if d < 1 {
                return Err(VolumeError::UnsupportedDims(dim));
            }
            dims[axis] = d as usize;
        }
    }
    // Higher dimensions must be singleton; time series are not volumes.
    if (4..=ndim as usize).any(|axis| dim[axis] > 1) {
        return Err(VolumeError::UnsupportedDims(dim));
    }

    let code = r.i16(OFF_DATATYPE);
    let datatype = Datatype::from_nifti_code(code).ok_or(VolumeError::UnsupportedDatatype(code))?;

    let mut spacing = [1.0f64; 3];
    for (axis, s) in spacing.iter_mut().enumerate() {
        let v = r.f32(OFF_PIXDIM + 4 * (axis + 1)).abs() as f64;
        if v > 0.0 && v.is_finite() {
            *s = v;
        }
    }

    let mut slope = r.f32(OFF_SCL_SLOPE) as f64;
    let mut inter = r.f32(OFF_SCL_INTER) as f64;
    if slope == 0.0 || !slope.is_finite() {
        slope = 1.0;
        inter = 0.0;
    }
    if !inter.is_finite() {
        inter = 0.0;
    }

    let vox_offset = r.f32(OFF_VOX_OFFSET);
    let vox_offset = if vox_offset.is_finite() && vox_offset > 0.0 { vox_offset as usize } else { 0 };

    Ok(ParsedHeader {
        header: VolumeHeader { dims, spacing, datatype, intensity_scale: slope, intensity_offset: inter, endianness: endian },
        vox_offset,
        pair,
    })
}

fn decode_payload(header: VolumeHeader, payload: &[u8]) -> Result<Volume3D, VolumeError> {
    let n = header.voxel_count();
    let width = header.datatype.size_bytes();
    let needed = n * width;
    if payload.len() < needed {
        return Err(VolumeError::DimMismatch { expected: needed, actual: payload.len() });
    }
    let r = Reader { bytes: payload, endian: header.endianness };
    let slope = header.intensity_scale;
    let inter = header.intensity_offset;
    let mut voxels = Vec::with_capacity(n);
    for i in 0..n {
        let off = i * width;
        let stored = match header.datatype {
            Datatype::U8 => payload[off] as f64,
            Datatype::I16 => r.i16(off) as f64,
            Datatype::I32 => r.i32(off) as f64,
            Datatype::F32 => r.f32(off) as f64,
            Datatype::F64 => r.f64(off),
        };
        if !stored.is_finite() {
            return Err(VolumeError::NonFinitePayload(i));
        }
        let value = stored * slope + inter;
        if !value.is_finite() {
            return Err(VolumeError::NonFinitePayload(i));
        }
        voxels.push(value);
    }
    Ok(Volume3D { header, voxels })
}

/// Decodes a complete NIfTI-1 byte stream, gunzipping first when the stream
/// starts with the gzip magic. Byte order is detected from `sizeof_hdr`.
///
/// For `ni1` (header/image pair) streams the image payload is expected to
/// follow the 348-byte header directly; use [`parse_nifti1_pair`] for separate
/// buffers.
pub fn parse_nifti1(bytes: &[u8]) -> Result<Volume3D, VolumeError> {
    let bytes = maybe_gunzip(bytes)?;
    let parsed = parse_header(&bytes)?;
    let start = if parsed.pair { NIFTI1_HEADER_SIZE } else { parsed.vox_offset.max(NIFTI1_HEADER_SIZE) };
    let payload = bytes.get(start..).unwrap_or(&[]);
    decode_payload(parsed.header, payload)
}

/// Decodes a `.hdr` buffer together with its `.img` buffer.
pub fn parse_nifti1_pair(header: &[u8], image: &[u8]) -> Result<Volume3D, VolumeError> {
    let header = maybe_gunzip(header)?;
    let image = maybe_gunzip(image)?;
    let parsed = parse_header(&header)?;
    let payload = image.get(parsed.vox_offset..).unwrap_or(&[]);
    decode_payload(parsed.header, payload)
}

/// Reads a NIfTI-1 file from disk. A `.hdr` path pulls in the sibling `.img`.
pub fn read_nifti(path: &Path) -> Result<Volume3D, VolumeError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let is_hdr = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("hdr"));
    if is_hdr {
        let img_path = path.with_extension("img");
        let img = std::fs::read(&img_path).map_err(io_err(&img_path))?;
        parse_nifti1_pair(&bytes, &img)
    } else {
        parse_nifti1(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Assembles a NIfTI-1 single-file stream field by field.
    fn build(datatype: i16, dims: [i16; 3], payload: &[u8], big: bool, slope: f32, inter: f32) -> Vec<u8> {
        let mut h = vec![0u8; 352];
        let put_i32 = |h: &mut Vec<u8>, off: usize, v: i32| {
            let b = if big { v.to_be_bytes() } else { v.to_le_bytes() };
            h[off..off + 4].copy_from_slice(&b);
        };
        let put_i16 = |h: &mut Vec<u8>, off: usize, v: i16| {
            let b = if big { v.to_be_bytes() } else { v.to_le_bytes() };
            h[off..off + 2].copy_from_slice(&b);
        };
        let put_f32 = |h: &mut Vec<u8>, off: usize, v: f32| {
            let b = if big { v.to_be_bytes() } else { v.to_le_bytes() };
            h[off..off + 4].copy_from_slice(&b);
        };
        put_i32(&mut h, 0, 348);
        let dim = [3, dims[0], dims[1], dims[2], 1, 1, 1, 1];
        for (i, d) in dim.iter().enumerate() {
            put_i16(&mut h, OFF_DIM + 2 * i, *d);
        }
        put_i16(&mut h, OFF_DATATYPE, datatype);
        for i in 0..8 {
            put_f32(&mut h, OFF_PIXDIM + 4 * i, 1.0);
        }
        put_f32(&mut h, OFF_VOX_OFFSET, 352.0);
        put_f32(&mut h, OFF_SCL_SLOPE, slope);
        put_f32(&mut h, OFF_SCL_INTER, inter);
        h[OFF_MAGIC..OFF_MAGIC + 4].copy_from_slice(b"n+1\0");
        h.extend_from_slice(payload);
        h
    }

    #[test]
    fn integer_scaling_matches_slope_intercept() {
        let payload: Vec<u8> = [-3i16, 0, 7, 100].iter().flat_map(|v| v.to_le_bytes()).collect();
        let bytes = build(4, [4, 1, 1], &payload, false, 0.5, -2.0);
        let vol = parse_nifti1(&bytes).unwrap();
        assert_eq!(vol.voxels, vec![-3.5, -2.0, 1.5, 48.0]);
    }

    #[test]
    fn zero_slope_is_identity() {
        let bytes = build(2, [3, 1, 1], &[1, 2, 255], false, 0.0, 9.0);
        let vol = parse_nifti1(&bytes).unwrap();
        assert_eq!(vol.voxels, vec![1.0, 2.0, 255.0]);
        assert_eq!(vol.header.intensity_scale, 1.0);
        assert_eq!(vol.header.intensity_offset, 0.0);
    }

    #[test]
    fn unsupported_datatype() {
        let bytes = build(512, [1, 1, 1], &[0, 0], false, 1.0, 0.0);
        assert!(matches!(parse_nifti1(&bytes), Err(VolumeError::UnsupportedDatatype(512))));
    }

    #[test]
    fn short_payload() {
        let bytes = build(16, [2, 2, 2], &[0u8; 8], false, 1.0, 0.0);
        assert!(matches!(parse_nifti1(&bytes), Err(VolumeError::DimMismatch { expected: 32, actual: 8 })));
    }

    #[test]
    fn nan_payload_rejected() {
        let payload: Vec<u8> = [1.0f32, f32::NAN].iter().flat_map(|v| v.to_le_bytes()).collect();
        let bytes = build(16, [2, 1, 1], &payload, false, 1.0, 0.0);
        assert!(matches!(parse_nifti1(&bytes), Err(VolumeError::NonFinitePayload(1))));
    }

    #[test]
    fn gzip_stream() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let payload: Vec<u8> = [1.5f32, 2.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        let bytes = build(16, [2, 1, 1], &payload, false, 1.0, 0.0);
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(&bytes).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(parse_nifti1(&gz).unwrap().voxels, vec![1.5, 2.5]);
    }

    #[test]
    fn header_pair() {
        let payload: Vec<u8> = [4.0f64, 8.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let mut hdr = build(64, [2, 1, 1], &[], false, 1.0, 0.0);
        hdr.truncate(348);
        hdr[OFF_MAGIC..OFF_MAGIC + 4].copy_from_slice(b"ni1\0");
        hdr[OFF_VOX_OFFSET..OFF_VOX_OFFSET + 4].copy_from_slice(&0f32.to_le_bytes());
        assert_eq!(parse_nifti1_pair(&hdr, &payload).unwrap().voxels, vec![4.0, 8.0]);
    }

    #[test]
    fn four_d_series_rejected() {
        let mut bytes = build(2, [1, 1, 1], &[0, 0], false, 1.0, 0.0);
        bytes[OFF_DIM..OFF_DIM + 2].copy_from_slice(&4i16.to_le_bytes());
        bytes[OFF_DIM + 8..OFF_DIM + 10].copy_from_slice(&2i16.to_le_bytes());
        assert!(matches!(parse_nifti1(&bytes), Err(VolumeError::UnsupportedDims(_))));
    }
}
