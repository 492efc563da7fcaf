//! FRAS raster container.
//!
//! Layout (little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `FRAS`                   |
//! | 4      | 4    | version (u32, currently 1)     |
//! | 8      | 4    | width (u32)                    |
//! | 12     | 4    | height (u32)                   |
//! | 16     | 4    | channels (u32)                 |
//! | 20     | 1    | element type: 0 = u8, 1 = f32  |
//! | 21     | 3    | zero padding                   |
//! | 24     | ...  | payload                        |
//!
//! The payload is row-major with channels interleaved per pixel. Pixel
//! centers sit at integer coordinates, origin top-left, x right, y down.

use std::path::Path;

use crate::geometry::{DepthMap, FlowField, MaskProposal};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"FRAS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub enum RasterData {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

/// Header fields of a FRAS file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub is_f32: bool,
}

impl RasterHeader {
    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Schema("not a FRAS raster (bad magic)".into()));
        }
        let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let version = word(4) as u32;
        if version != VERSION {
            return Err(Error::Schema(format!("unsupported FRAS version {version}")));
        }
        let is_f32 = match bytes[20] {
            0 => false,
            1 => true,
            t => return Err(Error::Schema(format!("unknown FRAS element type {t}"))),
        };
        Ok(Self { width: word(8), height: word(12), channels: word(16), is_f32 })
    }

    pub fn payload_len(&self) -> Option<usize> {
        self.width.checked_mul(self.height)?.checked_mul(self.channels)?.checked_mul(if self.is_f32 { 4 } else { 1 })
    }

    /// Reads only the header and checks the file length against it.
    pub fn probe(path: &Path) -> Result<Self> {
        use std::io::Read;
        let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut buf = [0u8; HEADER_LEN];
        let with_path = |m: String| Error::Schema(format!("{}: {m}", path.display()));
        file.read_exact(&mut buf).map_err(|_| with_path("truncated FRAS header".into()))?;
        let header = Self::parse(&buf).map_err(|e| with_path(e.to_string()))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
        let expected = header.payload_len().ok_or_else(|| with_path("raster dimensions overflow".into()))?;
        if len != HEADER_LEN + expected {
            return Err(with_path(format!("payload is {} bytes, expected {expected}", len.saturating_sub(HEADER_LEN))));
        }
        Ok(header)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: RasterData,
}

impl Raster {
    pub fn u8(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        Self { width, height, channels, data: RasterData::U8(data) }.checked()
    }

    pub fn f32(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        Self { width, height, channels, data: RasterData::F32(data) }.checked()
    }

    fn checked(self) -> Result<Self> {
        let expected = self.width * self.height * self.channels;
        let len = match &self.data {
            RasterData::U8(v) => v.len(),
            RasterData::F32(v) => v.len(),
        };
        if len != expected {
            return Err(Error::Structural(format!("raster payload has {len} elements, expected {expected}")));
        }
        Ok(self)
    }

    pub fn encode(&self) -> Vec<u8> {
        let (tag, payload_len) = match &self.data {
            RasterData::U8(v) => (0u8, v.len()),
            RasterData::F32(v) => (1u8, v.len() * 4),
        };
        let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.channels as u32).to_le_bytes());
        out.extend_from_slice(&[tag, 0, 0, 0]);
        match &self.data {
            RasterData::U8(v) => out.extend_from_slice(v),
            RasterData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let header = RasterHeader::parse(bytes)?;
        let (width, height, channels) = (header.width, header.height, header.channels);
        let count = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::Schema("raster dimensions overflow".into()))?;
        let payload = &bytes[HEADER_LEN..];
        let data = if !header.is_f32 {
            if payload.len() != count {
                return Err(Error::Schema(format!("u8 payload is {} bytes, expected {count}", payload.len())));
            }
            RasterData::U8(payload.to_vec())
        } else {
            if payload.len() != count * 4 {
                return Err(Error::Schema(format!("f32 payload is {} bytes, expected {}", payload.len(), count * 4)));
            }
            RasterData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        };
        Ok(Self { width, height, channels, data })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes).map_err(|e| match e {
            Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, &self.encode())
    }

    fn expect_f32(self, channels: usize, what: &str) -> Result<(usize, usize, Vec<f32>)> {
        match self.data {
            RasterData::F32(v) if self.channels == channels => Ok((self.width, self.height, v)),
            _ => Err(Error::Schema(format!("{what} raster must be {channels}-channel f32"))),
        }
    }

    pub fn into_flow(self) -> Result<FlowField> {
        let (w, h, v) = self.expect_f32(2, "flow")?;
        FlowField::new(w, h, v)
    }

    pub fn into_depth(self) -> Result<DepthMap> {
        let (w, h, v) = self.expect_f32(1, "depth")?;
        DepthMap::new(w, h, v)
    }

    /// Single-channel f32 raster flattened, e.g. a per-frame proxy signal.
    pub fn into_values(self) -> Result<Vec<f32>> {
        let (_, _, v) = self.expect_f32(1, "signal")?;
        Ok(v)
    }

    /// Splits an N-channel u8 mask raster into proposals; `labels[c]` gives
    /// the id and concept of channel `c`. Nonzero bytes are in-mask.
    pub fn into_masks(self, labels: &[(String, String)]) -> Result<Vec<MaskProposal>> {
        let RasterData::U8(v) = self.data else {
            return Err(Error::Schema("mask raster must be u8".into()));
        };
        if labels.len() != self.channels {
            return Err(Error::Schema(format!(
                "mask raster has {} channels but {} proposals are listed",
                self.channels,
                labels.len()
            )));
        }
        let n = self.width * self.height;
        labels
            .iter()
            .enumerate()
            .map(|(c, (id, concept))| {
                let px = (0..n).map(|k| v[k * self.channels + c] != 0).collect();
                MaskProposal::new(id.clone(), concept.clone(), self.width, self.height, px)
            })
            .collect()
    }

    pub fn from_flow(flow: &FlowField) -> Self {
        Self { width: flow.width, height: flow.height, channels: 2, data: RasterData::F32(flow.data.clone()) }
    }

    pub fn from_depth(depth: &DepthMap) -> Self {
        Self { width: depth.width, height: depth.height, channels: 1, data: RasterData::F32(depth.depth.clone()) }
    }

    pub fn from_masks(width: usize, height: usize, masks: &[&MaskProposal]) -> Self {
        let channels = masks.len();
        let mut data = vec![0u8; width * height * channels];
        for (c, m) in masks.iter().enumerate() {
            for (k, &inside) in m.pixels.iter().enumerate() {
                if inside {
                    data[k * channels + c] = 255;
                }
            }
        }
        Self { width, height, channels, data: RasterData::U8(data) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let r = Raster::f32(3, 2, 1, vec![1.5; 6]).unwrap();
        let b = r.encode();
        assert_eq!(&b[..4], b"FRAS");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 2);
        assert_eq!(b[20], 1);
        assert_eq!(b.len(), 24 + 24);
        assert_eq!(&b[24..28], &1.5f32.to_le_bytes());
        assert_eq!(Raster::decode(&b).unwrap(), r);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(Raster::decode(b"NOPE").is_err());
        let mut b = Raster::u8(2, 2, 1, vec![0; 4]).unwrap().encode();
        b.pop();
        assert!(Raster::decode(&b).is_err());
        let mut b = Raster::u8(2, 2, 1, vec![0; 4]).unwrap().encode();
        b[20] = 7;
        assert!(Raster::decode(&b).is_err());
        assert!(Raster::u8(2, 2, 1, vec![0; 3]).is_err());
    }

    #[test]
    fn masks_split_by_channel() {
        let data = vec![255, 0, 0, 255, 255, 255, 0, 0];
        let r = Raster::u8(2, 2, 2, data).unwrap();
        let labels = vec![("a".to_string(), "cup".to_string()), ("b".to_string(), "pan".to_string())];
        let m = r.into_masks(&labels).unwrap();
        assert_eq!(m[0].pixels, vec![true, false, true, false]);
        assert_eq!(m[1].pixels, vec![false, true, true, false]);
        let back = Raster::from_masks(2, 2, &[&m[0], &m[1]]);
        assert_eq!(back.data, RasterData::U8(vec![255, 0, 0, 255, 255, 255, 0, 0]));
    }
}
