//! Anomaly score maps: per-pixel values in `[0, 1]`.
//!
//! Maps compute in `f64` and serialize as little-endian `f32` rasters
//! ("TMSF": magic, u32 width, u32 height, then width·height floats,
//! row-major).

use crate::error::{Error, Result};
use crate::mask::Mask;

pub const RASTER_MAGIC: &[u8; 4] = b"TMSF";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ScoreMap {
    /// All-zero map. Panics if either dimension is zero.
    pub fn zeros(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "map dimensions must be positive");
        ScoreMap {
            width,
            height,
            values: vec![0.0; (width as usize) * (height as usize)],
        }
    }

    /// Builds a map from raw values, clamping every entry into `[0, 1]`.
    /// Non-finite values are rejected.
    pub fn from_values(width: u32, height: u32, mut values: Vec<f64>) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::Invalid("map dimensions must be positive".into()));
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::Invalid(format!(
                "value count {} does not match {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("score map has non-finite value".into()));
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ScoreMap {
            width,
            height,
            values,
        })
    }

    /// 0/1 map from a mask.
    pub fn from_mask(mask: &Mask) -> Self {
        ScoreMap {
            width: mask.width(),
            height: mask.height(),
            values: mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn same_size(&self, other: &ScoreMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Maximum pixel value; the image-level anomaly score of this map.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Elementwise maximum of two equal-size maps.
    pub fn pixelwise_max(&self, other: &ScoreMap) -> Result<ScoreMap> {
        if !self.same_size(other) {
            return Err(Error::SizeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a.max(b))
            .collect();
        Ok(ScoreMap {
            width: self.width,
            height: self.height,
            values,
        })
    }

    /// Raises pixels under `mask` to at least `value` (clamped to `[0, 1]`).
    pub fn max_with_mask(&mut self, mask: &Mask, value: f64) -> Result<()> {
        if self.width != mask.width() || self.height != mask.height() {
            return Err(Error::SizeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: mask.width(),
                right_h: mask.height(),
            });
        }
        let value = value.clamp(0.0, 1.0);
        for (v, &b) in self.values.iter_mut().zip(mask.bits()) {
            if b {
                *v = v.max(value);
            }
        }
        Ok(())
    }

    /// Corner-aligned bilinear upsampling: output corners sample input
    /// corners exactly, so constant maps stay constant and values stay within
    /// the input min/max. Shrinking either dimension is an error.
    pub fn upsample_bilinear(&self, width: u32, height: u32) -> Result<ScoreMap> {
        if width < self.width || height < self.height {
            return Err(Error::Downsample {
                from_w: self.width,
                from_h: self.height,
                to_w: width,
                to_h: height,
            });
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let sample_pos = |dst: u32, dst_size: u32, src_size: u32| -> (u32, u32, f64) {
            if src_size == 1 || dst_size == 1 {
                return (0, 0, 0.0);
            }
            let pos = dst as f64 * (src_size - 1) as f64 / (dst_size - 1) as f64;
            let lo = pos.floor() as u32;
            let lo = lo.min(src_size - 1);
            let hi = (lo + 1).min(src_size - 1);
            (lo, hi, pos - lo as f64)
        };
        // lerp(a, b, t) = a + t·(b − a): exact at the endpoints and for a = b.
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let mut values = Vec::with_capacity((width as usize) * (height as usize));
        for y in 0..height {
            let (y0, y1, ty) = sample_pos(y, height, self.height);
            for x in 0..width {
                let (x0, x1, tx) = sample_pos(x, width, self.width);
                let top = lerp(self.get(x0, y0), self.get(x1, y0), tx);
                let bottom = lerp(self.get(x0, y1), self.get(x1, y1), tx);
                values.push(lerp(top, bottom, ty));
            }
        }
        ScoreMap::from_values(width, height, values)
    }

    pub fn to_raster_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.values.len() * 4);
        out.extend_from_slice(RASTER_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for &v in &self.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_raster_bytes(bytes: &[u8]) -> Result<ScoreMap> {
        if bytes.len() < 12 {
            return Err(Error::Format("raster blob shorter than header".into()));
        }
        if &bytes[0..4] != RASTER_MAGIC {
            return Err(Error::Format("bad raster magic, expected \"TMSF\"".into()));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if width < 1 || height < 1 {
            return Err(Error::Format("raster dimensions must be positive".into()));
        }
        let expected = (width as usize) * (height as usize) * 4;
        let body = &bytes[12..];
        if body.len() != expected {
            return Err(Error::Format(format!(
                "raster body is {} bytes, expected {expected}",
                body.len()
            )));
        }
        let mut values = Vec::with_capacity(expected / 4);
        for c in body.chunks_exact(4) {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Format("raster has non-finite value".into()));
            }
            values.push(v as f64);
        }
        ScoreMap::from_values(width, height, values)
    }
}
