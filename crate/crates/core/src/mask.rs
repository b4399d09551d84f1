//! Binary masks with a row-major run-length wire format.
//!
//! Wire format ("TMRL"): magic, u32 width, u32 height, then u32 run lengths
//! alternating false/true starting with a false run. All integers are
//! little-endian. The encoding is canonical: only the leading false run may
//! have length zero, so encode∘decode and decode∘encode are identities.

use crate::error::{Error, Result};

pub const RLE_MAGIC: &[u8; 4] = b"TMRL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    /// All-false mask. Panics if either dimension is zero.
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "mask dimensions must be positive");
        Mask {
            width,
            height,
            bits: vec![false; (width as usize) * (height as usize)],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::Invalid("mask dimensions must be positive".into()));
        }
        let expected = (width as usize) * (height as usize);
        if bits.len() != expected {
            return Err(Error::Invalid(format!(
                "mask bit count {} does not match {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y as usize) * (self.width as usize) + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[(y as usize) * (self.width as usize) + x as usize] = value;
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Fraction of true pixels: `count / (width · height)`.
    pub fn area_fraction(&self) -> f64 {
        self.count_true() as f64 / self.bits.len() as f64
    }

    pub fn same_size(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Logical OR with another mask of the same size.
    pub fn union(&self, other: &Mask) -> Result<Mask> {
        if !self.same_size(other) {
            return Err(Error::SizeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a || b)
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn union_in_place(&mut self, other: &Mask) -> Result<()> {
        if !self.same_size(other) {
            return Err(Error::SizeMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a = *a || b;
        }
        Ok(())
    }

    pub fn intersects(&self, other: &Mask) -> bool {
        self.same_size(other) && self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    /// Tight bounding box of true pixels as `(x0, y0, x1, y1)` with exclusive
    /// upper bounds, or `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0) = (u32::MAX, u32::MAX);
        let (mut x1, mut y1) = (0u32, 0u32);
        let mut found = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    found = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        found.then_some((x0, y0, x1, y1))
    }

    /// Nearest-neighbor resample. Source index is `dst · src_size / dst_size`
    /// in exact integer arithmetic, so resizing to the own size is identity.
    pub fn resize_nearest(&self, width: u32, height: u32) -> Result<Mask> {
        if width < 1 || height < 1 {
            return Err(Error::Invalid("resize target must be positive".into()));
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let mut out = Mask::new(width, height);
        for y in 0..height {
            let sy = ((y as u64 * self.height as u64) / height as u64) as u32;
            for x in 0..width {
                let sx = ((x as u64 * self.width as u64) / width as u64) as u32;
                if self.get(sx, sy) {
                    out.set(x, y, true);
                }
            }
        }
        Ok(out)
    }

    /// Row-major run lengths alternating false/true, starting with false.
    /// Only the first run may be zero.
    pub fn to_runs(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len: u32 = 0;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_runs(width: u32, height: u32, runs: &[u32]) -> Result<Mask> {
        if width < 1 || height < 1 {
            return Err(Error::Format("mask dimensions must be positive".into()));
        }
        let expected = (width as u64) * (height as u64);
        let total: u64 = runs.iter().map(|&r| r as u64).sum();
        if total != expected {
            return Err(Error::Format(format!(
                "run lengths sum to {total}, expected {expected}"
            )));
        }
        if runs.is_empty() {
            return Err(Error::Format("empty run list".into()));
        }
        // Canonical form: zero length only allowed for the leading false run.
        if runs[1..].contains(&0) {
            return Err(Error::Format("zero-length run after the first".into()));
        }
        let mut bits = Vec::with_capacity(expected as usize);
        let mut value = false;
        for &r in runs {
            bits.extend(std::iter::repeat_n(value, r as usize));
            value = !value;
        }
        Mask::from_bits(width, height, bits).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_rle_bytes(&self) -> Vec<u8> {
        let runs = self.to_runs();
        let mut out = Vec::with_capacity(12 + runs.len() * 4);
        out.extend_from_slice(RLE_MAGIC);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        for r in runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    pub fn from_rle_bytes(bytes: &[u8]) -> Result<Mask> {
        if bytes.len() < 12 {
            return Err(Error::Format("RLE blob shorter than header".into()));
        }
        if &bytes[0..4] != RLE_MAGIC {
            return Err(Error::Format("bad RLE magic, expected \"TMRL\"".into()));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let body = &bytes[12..];
        if !body.len().is_multiple_of(4) {
            return Err(Error::Format("RLE body is not a whole number of u32 runs".into()));
        }
        let runs: Vec<u32> = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Mask::from_runs(width, height, &runs)
    }
}
