//! Floating-point rasters: per-pixel loss weights and predicted probabilities.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Per-pixel loss weights for one object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRaster {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl WeightRaster {
    pub fn ones(height: usize, width: usize) -> Self {
        WeightRaster {
            height,
            width,
            values: vec![1.0; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::Malformed(format!(
                "weight raster of {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(WeightRaster {
            height,
            width,
            values,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.width + col]
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        WeightRaster {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Predicted foreground probabilities for one object in one frame.
///
/// Held as `f64` in memory; the on-disk form is 32-bit, so anything loaded
/// from a file is exactly representable in `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbRaster {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ProbRaster {
    pub fn zeros(height: usize, width: usize) -> Self {
        ProbRaster {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::Malformed(format!(
                "probability raster of {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Malformed(format!(
                "probability {v} at pixel {i} outside [0,1]"
            )));
        }
        Ok(ProbRaster {
            height,
            width,
            values,
        })
    }

    /// 0/1 raster of a mask.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        ProbRaster {
            height: mask.height(),
            width: mask.width(),
            values: mask
                .bits()
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Foreground where `p >= threshold`.
    pub fn binarize(&self, threshold: f64) -> BinaryMask {
        BinaryMask::from_bits(
            self.height,
            self.width,
            self.values.iter().map(|&p| p >= threshold).collect(),
        )
        .expect("raster dimensions are valid")
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub const WEIGHT_MAGIC: [u8; 4] = *b"WMAP";
pub const PROB_MAGIC: [u8; 4] = *b"PMAP";

/// Serializes `magic`, `u32` LE height and width, then LE `f32` values.
pub fn encode_f32_raster(magic: [u8; 4], height: usize, width: usize, values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + values.len() * 4);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&(width as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_f32_raster`]. The error string names the problem;
/// callers attach the path.
pub fn decode_f32_raster(
    magic: [u8; 4],
    bytes: &[u8],
) -> std::result::Result<(usize, usize, Vec<f32>), String> {
    if bytes.len() < 12 {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if bytes[..4] != magic {
        return Err(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(&magic)
        ));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if h == 0 || w == 0 {
        return Err(format!("zero dimension {h}x{w}"));
    }
    let body = &bytes[12..];
    let need = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| format!("dimensions {h}x{w} overflow"))?;
    if body.len() != need {
        return Err(format!(
            "payload is {} bytes, expected {need} for {h}x{w}",
            body.len()
        ));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((h, w, values))
}

impl WeightRaster {
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_f32_raster(WEIGHT_MAGIC, self.height, self.width, &self.values)
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let (height, width, values) = decode_f32_raster(WEIGHT_MAGIC, bytes)?;
        Ok(WeightRaster {
            height,
            width,
            values,
        })
    }
}

impl ProbRaster {
    /// PMAP bytes. Values are narrowed to `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let values: Vec<f32> = self.values.iter().map(|&v| v as f32).collect();
        encode_f32_raster(PROB_MAGIC, self.height, self.width, &values)
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let (h, w, values) = decode_f32_raster(PROB_MAGIC, bytes)?;
        ProbRaster::from_values(h, w, values.into_iter().map(f64::from).collect())
            .map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_integers_round_trip() {
        let w = WeightRaster::from_values(1, 3, vec![1.0, 2.0, 5.0]).unwrap();
        let bytes = w.to_bytes();
        assert_eq!(&bytes[..4], b"WMAP");
        assert_eq!(&bytes[4..12], &[1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(WeightRaster::from_bytes(&bytes).unwrap(), w);
        let ones = WeightRaster::ones(4, 4);
        assert_eq!(WeightRaster::from_bytes(&ones.to_bytes()).unwrap(), ones);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let w = WeightRaster::ones(2, 2);
        let mut bytes = w.to_bytes();
        assert!(ProbRaster::from_bytes(&bytes).is_err());
        bytes.pop();
        assert!(WeightRaster::from_bytes(&bytes).unwrap_err().contains("payload"));
        assert!(WeightRaster::from_bytes(b"WMA").is_err());
    }

    #[test]
    fn probabilities_out_of_range_rejected() {
        assert!(ProbRaster::from_values(1, 2, vec![0.5, 1.5]).is_err());
        let bytes = encode_f32_raster(PROB_MAGIC, 1, 1, &[-0.25]);
        assert!(ProbRaster::from_bytes(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn weight_bytes_round_trip(h in 1usize..6, w in 1usize..6, seed in proptest::collection::vec(any::<u32>(), 36)) {
            let values: Vec<f32> = (0..h * w).map(|i| f32::from_bits(seed[i] & 0x7f7f_ffff)).collect();
            let r = WeightRaster::from_values(h, w, values).unwrap();
            let bytes = r.to_bytes();
            let back = WeightRaster::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
