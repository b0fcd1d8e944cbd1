//! Pixel-wise action-guided loss weights.
//!
//! Inside an object's region each pixel falls in exactly one case:
//!
//! | object mentioned | pixel                              | weight          |
//! |------------------|------------------------------------|-----------------|
//! | yes              | inside a hand-object box           | `lambda_pos`    |
//! | yes              | outside every box                  | `lambda_nar`    |
//! | no               | inside the hand-object mask        | `lambda_hobj`   |
//! | no               | outside every box                  | `lambda_neg`    |
//! | no               | inside a box, outside the mask     | 1               |
//!
//! Pixels outside the region get weight 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clip::ActionClip;
use crate::error::{Error, Result};
use crate::labeling::{hand_object_bboxes, narration_mentions, LabelingConfig};
use crate::raster::WeightRaster;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub lambda_pos: f32,
    pub lambda_nar: f32,
    pub lambda_hobj: f32,
    pub lambda_neg: f32,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            lambda_pos: 5.0,
            lambda_nar: 2.0,
            lambda_hobj: 2.0,
            lambda_neg: 5.0,
        }
    }
}

impl WeightConfig {
    /// Every lambda equal to 1; collapses the weighted loss to plain focal loss.
    pub fn uniform() -> Self {
        WeightConfig {
            lambda_pos: 1.0,
            lambda_nar: 1.0,
            lambda_hobj: 1.0,
            lambda_neg: 1.0,
        }
    }

    /// Strict check: all lambdas > 1 and `lambda_pos` above both
    /// `lambda_nar` and `lambda_hobj`.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("lambda-pos", self.lambda_pos),
            ("lambda-nar", self.lambda_nar),
            ("lambda-hobj", self.lambda_hobj),
            ("lambda-neg", self.lambda_neg),
        ];
        for (name, v) in all {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value > 1, got {v}")));
            }
        }
        if self.lambda_pos <= self.lambda_nar || self.lambda_pos <= self.lambda_hobj {
            return Err(Error::Config(format!(
                "lambda-pos ({}) must exceed lambda-nar ({}) and lambda-hobj ({})",
                self.lambda_pos, self.lambda_nar, self.lambda_hobj
            )));
        }
        Ok(())
    }

    fn ensure_positive(&self) -> Result<()> {
        for v in [self.lambda_pos, self.lambda_nar, self.lambda_hobj, self.lambda_neg] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("weights must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn value(&self, case: WeightCase) -> f32 {
        match case {
            WeightCase::Outside | WeightCase::Otherwise => 1.0,
            WeightCase::Positive => self.lambda_pos,
            WeightCase::Narrated => self.lambda_nar,
            WeightCase::HandObject => self.lambda_hobj,
            WeightCase::Negative => self.lambda_neg,
        }
    }
}

/// Which branch of the weight rule a pixel took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightCase {
    /// Not part of the object's region.
    Outside,
    Positive,
    Narrated,
    HandObject,
    Negative,
    /// In-region pixel of an unmentioned object, inside a box but off the mask.
    Otherwise,
}

/// Per-pixel case labels for `object_id` in frame `t`.
pub fn weight_cases(
    clip: &ActionClip,
    object_id: u8,
    t: u32,
    labeling: &LabelingConfig,
) -> Result<Vec<WeightCase>> {
    let object = clip.object(object_id)?;
    let frame = clip.frame(t)?;
    let mentioned = narration_mentions(&object.name, &clip.narration, labeling.match_mode);
    let boxes = hand_object_bboxes(&frame.hand_object, labeling.bbox_mode);
    let (h, w) = clip.dims();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            if frame.label_map.get(r, c) != object_id {
                out.push(WeightCase::Outside);
                continue;
            }
            let in_box = boxes.iter().any(|b| b.contains(r, c));
            let case = if mentioned {
                if in_box {
                    WeightCase::Positive
                } else {
                    WeightCase::Narrated
                }
            } else if frame.hand_object.get(r, c) {
                WeightCase::HandObject
            } else if !in_box {
                WeightCase::Negative
            } else {
                WeightCase::Otherwise
            };
            out.push(case);
        }
    }
    Ok(out)
}

/// Action-guided weight raster for one object in frame `t`.
///
/// Only requires positive lambdas; [`WeightConfig::validate`] enforces the
/// stricter ordering constraints and is applied by the CLI.
pub fn weight_map(
    clip: &ActionClip,
    object_id: u8,
    t: u32,
    labeling: &LabelingConfig,
    weights: &WeightConfig,
) -> Result<WeightRaster> {
    weights.ensure_positive()?;
    let cases = weight_cases(clip, object_id, t, labeling)?;
    let values = cases.into_iter().map(|c| weights.value(c)).collect();
    WeightRaster::from_values(clip.height, clip.width, values)
}

/// Value -> pixel count, keyed by the `f32` bit pattern to stay exact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightHistogram(BTreeMap<u32, usize>);

impl WeightHistogram {
    pub fn count(&self, value: f32) -> usize {
        self.0.get(&value.to_bits()).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    /// `(value, count)` pairs in ascending value order.
    pub fn entries(&self) -> Vec<(f32, usize)> {
        let mut v: Vec<(f32, usize)> = self.0.iter().map(|(&b, &n)| (f32::from_bits(b), n)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    pub fn merge(&mut self, other: &WeightHistogram) {
        for (&k, &n) in &other.0 {
            *self.0.entry(k).or_default() += n;
        }
    }
}

pub fn weight_histogram(raster: &WeightRaster) -> WeightHistogram {
    let mut map = BTreeMap::new();
    for v in &raster.values {
        *map.entry(v.to_bits()).or_default() += 1;
    }
    WeightHistogram(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::{FrameRecord, ObjectEntry};
    use crate::labeling::BBoxMode;
    use crate::mask::{BinaryMask, LabelMap};

    fn fixture(narration: &str, hand: BinaryMask, paint: &[(u8, usize, usize, usize, usize)]) -> ActionClip {
        let (h, w) = hand.dims();
        let mut lm = LabelMap::new(h, w);
        for &(id, r0, c0, r1, c1) in paint {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    lm.set(r, c, id);
                }
            }
        }
        ActionClip {
            clip_id: "w".into(),
            narration: narration.into(),
            height: h,
            width: w,
            objects: vec![
                ObjectEntry { id: 1, name: "knife".into() },
                ObjectEntry { id: 2, name: "bowl".into() },
            ],
            frames: vec![FrameRecord {
                t: 0,
                label_map: lm,
                hand_object: hand,
            }],
        }
    }

    #[test]
    fn unmentioned_object_away_from_hands_gets_lambda_neg() {
        let hand = BinaryMask::from_fn(16, 16, |r, c| r < 3 && c < 3);
        let clip = fixture("cut apple", hand, &[(2, 10, 10, 12, 13)]);
        let cfg = LabelingConfig::default();
        let w = weight_map(&clip, 2, 0, &cfg, &WeightConfig::default()).unwrap();
        let hist = weight_histogram(&w);
        assert_eq!(hist.count(5.0), 12);
        assert_eq!(hist.count(1.0), 256 - 12);
        assert_eq!(hist.total(), 256);
    }

    #[test]
    fn blank_region_is_all_ones() {
        let hand = BinaryMask::from_fn(8, 8, |r, c| r < 3 && c < 3);
        let clip = fixture("cut apple", hand, &[]);
        let w = weight_map(&clip, 1, 0, &LabelingConfig::default(), &WeightConfig::default()).unwrap();
        assert_eq!(w, WeightRaster::ones(8, 8));
    }

    #[test]
    fn mentioned_object_straddling_a_box() {
        let hand = BinaryMask::from_fn(8, 8, |r, c| (2..=4).contains(&r) && (2..=4).contains(&c));
        let clip = fixture("cut apple with knife", hand, &[(1, 3, 3, 3, 6)]);
        let w = weight_map(&clip, 1, 0, &LabelingConfig::default(), &WeightConfig::default()).unwrap();
        assert_eq!(w.get(3, 3), 5.0);
        assert_eq!(w.get(3, 4), 5.0);
        assert_eq!(w.get(3, 5), 2.0);
        assert_eq!(w.get(3, 6), 2.0);
        assert_eq!(w.get(0, 0), 1.0);
    }

    #[test]
    fn otherwise_case_needs_box_without_mask() {
        // L-shaped hand mask; its box covers (4,4) which the mask does not.
        let hand = BinaryMask::from_fn(8, 8, |r, c| (r == 1 && (1..=4).contains(&c)) || (c == 1 && (1..=4).contains(&r)));
        let clip = fixture("cut apple", hand, &[(2, 4, 4, 4, 5)]);
        let cfg = LabelingConfig::default();
        let cases = weight_cases(&clip, 2, 0, &cfg).unwrap();
        assert_eq!(cases[4 * 8 + 4], WeightCase::Otherwise);
        assert_eq!(cases[4 * 8 + 5], WeightCase::Negative);
        let global = LabelingConfig {
            bbox_mode: BBoxMode::Global,
            ..cfg
        };
        assert_eq!(weight_cases(&clip, 2, 0, &global).unwrap(), cases);
    }

    #[test]
    fn unit_lambdas_collapse_to_ones() {
        let hand = BinaryMask::from_fn(8, 8, |r, c| (2..=4).contains(&r) && (2..=4).contains(&c));
        let clip = fixture("cut apple with knife", hand, &[(1, 3, 3, 3, 6), (2, 5, 0, 7, 7)]);
        for id in [1, 2] {
            let w = weight_map(&clip, id, 0, &LabelingConfig::default(), &WeightConfig::uniform()).unwrap();
            assert_eq!(w, WeightRaster::ones(8, 8));
        }
    }

    #[test]
    fn errors_and_validation() {
        let hand = BinaryMask::empty(4, 4);
        let clip = fixture("x", hand, &[]);
        let cfg = LabelingConfig::default();
        assert!(weight_map(&clip, 7, 0, &cfg, &WeightConfig::default()).is_err());
        assert!(weight_map(&clip, 1, 3, &cfg, &WeightConfig::default()).is_err());
        let zero = WeightConfig {
            lambda_neg: 0.0,
            ..Default::default()
        };
        assert!(weight_map(&clip, 1, 0, &cfg, &zero).is_err());
        assert!(WeightConfig::default().validate().is_ok());
        assert!(WeightConfig::uniform().validate().is_err());
        let bad_order = WeightConfig {
            lambda_pos: 2.0,
            ..Default::default()
        };
        assert!(bad_order.validate().is_err());
    }
}
