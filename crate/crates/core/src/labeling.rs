//! Rule-based involvement labels for the objects of an action clip.
//!
//! An object is positive when any of the following holds, checked in order:
//!
//! 1. its name is mentioned by the narration;
//! 2. the hand-object mask covers at least `contact_threshold` of its region;
//! 3. its region intersects a hand-object bounding box.
//!
//! Positive objects keep their ground-truth region as the action-aware mask,
//! negatives get an all-zero mask in every frame.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clip::ActionClip;
use crate::error::{Error, Result};
use crate::mask::{self, BBox, BinaryMask};

/// How hand-object bounding boxes are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BBoxMode {
    /// One box around the whole hand-object mask.
    Global,
    /// One box per 4-connected component.
    #[default]
    PerComponent,
}

/// How per-frame evidence is folded into a clip-level decision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameAgg {
    #[default]
    Any,
    All,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Every token of the object name must be a token of the narration.
    #[default]
    AllTokens,
    Substring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingConfig {
    pub contact_threshold: f64,
    pub bbox_mode: BBoxMode,
    pub frame_agg: FrameAgg,
    pub match_mode: MatchMode,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            contact_threshold: 0.5,
            bbox_mode: BBoxMode::PerComponent,
            frame_agg: FrameAgg::Any,
            match_mode: MatchMode::AllTokens,
        }
    }
}

impl LabelingConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.contact_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!(
                "contact threshold must lie in (0, 1], got {t}"
            )));
        }
        Ok(())
    }
}

/// Why an object was labeled the way it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    Narration,
    HandContact,
    BboxIntersect,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectLabel {
    pub id: u8,
    pub cls: bool,
    pub reason: Reason,
    /// Action-aware mask per frame index `t`.
    pub masks: BTreeMap<u32, BinaryMask>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoLabels {
    pub clip_id: String,
    pub objects: Vec<ObjectLabel>,
}

impl PseudoLabels {
    pub fn object(&self, id: u8) -> Result<&ObjectLabel> {
        self.objects
            .iter()
            .find(|o| o.id == id)
            .ok_or_else(|| Error::UnknownObject {
                clip: self.clip_id.clone(),
                id: id as u32,
            })
    }

    pub fn positivity(&self) -> BTreeMap<u8, bool> {
        self.objects.iter().map(|o| (o.id, o.cls)).collect()
    }
}

fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split_whitespace()
}

/// Whether the narration mentions the object, case-insensitively.
pub fn narration_mentions(object_name: &str, narration: &str, mode: MatchMode) -> bool {
    let name = object_name.to_lowercase();
    let narration = narration.to_lowercase();
    match mode {
        MatchMode::AllTokens => {
            let nar: Vec<&str> = tokens(&narration).collect();
            let mut name_tokens = tokens(&name).peekable();
            name_tokens.peek().is_some() && name_tokens.all(|tok| nar.contains(&tok))
        }
        MatchMode::Substring => {
            let name = name.trim();
            !name.is_empty() && narration.contains(name)
        }
    }
}

pub fn hand_object_bboxes(hand_object: &BinaryMask, mode: BBoxMode) -> Vec<BBox> {
    match mode {
        BBoxMode::Global => mask::bbox_of(hand_object).into_iter().collect(),
        BBoxMode::PerComponent => mask::connected_components(hand_object)
            .iter()
            .filter_map(mask::bbox_of)
            .collect(),
    }
}

/// Clip-level involvement bit and the first rule that fired.
pub fn classify_object(clip: &ActionClip, object_id: u8, config: &LabelingConfig) -> Result<(bool, Reason)> {
    let object = clip.object(object_id)?;
    if narration_mentions(&object.name, &clip.narration, config.match_mode) {
        return Ok((true, Reason::Narration));
    }

    // Frames without the object carry no evidence either way.
    let annotated: Vec<(BinaryMask, &BinaryMask)> = clip
        .frames
        .iter()
        .map(|f| (f.label_map.mask_of(object_id), &f.hand_object))
        .filter(|(m, _)| !m.is_blank())
        .collect();
    if annotated.is_empty() {
        return Ok((false, Reason::Negative));
    }

    let qualifies = |pred: &dyn Fn(&BinaryMask, &BinaryMask) -> Result<bool>| -> Result<bool> {
        let mut any = false;
        let mut all = true;
        for (obj, hand) in &annotated {
            let hit = pred(obj, hand)?;
            any |= hit;
            all &= hit;
        }
        Ok(match config.frame_agg {
            FrameAgg::Any => any,
            FrameAgg::All => all,
        })
    };

    let tau = config.contact_threshold;
    if qualifies(&|obj, hand| Ok(mask::coverage_ratio(obj, hand)? >= tau))? {
        return Ok((true, Reason::HandContact));
    }
    let mode = config.bbox_mode;
    if qualifies(&|obj, hand| Ok(mask::intersects_any_bbox(obj, &hand_object_bboxes(hand, mode))))? {
        return Ok((true, Reason::BboxIntersect));
    }
    Ok((false, Reason::Negative))
}

/// Runs the labeling rule over every roster object of `clip`.
pub fn build_pseudo_labels(clip: &ActionClip, config: &LabelingConfig) -> Result<PseudoLabels> {
    let objects = clip
        .objects
        .iter()
        .map(|o| {
            let (cls, reason) = classify_object(clip, o.id, config)?;
            let masks = clip
                .frames
                .iter()
                .map(|f| {
                    let m = if cls {
                        f.label_map.mask_of(o.id)
                    } else {
                        BinaryMask::empty(clip.height, clip.width)
                    };
                    (f.t, m)
                })
                .collect();
            Ok(ObjectLabel {
                id: o.id,
                cls,
                reason,
                masks,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PseudoLabels {
        clip_id: clip.clip_id.clone(),
        objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::{FrameRecord, ObjectEntry};
    use crate::mask::LabelMap;

    fn clip_with(
        narration: &str,
        objects: &[(u8, &str)],
        frames: Vec<(LabelMap, BinaryMask)>,
    ) -> ActionClip {
        let (h, w) = frames[0].0.dims();
        ActionClip {
            clip_id: "c".into(),
            narration: narration.into(),
            height: h,
            width: w,
            objects: objects
                .iter()
                .map(|&(id, name)| ObjectEntry {
                    id,
                    name: name.into(),
                })
                .collect(),
            frames: frames
                .into_iter()
                .enumerate()
                .map(|(t, (label_map, hand_object))| FrameRecord {
                    t: t as u32,
                    label_map,
                    hand_object,
                })
                .collect(),
        }
    }

    fn rect(lm: &mut LabelMap, id: u8, r0: usize, c0: usize, r1: usize, c1: usize) {
        for r in r0..=r1 {
            for c in c0..=c1 {
                lm.set(r, c, id);
            }
        }
    }

    fn rect_mask(h: usize, w: usize, r0: usize, c0: usize, r1: usize, c1: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |r, c| (r0..=r1).contains(&r) && (c0..=c1).contains(&c))
    }

    #[test]
    fn mention_examples() {
        let m = MatchMode::AllTokens;
        assert!(narration_mentions("knife", "cut apple with knife", m));
        assert!(narration_mentions("tofu container", "open tofu container", m));
        assert!(narration_mentions("Container Tofu", "open tofu container", m));
        assert!(!narration_mentions("pan", "put down pakage", m));
        assert!(!narration_mentions("nail", "paint nails", m));
        assert!(narration_mentions("nail", "paint nails", MatchMode::Substring));
        assert!(!narration_mentions("pan", "put down pakage", MatchMode::Substring));
    }

    #[test]
    fn bbox_modes() {
        assert!(hand_object_bboxes(&BinaryMask::empty(8, 8), BBoxMode::Global).is_empty());
        assert!(hand_object_bboxes(&BinaryMask::empty(8, 8), BBoxMode::PerComponent).is_empty());
        let one = rect_mask(8, 8, 1, 1, 3, 2);
        assert_eq!(
            hand_object_bboxes(&one, BBoxMode::Global),
            hand_object_bboxes(&one, BBoxMode::PerComponent)
        );
        let mut two = rect_mask(16, 16, 0, 0, 1, 1);
        for (r, c) in rect_mask(16, 16, 14, 13, 15, 15).foreground() {
            two.set(r, c, true);
        }
        assert_eq!(
            hand_object_bboxes(&two, BBoxMode::PerComponent),
            vec![BBox::new(0, 0, 1, 1), BBox::new(14, 13, 15, 15)]
        );
        assert_eq!(
            hand_object_bboxes(&two, BBoxMode::Global),
            vec![BBox::new(0, 0, 15, 15)]
        );
    }

    #[test]
    fn classify_each_branch() {
        let (h, w) = (16, 16);
        let mut lm = LabelMap::new(h, w);
        rect(&mut lm, 1, 0, 0, 1, 1); // knife, narrated, far from hands
        rect(&mut lm, 2, 6, 6, 7, 7); // inside the hand mask
        rect(&mut lm, 3, 9, 4, 10, 5); // straddles the hand box, mostly outside the mask
        rect(&mut lm, 4, 14, 14, 15, 15); // far away
        let mut hand = rect_mask(h, w, 5, 5, 9, 9);
        hand.set(9, 5, false);
        let clip = clip_with(
            "cut apple with knife",
            &[(1, "knife"), (2, "sponge"), (3, "bowl"), (4, "plate")],
            vec![(lm, hand)],
        );
        let cfg = LabelingConfig::default();
        assert_eq!(classify_object(&clip, 1, &cfg).unwrap(), (true, Reason::Narration));
        assert_eq!(classify_object(&clip, 2, &cfg).unwrap(), (true, Reason::HandContact));
        assert_eq!(classify_object(&clip, 3, &cfg).unwrap(), (true, Reason::BboxIntersect));
        assert_eq!(classify_object(&clip, 4, &cfg).unwrap(), (false, Reason::Negative));
        assert!(matches!(
            classify_object(&clip, 9, &cfg),
            Err(Error::UnknownObject { id: 9, .. })
        ));

        let labels = build_pseudo_labels(&clip, &cfg).unwrap();
        let neg = labels.object(4).unwrap();
        assert!(neg.masks.values().all(|m| m.is_blank()));
        let pos = labels.object(2).unwrap();
        assert_eq!(pos.masks[&0], clip.frames[0].label_map.mask_of(2));
    }

    #[test]
    fn frame_aggregation() {
        let (h, w) = (8, 8);
        let mut lm = LabelMap::new(h, w);
        rect(&mut lm, 1, 2, 2, 3, 3);
        let hand = rect_mask(h, w, 1, 1, 4, 4);
        let frames = vec![
            (lm.clone(), hand),
            (lm.clone(), BinaryMask::empty(h, w)),
            (LabelMap::new(h, w), BinaryMask::empty(h, w)),
        ];
        let clip = clip_with("open door", &[(1, "cup")], frames);
        let any = LabelingConfig::default();
        assert_eq!(classify_object(&clip, 1, &any).unwrap(), (true, Reason::HandContact));
        let all = LabelingConfig {
            frame_agg: FrameAgg::All,
            ..any
        };
        assert_eq!(classify_object(&clip, 1, &all).unwrap(), (false, Reason::Negative));
    }

    #[test]
    fn never_annotated_object_is_negative() {
        let lm = LabelMap::new(4, 4);
        let clip = clip_with("open door", &[(1, "cup")], vec![(lm, BinaryMask::full(4, 4))]);
        for agg in [FrameAgg::Any, FrameAgg::All] {
            let cfg = LabelingConfig {
                frame_agg: agg,
                ..Default::default()
            };
            assert_eq!(classify_object(&clip, 1, &cfg).unwrap(), (false, Reason::Negative));
        }
    }

    #[test]
    fn threshold_validation() {
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            let cfg = LabelingConfig {
                contact_threshold: bad,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
        assert!(LabelingConfig::default().validate().is_ok());
    }
}
