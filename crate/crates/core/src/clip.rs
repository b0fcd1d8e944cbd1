//! In-memory dataset entities: action clips and the prediction sets scored
//! against them.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, LabelMap};
use crate::raster::ProbRaster;

/// One entry of a clip's object roster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: u8,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub t: u32,
    pub label_map: LabelMap,
    /// Hands plus in-contact objects; may be blank.
    pub hand_object: BinaryMask,
}

/// A single action instance: narration, object roster and annotated frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionClip {
    pub clip_id: String,
    pub narration: String,
    pub height: usize,
    pub width: usize,
    pub objects: Vec<ObjectEntry>,
    pub frames: Vec<FrameRecord>,
}

impl ActionClip {
    /// Checks every structural invariant, naming the offending frame or object.
    pub fn validate(&self) -> Result<()> {
        let id = self.clip_id.as_str();
        if self.height == 0 || self.width == 0 {
            return Err(Error::clip(id, "height and width must be >= 1"));
        }
        if self.frames.is_empty() {
            return Err(Error::clip(id, "clip has no frames"));
        }
        let mut roster = [false; 256];
        for o in &self.objects {
            if o.id == 0 {
                return Err(Error::clip(id, "object id 0 is reserved for background"));
            }
            if o.name.trim().is_empty() {
                return Err(Error::clip(id, format!("object {} has an empty name", o.id)));
            }
            if roster[o.id as usize] {
                return Err(Error::clip(id, format!("duplicate object id {}", o.id)));
            }
            roster[o.id as usize] = true;
        }
        let mut seen_t = HashSet::new();
        for f in &self.frames {
            if !seen_t.insert(f.t) {
                return Err(Error::clip(id, format!("duplicate frame t={}", f.t)));
            }
            if f.label_map.dims() != (self.height, self.width) {
                return Err(Error::clip(
                    id,
                    format!(
                        "frame t={}: label map is {}x{}, clip is {}x{}",
                        f.t,
                        f.label_map.height(),
                        f.label_map.width(),
                        self.height,
                        self.width
                    ),
                ));
            }
            if f.hand_object.dims() != (self.height, self.width) {
                return Err(Error::clip(
                    id,
                    format!(
                        "frame t={}: hand-object mask is {}x{}, clip is {}x{}",
                        f.t,
                        f.hand_object.height(),
                        f.hand_object.width(),
                        self.height,
                        self.width
                    ),
                ));
            }
            if let Some(bad) = f
                .label_map
                .present_ids()
                .into_iter()
                .find(|&v| !roster[v as usize])
            {
                return Err(Error::clip(
                    id,
                    format!("frame t={}: label map references unknown object id {bad}", f.t),
                ));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: u8) -> Result<&ObjectEntry> {
        self.objects
            .iter()
            .find(|o| o.id == id)
            .ok_or_else(|| Error::UnknownObject {
                clip: self.clip_id.clone(),
                id: id as u32,
            })
    }

    pub fn frame(&self, t: u32) -> Result<&FrameRecord> {
        self.frames
            .iter()
            .find(|f| f.t == t)
            .ok_or_else(|| Error::UnknownFrame {
                clip: self.clip_id.clone(),
                t,
            })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Ground-truth region of `id` in every frame, in frame order.
    pub fn object_masks(&self, id: u8) -> Vec<BinaryMask> {
        self.frames.iter().map(|f| f.label_map.mask_of(id)).collect()
    }
}

/// Model output for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectPrediction {
    /// Classification score in `[0, 1]`, absent for head-less predictors.
    pub cls_score: Option<f64>,
    /// Per-frame rasters keyed by frame index `t`.
    pub frames: BTreeMap<u32, ProbRaster>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub clip_id: String,
    pub objects: BTreeMap<u8, ObjectPrediction>,
}

impl PredictionSet {
    /// Predictions for `clip` with every object and frame at zero.
    pub fn zeros_for(clip: &ActionClip) -> Self {
        let objects = clip
            .objects
            .iter()
            .map(|o| {
                let frames = clip
                    .frames
                    .iter()
                    .map(|f| (f.t, ProbRaster::zeros(clip.height, clip.width)))
                    .collect();
                (
                    o.id,
                    ObjectPrediction {
                        cls_score: None,
                        frames,
                    },
                )
            })
            .collect();
        PredictionSet {
            clip_id: clip.clip_id.clone(),
            objects,
        }
    }

    /// Fills objects and frames missing for `clip` with zero rasters and
    /// rejects anything that does not belong to it.
    pub fn conform_to(&mut self, clip: &ActionClip) -> Result<()> {
        for (&id, obj) in &self.objects {
            clip.object(id)?;
            if let Some(s) = obj.cls_score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::clip(
                        &clip.clip_id,
                        format!("object {id}: cls_score {s} outside [0,1]"),
                    ));
                }
            }
            for (&t, r) in &obj.frames {
                clip.frame(t)?;
                if r.dims() != clip.dims() {
                    return Err(Error::clip(
                        &clip.clip_id,
                        format!(
                            "object {id} frame t={t}: prediction is {}x{}, clip is {}x{}",
                            r.height, r.width, clip.height, clip.width
                        ),
                    ));
                }
            }
        }
        for o in &clip.objects {
            let entry = self.objects.entry(o.id).or_insert_with(|| ObjectPrediction {
                cls_score: None,
                frames: BTreeMap::new(),
            });
            for f in &clip.frames {
                entry
                    .frames
                    .entry(f.t)
                    .or_insert_with(|| ProbRaster::zeros(clip.height, clip.width));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: u8) -> Result<&ObjectPrediction> {
        self.objects.get(&id).ok_or_else(|| Error::UnknownObject {
            clip: self.clip_id.clone(),
            id: id as u32,
        })
    }
}
