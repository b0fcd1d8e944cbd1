//! On-disk formats.
//!
//! * Clip manifest: one JSON document listing clips, their rosters and
//!   per-frame mask files (paths relative to the manifest).
//! * Masks: binary PGM (P5, maxval 255). Label maps store object ids,
//!   hand-object and action-aware masks store 0/255.
//! * Rasters: `WMAP`/`PMAP` little-endian `f32` grids.
//! * Prediction, pseudo-label and weight manifests: JSON indices over the
//!   above, each with an optional `config` echo.

pub mod pgm;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clip::{ActionClip, FrameRecord, ObjectEntry, ObjectPrediction, PredictionSet};
use crate::error::{Error, Result};
use crate::labeling::{ObjectLabel, PseudoLabels, Reason};
use crate::loss::ClipWeights;
use crate::mask::{BinaryMask, LabelMap};
use crate::raster::{ProbRaster, WeightRaster, PROB_MAGIC};

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

/// Relative path string with forward slashes, stable across platforms.
fn rel(parts: &[&str]) -> String {
    parts.join("/")
}

/// Maps clip ids to unique, filesystem-safe directory names.
#[derive(Default)]
pub struct DirNames(HashSet<String>);

impl DirNames {
    pub fn name(&mut self, clip_id: &str) -> String {
        let base: String = clip_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let base = if base.is_empty() { "clip".to_string() } else { base };
        let mut name = base.clone();
        let mut k = 1;
        while !self.0.insert(name.clone()) {
            name = format!("{base}-{k}");
            k += 1;
        }
        name
    }
}

// ---------------------------------------------------------------- masks

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    let (h, w, px) = pgm::decode(&read_bytes(path)?).map_err(|e| Error::format(path, e))?;
    LabelMap::from_ids(h, w, px).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_label_map(path: &Path, map: &LabelMap) -> Result<()> {
    write_bytes(path, &pgm::encode(map.height(), map.width(), map.ids()))
}

/// Reads a 0/255 mask; any other sample value is rejected.
pub fn read_binary_mask(path: &Path) -> Result<BinaryMask> {
    let (h, w, px) = pgm::decode(&read_bytes(path)?).map_err(|e| Error::format(path, e))?;
    if let Some(v) = px.iter().find(|&&v| v != 0 && v != 255) {
        return Err(Error::format(path, format!("binary mask sample {v} is neither 0 nor 255")));
    }
    BinaryMask::from_bits(h, w, px.iter().map(|&v| v == 255).collect())
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_binary_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let px: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_bytes(path, &pgm::encode(mask.height(), mask.width(), &px))
}

// ---------------------------------------------------------------- rasters

pub fn write_weight_raster(path: &Path, weights: &WeightRaster) -> Result<()> {
    write_bytes(path, &weights.to_bytes())
}

pub fn read_weight_raster(path: &Path) -> Result<WeightRaster> {
    WeightRaster::from_bytes(&read_bytes(path)?).map_err(|e| Error::format(path, e))
}

/// Reads a probability raster stored either as PMAP or as an 8-bit PGM
/// (sample `v` maps to `v / 255`).
pub fn read_prob_raster(path: &Path) -> Result<ProbRaster> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(&PROB_MAGIC) {
        return ProbRaster::from_bytes(&bytes).map_err(|e| Error::format(path, e));
    }
    let (h, w, px) = pgm::decode(&bytes).map_err(|e| Error::format(path, e))?;
    ProbRaster::from_values(h, w, px.iter().map(|&v| f64::from(v) / 255.0).collect())
        .map_err(|e| Error::format(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RasterFormat {
    /// Full 32-bit precision.
    #[default]
    Pmap,
    /// `round(p * 255)` bytes.
    Pgm,
}

pub fn write_prob_raster(path: &Path, raster: &ProbRaster, format: RasterFormat) -> Result<()> {
    match format {
        RasterFormat::Pmap => write_bytes(path, &raster.to_bytes()),
        RasterFormat::Pgm => {
            let px: Vec<u8> = raster.values.iter().map(|&p| (p * 255.0).round() as u8).collect();
            write_bytes(path, &pgm::encode(raster.height, raster.width, &px))
        }
    }
}

// ---------------------------------------------------------------- clips

#[derive(Debug, Serialize, Deserialize)]
struct ManifestDoc {
    clips: Vec<ClipDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClipDoc {
    clip_id: String,
    narration: String,
    height: usize,
    width: usize,
    objects: Vec<ObjectDoc>,
    frames: Vec<FrameDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectDoc {
    id: u32,
    name: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameDoc {
    t: u32,
    label_map: String,
    hand_object: String,
}

/// Loads and fully validates every clip of a manifest.
pub fn load_manifest(path: &Path) -> Result<Vec<ActionClip>> {
    let doc: ManifestDoc = read_json(path)?;
    let base = base_dir(path);
    let mut seen = HashSet::new();
    let mut clips = Vec::with_capacity(doc.clips.len());
    for c in doc.clips {
        if !seen.insert(c.clip_id.clone()) {
            return Err(Error::clip(&c.clip_id, "duplicate clip id in manifest"));
        }
        let mut objects = Vec::with_capacity(c.objects.len());
        for o in &c.objects {
            if o.id == 0 || o.id > 255 {
                return Err(Error::clip(
                    &c.clip_id,
                    format!("object id {} outside 1..=255", o.id),
                ));
            }
            objects.push(ObjectEntry {
                id: o.id as u8,
                name: o.name.clone(),
            });
        }
        let mut frames = Vec::with_capacity(c.frames.len());
        for f in &c.frames {
            let ctx = |e: Error| Error::clip(&c.clip_id, format!("frame t={}: {e}", f.t));
            let label_map = read_label_map(&base.join(&f.label_map)).map_err(ctx)?;
            let hand_object = read_binary_mask(&base.join(&f.hand_object)).map_err(ctx)?;
            frames.push(FrameRecord {
                t: f.t,
                label_map,
                hand_object,
            });
        }
        let clip = ActionClip {
            clip_id: c.clip_id,
            narration: c.narration,
            height: c.height,
            width: c.width,
            objects,
            frames,
        };
        clip.validate()?;
        clips.push(clip);
    }
    Ok(clips)
}

/// Writes `manifest.json` plus per-frame PGMs under `dir`; returns the
/// manifest path.
pub fn write_manifest(dir: &Path, clips: &[ActionClip]) -> Result<PathBuf> {
    let mut names = DirNames::default();
    let mut docs = Vec::with_capacity(clips.len());
    for clip in clips {
        clip.validate()?;
        let sub = names.name(&clip.clip_id);
        let mut frames = Vec::with_capacity(clip.frames.len());
        for f in &clip.frames {
            let lm = rel(&["masks", &sub, &format!("label_t{:05}.pgm", f.t)]);
            let ho = rel(&["masks", &sub, &format!("hand_t{:05}.pgm", f.t)]);
            write_label_map(&dir.join(&lm), &f.label_map)?;
            write_binary_mask(&dir.join(&ho), &f.hand_object)?;
            frames.push(FrameDoc {
                t: f.t,
                label_map: lm,
                hand_object: ho,
            });
        }
        docs.push(ClipDoc {
            clip_id: clip.clip_id.clone(),
            narration: clip.narration.clone(),
            height: clip.height,
            width: clip.width,
            objects: clip
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    id: o.id as u32,
                    name: o.name.clone(),
                })
                .collect(),
            frames,
        });
    }
    let path = dir.join("manifest.json");
    write_json(&path, &ManifestDoc { clips: docs })?;
    Ok(path)
}

// ---------------------------------------------------------------- predictions

#[derive(Debug, Serialize, Deserialize)]
struct PredictionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    predictions: Vec<PredClipDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredClipDoc {
    clip_id: String,
    objects: Vec<PredObjectDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredObjectDoc {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cls_score: Option<f64>,
    #[serde(default)]
    frames: Vec<PredFrameDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredFrameDoc {
    t: u32,
    raster: String,
}

/// Loads a prediction manifest without reference clips. Only per-file
/// checks apply (ranges, formats, ids).
pub fn load_predictions_unchecked(path: &Path) -> Result<Vec<PredictionSet>> {
    let doc: PredictionDoc = read_json(path)?;
    let base = base_dir(path);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(doc.predictions.len());
    for c in doc.predictions {
        if !seen.insert(c.clip_id.clone()) {
            return Err(Error::clip(&c.clip_id, "duplicate clip id in predictions"));
        }
        let mut objects = BTreeMap::new();
        for o in c.objects {
            if o.id == 0 || o.id > 255 {
                return Err(Error::clip(&c.clip_id, format!("object id {} outside 1..=255", o.id)));
            }
            if let Some(s) = o.cls_score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::clip(
                        &c.clip_id,
                        format!("object {}: cls_score {s} outside [0,1]", o.id),
                    ));
                }
            }
            let mut frames = BTreeMap::new();
            for f in o.frames {
                let raster = read_prob_raster(&base.join(&f.raster)).map_err(|e| {
                    Error::clip(&c.clip_id, format!("object {} frame t={}: {e}", o.id, f.t))
                })?;
                if frames.insert(f.t, raster).is_some() {
                    return Err(Error::clip(
                        &c.clip_id,
                        format!("object {}: duplicate frame t={}", o.id, f.t),
                    ));
                }
            }
            let pred = ObjectPrediction {
                cls_score: o.cls_score,
                frames,
            };
            if objects.insert(o.id as u8, pred).is_some() {
                return Err(Error::clip(&c.clip_id, format!("duplicate object id {}", o.id)));
            }
        }
        out.push(PredictionSet {
            clip_id: c.clip_id,
            objects,
        });
    }
    Ok(out)
}

/// Loads predictions and aligns them with `clips`. Objects or frames absent
/// from the file become all-zero rasters; clips without predictions get an
/// all-zero set.
pub fn load_predictions(path: &Path, clips: &[ActionClip]) -> Result<Vec<PredictionSet>> {
    let mut raw: BTreeMap<String, PredictionSet> = load_predictions_unchecked(path)?
        .into_iter()
        .map(|p| (p.clip_id.clone(), p))
        .collect();
    let known: HashSet<&str> = clips.iter().map(|c| c.clip_id.as_str()).collect();
    if let Some(unknown) = raw.keys().find(|k| !known.contains(k.as_str())) {
        return Err(Error::UnknownClip(unknown.clone()));
    }
    clips
        .iter()
        .map(|clip| {
            let mut p = raw
                .remove(&clip.clip_id)
                .unwrap_or_else(|| PredictionSet::zeros_for(clip));
            p.conform_to(clip)?;
            Ok(p)
        })
        .collect()
}

/// Writes a prediction manifest at `path` with rasters in a sibling
/// directory named after the manifest stem.
pub fn write_predictions(
    path: &Path,
    preds: &[PredictionSet],
    format: RasterFormat,
    config: Option<serde_json::Value>,
) -> Result<()> {
    let base = base_dir(path);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "predictions".into());
    let raster_dir = format!("{stem}_rasters");
    let ext = match format {
        RasterFormat::Pmap => "pmap",
        RasterFormat::Pgm => "pgm",
    };
    let mut names = DirNames::default();
    let mut docs = Vec::with_capacity(preds.len());
    for p in preds {
        let sub = names.name(&p.clip_id);
        let mut objects = Vec::with_capacity(p.objects.len());
        for (&id, o) in &p.objects {
            let mut frames = Vec::with_capacity(o.frames.len());
            for (&t, r) in &o.frames {
                let relp = rel(&[&raster_dir, &sub, &format!("obj{id:03}_t{t:05}.{ext}")]);
                write_prob_raster(&base.join(&relp), r, format)?;
                frames.push(PredFrameDoc { t, raster: relp });
            }
            objects.push(PredObjectDoc {
                id: id as u32,
                cls_score: o.cls_score,
                frames,
            });
        }
        docs.push(PredClipDoc {
            clip_id: p.clip_id.clone(),
            objects,
        });
    }
    write_json(
        path,
        &PredictionDoc {
            config,
            predictions: docs,
        },
    )
}

// ---------------------------------------------------------------- pseudo-labels

#[derive(Debug, Serialize, Deserialize)]
struct LabelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    clips: Vec<LabelClipDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelClipDoc {
    clip_id: String,
    objects: Vec<LabelObjectDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelObjectDoc {
    id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    cls: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<Reason>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    frames: Vec<LabelFrameDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelFrameDoc {
    t: u32,
    mask: String,
}

/// Writes `pseudo_labels.json` and the action-aware masks under `dir`.
/// Object names are looked up in `clips` when available.
pub fn write_pseudo_labels(
    dir: &Path,
    labels: &[PseudoLabels],
    clips: &[ActionClip],
    config: Option<serde_json::Value>,
) -> Result<PathBuf> {
    let names_by_clip: BTreeMap<&str, &ActionClip> =
        clips.iter().map(|c| (c.clip_id.as_str(), c)).collect();
    let mut dirs = DirNames::default();
    let mut docs = Vec::with_capacity(labels.len());
    for l in labels {
        let sub = dirs.name(&l.clip_id);
        let clip = names_by_clip.get(l.clip_id.as_str());
        let mut objects = Vec::with_capacity(l.objects.len());
        for o in &l.objects {
            let mut frames = Vec::with_capacity(o.masks.len());
            for (&t, m) in &o.masks {
                let relp = rel(&["masks", &sub, &format!("act_obj{:03}_t{t:05}.pgm", o.id)]);
                write_binary_mask(&dir.join(&relp), m)?;
                frames.push(LabelFrameDoc { t, mask: relp });
            }
            objects.push(LabelObjectDoc {
                id: o.id as u32,
                name: clip.and_then(|c| c.object(o.id).ok()).map(|e| e.name.clone()),
                cls: o.cls as u8,
                reason: Some(o.reason),
                frames,
            });
        }
        docs.push(LabelClipDoc {
            clip_id: l.clip_id.clone(),
            objects,
        });
    }
    let path = dir.join("pseudo_labels.json");
    write_json(&path, &LabelDoc { config, clips: docs })?;
    Ok(path)
}

fn check_label_object(clip_id: &str, o: &LabelObjectDoc) -> Result<u8> {
    if o.id == 0 || o.id > 255 {
        return Err(Error::clip(clip_id, format!("object id {} outside 1..=255", o.id)));
    }
    if o.cls > 1 {
        return Err(Error::clip(clip_id, format!("object {}: cls must be 0 or 1, got {}", o.id, o.cls)));
    }
    Ok(o.id as u8)
}

/// Loads pseudo-labels including their masks.
pub fn load_pseudo_labels(path: &Path) -> Result<Vec<PseudoLabels>> {
    let doc: LabelDoc = read_json(path)?;
    let base = base_dir(path);
    doc.clips
        .into_iter()
        .map(|c| {
            let objects = c
                .objects
                .iter()
                .map(|o| {
                    let id = check_label_object(&c.clip_id, o)?;
                    let mut masks = BTreeMap::new();
                    for f in &o.frames {
                        let m = read_binary_mask(&base.join(&f.mask))?;
                        if o.cls == 0 && !m.is_blank() {
                            return Err(Error::clip(
                                &c.clip_id,
                                format!("object {id} is negative but its mask at t={} is not blank", f.t),
                            ));
                        }
                        masks.insert(f.t, m);
                    }
                    let cls = o.cls == 1;
                    Ok(ObjectLabel {
                        id,
                        cls,
                        reason: o.reason.unwrap_or(if cls { Reason::Narration } else { Reason::Negative }),
                        masks,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(PseudoLabels {
                clip_id: c.clip_id,
                objects,
            })
        })
        .collect()
}

/// Reads only the per-object positivity bits of a label file (masks, if
/// listed, are not opened). Human annotations use the same schema with the
/// `frames` list omitted.
pub fn load_positivity(path: &Path) -> Result<BTreeMap<String, BTreeMap<u8, bool>>> {
    let doc: LabelDoc = read_json(path)?;
    let mut out = BTreeMap::new();
    for c in doc.clips {
        let mut bits = BTreeMap::new();
        for o in &c.objects {
            let id = check_label_object(&c.clip_id, o)?;
            if bits.insert(id, o.cls == 1).is_some() {
                return Err(Error::clip(&c.clip_id, format!("duplicate object id {id}")));
            }
        }
        if out.insert(c.clip_id.clone(), bits).is_some() {
            return Err(Error::clip(&c.clip_id, "duplicate clip id in labels"));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- weights

#[derive(Debug, Serialize, Deserialize)]
struct WeightIndexDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    entries: Vec<WeightEntryDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightEntryDoc {
    clip_id: String,
    object_id: u32,
    t: u32,
    path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    histogram: Vec<(f32, usize)>,
}

/// One weight raster destined for a weight directory.
#[derive(Debug, Clone)]
pub struct WeightEntry {
    pub clip_id: String,
    pub object_id: u8,
    pub t: u32,
    pub raster: WeightRaster,
}

/// Writes `weights.json` and one WMAP per entry under `dir`.
pub fn write_weights(dir: &Path, entries: &[WeightEntry], config: Option<serde_json::Value>) -> Result<PathBuf> {
    let mut names = DirNames::default();
    let mut clip_dirs: BTreeMap<&str, String> = BTreeMap::new();
    let mut docs = Vec::with_capacity(entries.len());
    for e in entries {
        let sub = clip_dirs
            .entry(e.clip_id.as_str())
            .or_insert_with(|| names.name(&e.clip_id))
            .clone();
        let relp = rel(&[&sub, &format!("obj{:03}_t{:05}.wmap", e.object_id, e.t)]);
        write_weight_raster(&dir.join(&relp), &e.raster)?;
        docs.push(WeightEntryDoc {
            clip_id: e.clip_id.clone(),
            object_id: e.object_id as u32,
            t: e.t,
            path: relp,
            histogram: crate::weighting::weight_histogram(&e.raster).entries(),
        });
    }
    let path = dir.join("weights.json");
    write_json(&path, &WeightIndexDoc { config, entries: docs })?;
    Ok(path)
}

/// Loads a weight index (`weights.json` or the directory holding it).
pub fn load_weights(path: &Path) -> Result<BTreeMap<String, ClipWeights>> {
    let index = if path.is_dir() {
        path.join("weights.json")
    } else {
        path.to_path_buf()
    };
    let doc: WeightIndexDoc = read_json(&index)?;
    let base = base_dir(&index);
    let mut out: BTreeMap<String, ClipWeights> = BTreeMap::new();
    for e in doc.entries {
        if e.object_id == 0 || e.object_id > 255 {
            return Err(Error::clip(&e.clip_id, format!("object id {} outside 1..=255", e.object_id)));
        }
        let raster = read_weight_raster(&base.join(&e.path))?;
        let key = (e.object_id as u8, e.t);
        if out.entry(e.clip_id.clone()).or_default().insert(key, raster).is_some() {
            return Err(Error::clip(
                &e.clip_id,
                format!("duplicate weights for object {} t={}", e.object_id, e.t),
            ));
        }
    }
    Ok(out)
}
