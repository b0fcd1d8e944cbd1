//! Deterministic synthetic action clips with known involvement labels.
//!
//! Each clip places 0-2 hand blobs and a handful of objects, every object
//! built to satisfy exactly one labeling rule:
//!
//! * `Narrated`: named in the narration, anywhere in the frame (often
//!   straddling a hand box so both mentioned-object weight cases occur);
//! * `HandContact`: fully inside a hand blob;
//! * `BboxAdjacent`: touches a hand box while less than the contact
//!   threshold of it lies under the hand mask;
//! * `Negative`: clear of every hand box and not mentioned.
//!
//! The layout is static over time. Frame 0 shows everything; later frames
//! randomly drop objects and (under any-frame aggregation) the hand mask.
//! All randomness comes from [`SplitMix64`] so fixtures are identical on
//! every platform.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clip::{ActionClip, FrameRecord, ObjectEntry, ObjectPrediction, PredictionSet};
use crate::error::{Error, Result};
use crate::labeling::{narration_mentions, BBoxMode, FrameAgg, LabelingConfig, Reason};
use crate::mask::{BBox, BinaryMask, LabelMap};
use crate::raster::ProbRaster;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Rectangle,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Narrated,
    HandContact,
    BboxAdjacent,
    Negative,
}

impl Role {
    pub fn expected(self) -> (bool, Reason) {
        match self {
            Role::Narrated => (true, Reason::Narration),
            Role::HandContact => (true, Reason::HandContact),
            Role::BboxAdjacent => (true, Reason::BboxIntersect),
            Role::Negative => (false, Reason::Negative),
        }
    }

    fn needs_hands(self) -> bool {
        matches!(self, Role::HandContact | Role::BboxAdjacent)
    }
}

const VERBS: &[&str] = &[
    "cut", "open", "put", "take", "wash", "pick-up", "close", "pour", "stir", "dry",
];

const NOUNS: &[&str] = &[
    "knife", "apple", "tofu container", "pan", "bowl", "spoon", "cutting board", "plate",
    "sponge", "cup", "carrot", "onion", "lid", "bottle", "olive oil", "tea towel", "jar",
    "fork", "glass", "eggplant", "pot", "salt", "grater", "peeler",
];

/// Narration objects used when no roster object is mentioned.
const DECOYS: &[&str] = &["drawer", "door", "cupboard", "fridge", "light", "hob"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub clips: usize,
    pub frames_per_clip: usize,
    pub height: usize,
    pub width: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    pub shapes: Vec<Shape>,
    pub verbs: Vec<String>,
    pub nouns: Vec<String>,
    /// When nonempty, every clip gets exactly these roles, in order.
    pub forced_roles: Vec<Role>,
    /// The labeling rule the truth is stated against.
    pub labeling: LabelingConfig,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 42,
            clips: 8,
            frames_per_clip: 3,
            height: 64,
            width: 64,
            objects_min: 3,
            objects_max: 6,
            shapes: vec![Shape::Rectangle, Shape::Disk],
            verbs: VERBS.iter().map(|s| s.to_string()).collect(),
            nouns: NOUNS.iter().map(|s| s.to_string()).collect(),
            forced_roles: Vec::new(),
            labeling: LabelingConfig::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.clips == 0 || self.frames_per_clip == 0 {
            return bad("clips and frames must be >= 1".into());
        }
        if self.height < 24 || self.width < 24 {
            return bad(format!("grid must be at least 24x24, got {}x{}", self.height, self.width));
        }
        if self.objects_min == 0 || self.objects_min > self.objects_max || self.objects_max > 255 {
            return bad(format!(
                "object count range {}..={} must satisfy 1 <= min <= max <= 255",
                self.objects_min, self.objects_max
            ));
        }
        if self.forced_roles.len() > 255 {
            return bad("at most 255 forced roles".into());
        }
        if self.shapes.is_empty() || self.verbs.is_empty() {
            return bad("shape and verb lists must be nonempty".into());
        }
        let n_needed = self.objects_max.max(self.forced_roles.len());
        if self.nouns.len() < n_needed {
            return bad(format!("need at least {n_needed} nouns, got {}", self.nouns.len()));
        }
        self.labeling.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTruth {
    pub id: u8,
    pub name: String,
    pub role: Role,
    pub cls: u8,
    pub reason: Reason,
    pub shape: Shape,
    pub bbox: BBox,
    /// Frames (by `t`) where the object is annotated.
    pub present: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTruth {
    pub clip_id: String,
    pub hand_blobs: Vec<(Shape, BBox)>,
    /// Frames (by `t`) whose hand-object mask is blank.
    pub hands_hidden: Vec<u32>,
    pub narrated: Vec<String>,
    pub objects: Vec<ObjectTruth>,
}

impl ClipTruth {
    pub fn positivity(&self) -> BTreeMap<u8, bool> {
        self.objects.iter().map(|o| (o.id, o.cls == 1)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    pub labeling: LabelingConfig,
    pub clips: Vec<ClipTruth>,
}

#[derive(Debug, Clone)]
struct Blob {
    shape: Shape,
    mask: BinaryMask,
    bbox: BBox,
}

fn rasterize(shape: Shape, h: usize, w: usize, r0: usize, c0: usize, size_r: usize, size_c: usize) -> Option<Blob> {
    if r0 + size_r > h || c0 + size_c > w {
        return None;
    }
    let mask = match shape {
        Shape::Rectangle => BinaryMask::from_fn(h, w, |r, c| {
            (r0..r0 + size_r).contains(&r) && (c0..c0 + size_c).contains(&c)
        }),
        Shape::Disk => {
            // odd diameter so the disk is symmetric about an integer centre
            let d = size_r.min(size_c) | 1;
            let rad = (d / 2) as isize;
            let (cr, cc) = ((r0 + d / 2) as isize, (c0 + d / 2) as isize);
            BinaryMask::from_fn(h, w, |r, c| {
                let (dr, dc) = (r as isize - cr, c as isize - cc);
                dr * dr + dc * dc <= rad * rad
            })
        }
    };
    let bbox = crate::mask::bbox_of(&mask)?;
    Some(Blob { shape, mask, bbox })
}

fn overlaps(a: &BinaryMask, b: &BinaryMask) -> bool {
    a.bits().iter().zip(b.bits()).any(|(&x, &y)| x && y)
}

fn boxes_apart(a: &BBox, b: &BBox, gap: usize) -> bool {
    a.row_max + gap < b.row_min
        || b.row_max + gap < a.row_min
        || a.col_max + gap < b.col_min
        || b.col_max + gap < a.col_min
}

fn touches_box(m: &BinaryMask, b: &BBox) -> bool {
    m.foreground().any(|(r, c)| b.contains(r, c))
}

fn covered_fraction(obj: &BinaryMask, hand: &BinaryMask) -> f64 {
    let area = obj.area();
    let hit = obj.foreground().filter(|&(r, c)| hand.get(r, c)).count();
    hit as f64 / area as f64
}

struct Layout {
    blobs: Vec<Blob>,
    hand: BinaryMask,
    boxes: Vec<BBox>,
    objects: Vec<(Role, Blob)>,
}

const LAYOUT_ATTEMPTS: usize = 40;
const PLACEMENT_ATTEMPTS: usize = 400;

fn place_hands(p: &SynthParams, rng: &mut SplitMix64, k: usize) -> Option<Vec<Blob>> {
    let (h, w) = (p.height, p.width);
    let max_side = (h.min(w) / 3).max(11);
    let mut blobs: Vec<Blob> = Vec::new();
    for _ in 0..k {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let shape = *rng.pick(&p.shapes);
            let (sr, sc) = match shape {
                Shape::Rectangle => (rng.range(8, max_side), rng.range(8, max_side)),
                Shape::Disk => {
                    let d = rng.range(11, max_side);
                    (d, d)
                }
            };
            if sr >= h || sc >= w {
                continue;
            }
            let r0 = rng.range(0, h - sr);
            let c0 = rng.range(0, w - sc);
            let Some(b) = rasterize(shape, h, w, r0, c0, sr, sc) else { continue };
            if blobs.iter().all(|o| boxes_apart(&o.bbox, &b.bbox, 3)) {
                blobs.push(b);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    Some(blobs)
}

fn try_layout(p: &SynthParams, rng: &mut SplitMix64, k: usize, roles: &[Role]) -> Option<Layout> {
    let (h, w) = (p.height, p.width);
    let blobs = place_hands(p, rng, k)?;
    let mut hand = BinaryMask::empty(h, w);
    for b in &blobs {
        for (r, c) in b.mask.foreground() {
            hand.set(r, c, true);
        }
    }
    let boxes: Vec<BBox> = match p.labeling.bbox_mode {
        BBoxMode::PerComponent => blobs.iter().map(|b| b.bbox).collect(),
        BBoxMode::Global => blobs.iter().map(|b| b.bbox).reduce(|a, b| a.merge(&b)).into_iter().collect(),
    };
    let tau = p.labeling.contact_threshold;

    // hand-contact objects first: they need room inside the blobs
    let mut order: Vec<usize> = (0..roles.len()).collect();
    order.sort_by_key(|&i| match roles[i] {
        Role::HandContact => 0,
        Role::BboxAdjacent => 1,
        Role::Narrated => 2,
        Role::Negative => 3,
    });
    let mut placed: Vec<Option<Blob>> = vec![None; roles.len()];
    let mut occupied = BinaryMask::empty(h, w);
    let mut contact_used = vec![false; blobs.len()];
    for i in order {
        let role = roles[i];
        let mut ok = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let shape = *rng.pick(&p.shapes);
            let cand = match role {
                Role::HandContact => {
                    let free: Vec<usize> = (0..blobs.len()).filter(|&j| !contact_used[j]).collect();
                    if free.is_empty() {
                        return None;
                    }
                    let j = *rng.pick(&free);
                    let bb = blobs[j].bbox;
                    let s = rng.range(3, 5);
                    if bb.height() < s || bb.width() < s {
                        continue;
                    }
                    let r0 = rng.range(bb.row_min, bb.row_max + 1 - s);
                    let c0 = rng.range(bb.col_min, bb.col_max + 1 - s);
                    rasterize(shape, h, w, r0, c0, s, s).filter(|o| covered_fraction(&o.mask, &blobs[j].mask) == 1.0)
                }
                Role::BboxAdjacent | Role::Narrated if !boxes.is_empty() && (role == Role::BboxAdjacent || rng.chance(0.6)) => {
                    let bb = *rng.pick(&boxes);
                    let (sr, sc) = (rng.range(4, 9), rng.range(4, 9));
                    let r_lo = bb.row_min.saturating_sub(sr - 1);
                    let c_lo = bb.col_min.saturating_sub(sc - 1);
                    let r0 = rng.range(r_lo, bb.row_max.min(h - sr));
                    let c0 = rng.range(c_lo, bb.col_max.min(w - sc));
                    rasterize(shape, h, w, r0, c0, sr, sc).filter(|o| {
                        touches_box(&o.mask, &bb)
                            && o.mask.foreground().any(|(r, c)| !bb.contains(r, c))
                            && (role == Role::Narrated || covered_fraction(&o.mask, &hand) < tau)
                    })
                }
                Role::BboxAdjacent => None,
                Role::Narrated | Role::Negative => {
                    let (sr, sc) = (rng.range(4, 10), rng.range(4, 10));
                    let r0 = rng.range(0, h - sr);
                    let c0 = rng.range(0, w - sc);
                    rasterize(shape, h, w, r0, c0, sr, sc).filter(|o| {
                        role == Role::Narrated || boxes.iter().all(|b| !touches_box(&o.mask, b))
                    })
                }
            };
            if let Some(o) = cand {
                if !overlaps(&o.mask, &occupied) {
                    ok = Some(o);
                    break;
                }
            }
        }
        let o = ok?;
        if role == Role::HandContact {
            if let Some(j) = blobs.iter().position(|b| covered_fraction(&o.mask, &b.mask) == 1.0) {
                contact_used[j] = true;
            }
        }
        for (r, c) in o.mask.foreground() {
            occupied.set(r, c, true);
        }
        placed[i] = Some(o);
    }
    Some(Layout {
        blobs,
        hand,
        boxes,
        objects: roles.iter().copied().zip(placed.into_iter().map(Option::unwrap)).collect(),
    })
}

fn choose_roles(p: &SynthParams, rng: &mut SplitMix64, k: usize) -> Vec<Role> {
    if !p.forced_roles.is_empty() {
        return p.forced_roles.clone();
    }
    let n = rng.range(p.objects_min, p.objects_max);
    let mut roles = Vec::with_capacity(n);
    let mut contact = 0;
    let mut narrated = 0;
    for _ in 0..n {
        let x = rng.next_f64();
        let role = if k == 0 {
            if x < 0.35 && narrated < 2 { Role::Narrated } else { Role::Negative }
        } else if x < 0.2 && narrated < 2 {
            Role::Narrated
        } else if x < 0.4 && contact < k {
            Role::HandContact
        } else if x < 0.7 {
            Role::BboxAdjacent
        } else {
            Role::Negative
        };
        narrated += (role == Role::Narrated) as usize;
        contact += (role == Role::HandContact) as usize;
        roles.push(role);
    }
    roles
}

fn choose_names(p: &SynthParams, rng: &mut SplitMix64, n: usize) -> Option<Vec<String>> {
    let mut pool: Vec<&String> = p.nouns.iter().collect();
    rng.shuffle(&mut pool);
    let mut names: Vec<String> = Vec::with_capacity(n);
    for cand in pool {
        let cand = cand.to_lowercase();
        let clash = names.iter().any(|n| {
            n.split_whitespace().any(|t| cand.split_whitespace().any(|u| u == t))
                || n.contains(cand.as_str())
                || cand.contains(n.as_str())
        });
        if !clash && !cand.trim().is_empty() {
            names.push(cand);
            if names.len() == n {
                return Some(names);
            }
        }
    }
    None
}

fn generate_clip(p: &SynthParams, index: usize) -> Result<(ActionClip, ClipTruth)> {
    let mut rng = SplitMix64::derive(p.seed, index as u64);
    let clip_id = format!("synth-{}-{index:03}", p.seed);
    let mut k = [2, 1, 2, 0][index % 4];
    if p.forced_roles.iter().any(|r| r.needs_hands()) {
        let contacts = p.forced_roles.iter().filter(|&&r| r == Role::HandContact).count();
        k = k.max(1).max(contacts.min(2));
        if contacts > 2 {
            return Err(Error::Generation(format!("{contacts} hand-contact roles need more than two hands")));
        }
    }
    let (h, w) = (p.height, p.width);
    for _ in 0..LAYOUT_ATTEMPTS {
        let roles = choose_roles(p, &mut rng, k);
        let Some(layout) = try_layout(p, &mut rng, k, &roles) else { continue };
        let Some(names) = choose_names(p, &mut rng, roles.len()) else {
            return Err(Error::Generation("noun list too small for token-disjoint names".into()));
        };
        let verb = rng.pick(&p.verbs).clone();
        let narrated: Vec<String> = roles
            .iter()
            .zip(&names)
            .filter(|(r, _)| **r == Role::Narrated)
            .map(|(_, n)| n.clone())
            .collect();
        let narration = if narrated.is_empty() {
            format!("{verb} {}", rng.pick(DECOYS))
        } else {
            format!("{verb} {}", narrated.join(" and "))
        };
        let mode = p.labeling.match_mode;
        let mentions_ok = roles
            .iter()
            .zip(&names)
            .all(|(r, n)| narration_mentions(n, &narration, mode) == (*r == Role::Narrated));
        if !mentions_ok {
            continue;
        }

        let t_count = p.frames_per_clip;
        let mut present = vec![vec![true; roles.len()]; t_count];
        let mut hands_shown = vec![true; t_count];
        for t in 1..t_count {
            for slot in present[t].iter_mut() {
                *slot = rng.chance(0.75);
            }
            if p.labeling.frame_agg == FrameAgg::Any && k > 0 {
                hands_shown[t] = rng.chance(0.7);
            }
        }
        let frames = (0..t_count)
            .map(|t| {
                let mut lm = LabelMap::new(h, w);
                for (i, (_, blob)) in layout.objects.iter().enumerate() {
                    if present[t][i] {
                        for (r, c) in blob.mask.foreground() {
                            lm.set(r, c, i as u8 + 1);
                        }
                    }
                }
                FrameRecord {
                    t: t as u32,
                    label_map: lm,
                    hand_object: if hands_shown[t] { layout.hand.clone() } else { BinaryMask::empty(h, w) },
                }
            })
            .collect();
        let objects = names
            .iter()
            .enumerate()
            .map(|(i, n)| ObjectEntry { id: i as u8 + 1, name: n.clone() })
            .collect();
        let clip = ActionClip {
            clip_id: clip_id.clone(),
            narration,
            height: h,
            width: w,
            objects,
            frames,
        };
        let truth = ClipTruth {
            clip_id,
            hand_blobs: layout.blobs.iter().map(|b| (b.shape, b.bbox)).collect(),
            hands_hidden: (0..t_count).filter(|&t| !hands_shown[t]).map(|t| t as u32).collect(),
            narrated,
            objects: layout
                .objects
                .iter()
                .enumerate()
                .map(|(i, (role, blob))| {
                    let (cls, reason) = role.expected();
                    ObjectTruth {
                        id: i as u8 + 1,
                        name: names[i].clone(),
                        role: *role,
                        cls: cls as u8,
                        reason,
                        shape: blob.shape,
                        bbox: blob.bbox,
                        present: (0..t_count).filter(|&t| present[t][i]).map(|t| t as u32).collect(),
                    }
                })
                .collect(),
        };
        debug_assert!(layout.boxes.len() <= 2);
        return Ok((clip, truth));
    }
    Err(Error::Generation(format!(
        "clip {index}: no feasible layout after {LAYOUT_ATTEMPTS} attempts on a {h}x{w} grid"
    )))
}

/// Generates `params.clips` clips and their construction truth.
pub fn generate(params: &SynthParams) -> Result<(Vec<ActionClip>, SynthTruth)> {
    params.validate()?;
    let mut clips = Vec::with_capacity(params.clips);
    let mut truths = Vec::with_capacity(params.clips);
    for i in 0..params.clips {
        let (c, t) = generate_clip(params, i)?;
        clips.push(c);
        truths.push(t);
    }
    Ok((
        clips,
        SynthTruth {
            seed: params.seed,
            labeling: params.labeling,
            clips: truths,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PredictionMode {
    /// Action-aware masks with score 1 for positives and 0 for negatives.
    Perfect,
    /// Blank masks, score 0.
    Empty,
    /// Every object segmented regardless of involvement; scores follow the
    /// truth bit.
    Leaky,
    /// Perfect masks with each pixel flipped with probability `sigma` and
    /// scores jittered by up to `sigma`.
    Noisy { sigma: f64, seed: u64 },
}

impl PredictionMode {
    pub fn name(&self) -> String {
        match self {
            PredictionMode::Perfect => "perfect".into(),
            PredictionMode::Empty => "empty".into(),
            PredictionMode::Leaky => "leaky".into(),
            PredictionMode::Noisy { sigma, .. } => format!("noisy-{sigma}"),
        }
    }
}

/// Synthetic model outputs for generated clips.
pub fn generate_predictions(clips: &[ActionClip], truth: &SynthTruth, mode: PredictionMode) -> Result<Vec<PredictionSet>> {
    let truths: BTreeMap<&str, &ClipTruth> = truth.clips.iter().map(|c| (c.clip_id.as_str(), c)).collect();
    clips
        .iter()
        .enumerate()
        .map(|(ci, clip)| {
            let ct = truths
                .get(clip.clip_id.as_str())
                .ok_or_else(|| Error::UnknownClip(clip.clip_id.clone()))?;
            let pos = ct.positivity();
            let mut rng = match mode {
                PredictionMode::Noisy { seed, .. } => SplitMix64::derive(seed, ci as u64),
                _ => SplitMix64::new(0),
            };
            let mut objects = BTreeMap::new();
            for o in &clip.objects {
                let positive = *pos
                    .get(&o.id)
                    .ok_or_else(|| Error::UnknownObject { clip: clip.clip_id.clone(), id: o.id as u32 })?;
                let truth_score = if positive { 1.0 } else { 0.0 };
                let mut frames = BTreeMap::new();
                for f in &clip.frames {
                    let region = f.label_map.mask_of(o.id);
                    let raster = match mode {
                        PredictionMode::Perfect if positive => ProbRaster::from_mask(&region),
                        PredictionMode::Perfect | PredictionMode::Empty => ProbRaster::zeros(clip.height, clip.width),
                        PredictionMode::Leaky => ProbRaster::from_mask(&region),
                        PredictionMode::Noisy { sigma, .. } => {
                            let base = if positive { region } else { BinaryMask::empty(clip.height, clip.width) };
                            let flipped = BinaryMask::from_bits(
                                clip.height,
                                clip.width,
                                base.bits().iter().map(|&b| b ^ rng.chance(sigma)).collect(),
                            )?;
                            ProbRaster::from_mask(&flipped)
                        }
                    };
                    frames.insert(f.t, raster);
                }
                let cls_score = match mode {
                    PredictionMode::Perfect | PredictionMode::Leaky => truth_score,
                    PredictionMode::Empty => 0.0,
                    PredictionMode::Noisy { sigma, .. } => {
                        let jitter = (rng.next_f64() * 2.0 - 1.0) * sigma;
                        // f32-representable so PMAP/JSON round trips are exact
                        f64::from(((truth_score - jitter.abs() * (2.0 * truth_score - 1.0)).clamp(0.0, 1.0)) as f32)
                    }
                };
                objects.insert(o.id, ObjectPrediction { cls_score: Some(cls_score), frames });
            }
            Ok(PredictionSet { clip_id: clip.clip_id.clone(), objects })
        })
        .collect()
}
