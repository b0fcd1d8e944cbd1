//! Positive/negative segmentation metrics.
//!
//! Every evaluated object carries a ground-truth positivity bit and its
//! annotated region per frame. Positives are scored by IoU against their
//! region; negatives are also scored against their region, so n-mIoU and
//! n-cIoU measure how much of the inactive objects got segmented (lower is
//! better). gIoU credits a negative with 1 only if its final prediction is
//! empty in every frame.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clip::{ActionClip, PredictionSet};
use crate::error::{Error, Result};
use crate::mask::{check_dims, BinaryMask};
use crate::postprocess::{predicted_positive, PostprocessConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalObject {
    pub positive: Option<bool>,
    /// Annotated region per frame `t`; blank where the object is absent.
    pub regions: BTreeMap<u32, BinaryMask>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalLabels {
    pub clip_id: String,
    pub height: usize,
    pub width: usize,
    pub objects: BTreeMap<u8, EvalObject>,
}

impl EvalLabels {
    /// Regions come from the clip's label maps; bits from `positivity`.
    /// Roster objects missing from `positivity` are kept without a bit.
    pub fn from_clip(clip: &ActionClip, positivity: &BTreeMap<u8, bool>) -> Result<Self> {
        for &id in positivity.keys() {
            clip.object(id)?;
        }
        let objects = clip
            .objects
            .iter()
            .map(|o| {
                let regions = clip.frames.iter().map(|f| (f.t, f.label_map.mask_of(o.id))).collect();
                (
                    o.id,
                    EvalObject {
                        positive: positivity.get(&o.id).copied(),
                        regions,
                    },
                )
            })
            .collect();
        Ok(EvalLabels {
            clip_id: clip.clip_id.clone(),
            height: clip.height,
            width: clip.width,
            objects,
        })
    }
}

/// Cumulative IoU over aligned frames: sum of intersections over sum of
/// unions, 1 when both sums are zero.
pub fn per_object_iou(pred: &[BinaryMask], gt: &[BinaryMask]) -> Result<f64> {
    let (i, u) = overlap_totals(pred, gt)?;
    Ok(if u == 0 { 1.0 } else { i as f64 / u as f64 })
}

fn overlap_totals(pred: &[BinaryMask], gt: &[BinaryMask]) -> Result<(u64, u64)> {
    if pred.len() != gt.len() {
        return Err(Error::Malformed(format!(
            "{} predicted frames vs {} ground-truth frames",
            pred.len(),
            gt.len()
        )));
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (p, g) in pred.iter().zip(gt) {
        inter += p.intersection_area(g)? as u64;
        union += p.union_area(g)? as u64;
    }
    Ok((inter, union))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            (self.tn + self.tp) as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRow {
    pub clip_id: String,
    pub object_id: u8,
    pub positive: bool,
    pub predicted: bool,
    pub intersection: u64,
    pub union: u64,
    pub iou: f64,
    pub giou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub p_miou: f64,
    pub n_miou: f64,
    pub p_ciou: f64,
    pub n_ciou: f64,
    pub giou: f64,
    pub acc: f64,
    pub counts: Confusion,
    pub n_positive: usize,
    pub n_negative: usize,
    pub rows: Vec<ObjectRow>,
    pub notes: Vec<String>,
}

const NOTES: [&str; 3] = [
    "per-object IoU pools intersections and unions over all frames",
    "negatives are scored against their annotated regions (lower n-IoU is better)",
    "gIoU credits a negative only if its prediction is empty in every frame",
];

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn pooled<'a>(rows: impl Iterator<Item = &'a ObjectRow>) -> f64 {
    let (mut i, mut u, mut n) = (0u64, 0u64, 0usize);
    for r in rows {
        i += r.intersection;
        u += r.union;
        n += 1;
    }
    match (n, u) {
        (0, _) => 0.0,
        (_, 0) => 1.0,
        _ => i as f64 / u as f64,
    }
}

fn clip_rows(
    labels: &EvalLabels,
    pred: Option<&PredictionSet>,
    config: &PostprocessConfig,
) -> Result<Vec<ObjectRow>> {
    let mut rows = Vec::with_capacity(labels.objects.len());
    for (&id, obj) in &labels.objects {
        let positive = obj.positive.ok_or_else(|| {
            Error::clip(&labels.clip_id, format!("object {id} has no positivity bit"))
        })?;
        let pred_obj = pred.and_then(|p| p.objects.get(&id));
        let mut pred_masks = Vec::with_capacity(obj.regions.len());
        let mut gt_masks = Vec::with_capacity(obj.regions.len());
        for (t, region) in &obj.regions {
            let m = match pred_obj.and_then(|o| o.frames.get(t)) {
                Some(r) => {
                    check_dims(region.dims(), r.dims())?;
                    r.binarize(config.binarize_at)
                }
                None => BinaryMask::empty(labels.height, labels.width),
            };
            pred_masks.push(m);
            gt_masks.push(region.clone());
        }
        let (intersection, union) = overlap_totals(&pred_masks, &gt_masks)?;
        let iou = if union == 0 {
            1.0
        } else {
            intersection as f64 / union as f64
        };
        let predicted = match pred {
            Some(p) if p.objects.contains_key(&id) => predicted_positive(p, id, config)?,
            _ => false,
        };
        let giou = if positive {
            iou
        } else if pred_masks.iter().all(BinaryMask::is_blank) {
            1.0
        } else {
            0.0
        };
        rows.push(ObjectRow {
            clip_id: labels.clip_id.clone(),
            object_id: id,
            positive,
            predicted,
            intersection,
            union,
            iou,
            giou,
        });
    }
    Ok(rows)
}

/// Scores post-processed predictions. Clips or objects without predictions
/// count as empty masks with a negative decision.
pub fn compute_report(
    preds: &[PredictionSet],
    labels: &[EvalLabels],
    config: &PostprocessConfig,
) -> Result<MetricReport> {
    let mut by_clip: HashMap<&str, &PredictionSet> = HashMap::new();
    for p in preds {
        if by_clip.insert(p.clip_id.as_str(), p).is_some() {
            return Err(Error::Config(format!("duplicate predictions for clip '{}'", p.clip_id)));
        }
    }
    let mut order: Vec<&EvalLabels> = labels.iter().collect();
    order.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    if let Some(w) = order.windows(2).find(|w| w[0].clip_id == w[1].clip_id) {
        return Err(Error::Config(format!("duplicate labels for clip '{}'", w[0].clip_id)));
    }

    let per_clip: Vec<Vec<ObjectRow>> = order
        .par_iter()
        .map(|l| clip_rows(l, by_clip.get(l.clip_id.as_str()).copied(), config))
        .collect::<Result<_>>()?;
    let rows: Vec<ObjectRow> = per_clip.into_iter().flatten().collect();

    let mut counts = Confusion::default();
    for r in &rows {
        match (r.positive, r.predicted) {
            (true, true) => counts.tp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fp += 1,
            (true, false) => counts.fn_ += 1,
        }
    }
    let pos = || rows.iter().filter(|r| r.positive);
    let neg = || rows.iter().filter(|r| !r.positive);
    Ok(MetricReport {
        p_miou: mean(pos().map(|r| r.iou)),
        n_miou: mean(neg().map(|r| r.iou)),
        p_ciou: pooled(pos()),
        n_ciou: pooled(neg()),
        giou: mean(rows.iter().map(|r| r.giou)),
        acc: counts.accuracy(),
        counts,
        n_positive: pos().count(),
        n_negative: neg().count(),
        rows,
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
    })
}

/// `b - a` for each headline metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub p_miou: f64,
    pub n_miou: f64,
    pub p_ciou: f64,
    pub n_ciou: f64,
    pub giou: f64,
    pub acc: f64,
}

pub fn compare_reports(a: &MetricReport, b: &MetricReport) -> Result<MetricDeltas> {
    let keys = |r: &MetricReport| -> BTreeSet<(String, u8)> {
        r.rows.iter().map(|row| (row.clip_id.clone(), row.object_id)).collect()
    };
    if keys(a) != keys(b) || a.rows.len() != b.rows.len() {
        return Err(Error::Config("reports cover different object sets".into()));
    }
    Ok(MetricDeltas {
        p_miou: b.p_miou - a.p_miou,
        n_miou: b.n_miou - a.n_miou,
        p_ciou: b.p_ciou - a.p_ciou,
        n_ciou: b.n_ciou - a.n_ciou,
        giou: b.giou - a.giou,
        acc: b.acc - a.acc,
    })
}

impl MetricReport {
    /// Headline metrics as `metric,value` lines followed by the per-object rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (k, v) in [
            ("p_miou", self.p_miou),
            ("n_miou", self.n_miou),
            ("p_ciou", self.p_ciou),
            ("n_ciou", self.n_ciou),
            ("giou", self.giou),
            ("acc", self.acc),
        ] {
            s.push_str(&format!("{k},{v}\n"));
        }
        for (k, v) in [
            ("tp", self.counts.tp),
            ("tn", self.counts.tn),
            ("fp", self.counts.fp),
            ("fn", self.counts.fn_),
        ] {
            s.push_str(&format!("{k},{v}\n"));
        }
        s.push_str("\nclip_id,object_id,positive,predicted,intersection,union,iou,giou\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.clip_id,
                r.object_id,
                r.positive as u8,
                r.predicted as u8,
                r.intersection,
                r.union,
                r.iou,
                r.giou
            ));
        }
        s
    }
}
