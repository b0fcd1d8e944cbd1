//! Focal loss and its action-guided weighted variant, with analytic
//! gradients with respect to the predicted probabilities.
//!
//! Per pixel, with `p` clamped to `[eps, 1 - eps]`:
//!
//! ```text
//! p_t     = p * y + (1 - p) * (1 - y)
//! alpha_t = alpha * y + (1 - alpha) * (1 - y)
//! term    = -w * alpha_t * (1 - p_t)^gamma * ln(p_t)
//! ```
//!
//! The frame loss is the mean of `term` over all `H * W` pixels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::PseudoLabels;
use crate::mask::{check_dims, BinaryMask};
use crate::raster::{ProbRaster, WeightRaster};
use crate::rng::SplitMix64;
use crate::clip::PredictionSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.25,
            gamma: 2.0,
            eps: 1e-7,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::Config(format!("eps must lie in (0, 0.5), got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    /// d(value)/dp per pixel, row-major. Present only when requested.
    pub gradient: Option<Vec<f64>>,
}

/// Loss term of one pixel and its derivative in `p` (not yet divided by H*W).
#[inline]
fn pixel_term(p: f64, y: bool, w: f64, cfg: &LossConfig) -> (f64, f64) {
    let (lo, hi) = (cfg.eps, 1.0 - cfg.eps);
    let clamped = p <= lo || p >= hi;
    let pc = p.clamp(lo, hi);
    let gamma = cfg.gamma;
    if y {
        let q = 1.0 - pc;
        let value = w * cfg.alpha * q.powf(gamma) * -pc.ln();
        let grad = if clamped {
            0.0
        } else {
            w * cfg.alpha * (gamma * q.powf(gamma - 1.0) * pc.ln() - q.powf(gamma) / pc)
        };
        (value, grad)
    } else {
        let q = 1.0 - pc;
        let a = 1.0 - cfg.alpha;
        let value = w * a * pc.powf(gamma) * -q.ln();
        let grad = if clamped {
            0.0
        } else {
            -w * a * (gamma * pc.powf(gamma - 1.0) * q.ln() - pc.powf(gamma) / q)
        };
        (value, grad)
    }
}

fn check_probs(p: &ProbRaster) -> Result<()> {
    if let Some(v) = p.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Malformed(format!("probability {v} outside [0,1]")));
    }
    Ok(())
}

fn evaluate(
    p: &ProbRaster,
    y: &BinaryMask,
    w: Option<&WeightRaster>,
    cfg: &LossConfig,
    want_grad: bool,
) -> Result<LossResult> {
    check_dims(y.dims(), p.dims())?;
    check_probs(p)?;
    if let Some(w) = w {
        check_dims(y.dims(), w.dims())?;
        if let Some(v) = w.values.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Malformed(format!("nonpositive loss weight {v}")));
        }
    }
    let n = (p.height * p.width) as f64;
    let mut sum = 0.0;
    let mut grad = want_grad.then(|| Vec::with_capacity(p.values.len()));
    for (i, (&pi, &yi)) in p.values.iter().zip(y.bits()).enumerate() {
        let wi = w.map_or(1.0, |w| f64::from(w.values[i]));
        let (v, g) = pixel_term(pi, yi, wi, cfg);
        sum += v;
        if let Some(grad) = grad.as_mut() {
            grad.push(g / n);
        }
    }
    Ok(LossResult {
        value: sum / n,
        gradient: grad,
    })
}

/// Unweighted focal loss for one frame.
pub fn focal_loss(p: &ProbRaster, y: &BinaryMask, config: &LossConfig) -> Result<LossResult> {
    evaluate(p, y, None, config, false)
}

/// Focal loss with per-pixel action-guided weights for one frame.
pub fn action_guided_focal_loss(
    p: &ProbRaster,
    y: &BinaryMask,
    w: &WeightRaster,
    config: &LossConfig,
) -> Result<LossResult> {
    evaluate(p, y, Some(w), config, false)
}

/// Value and gradient in one pass.
pub fn action_guided_focal_loss_with_grad(
    p: &ProbRaster,
    y: &BinaryMask,
    w: &WeightRaster,
    config: &LossConfig,
) -> Result<LossResult> {
    evaluate(p, y, Some(w), config, true)
}

/// d(loss)/dp per pixel; zero wherever the probability clamp is active.
pub fn loss_gradient(
    p: &ProbRaster,
    y: &BinaryMask,
    w: &WeightRaster,
    config: &LossConfig,
) -> Result<Vec<f64>> {
    Ok(evaluate(p, y, Some(w), config, true)?
        .gradient
        .expect("gradient requested"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameLoss {
    pub object_id: u8,
    pub t: u32,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_max_abs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClipLoss {
    pub clip_id: String,
    pub frames: Vec<FrameLoss>,
    /// Mean over the object's frames.
    pub per_object: BTreeMap<u8, f64>,
    /// Unweighted mean over all (object, frame) pairs.
    pub aggregate: f64,
}

/// Weight rasters of a clip keyed by `(object_id, t)`.
pub type ClipWeights = BTreeMap<(u8, u32), WeightRaster>;

/// Evaluates the weighted loss for every (object, frame) pair that carries an
/// action-aware mask.
pub fn clip_loss(
    predictions: &PredictionSet,
    pseudo: &PseudoLabels,
    weights: &ClipWeights,
    config: &LossConfig,
    with_grad: bool,
) -> Result<ClipLoss> {
    if predictions.clip_id != pseudo.clip_id {
        return Err(Error::Config(format!(
            "prediction clip '{}' does not match pseudo-label clip '{}'",
            predictions.clip_id, pseudo.clip_id
        )));
    }
    let mut frames = Vec::new();
    let mut per_object = BTreeMap::new();
    for obj in &pseudo.objects {
        let pred = predictions.object(obj.id)?;
        let mut obj_sum = 0.0;
        for (&t, y) in &obj.masks {
            let p = pred.frames.get(&t).ok_or_else(|| {
                Error::clip(&pseudo.clip_id, format!("object {} frame t={t}: missing prediction raster", obj.id))
            })?;
            let w = weights.get(&(obj.id, t)).ok_or_else(|| {
                Error::clip(&pseudo.clip_id, format!("object {} frame t={t}: missing weight raster", obj.id))
            })?;
            let r = evaluate(p, y, Some(w), config, with_grad)?;
            let (grad_l2, grad_max_abs) = match &r.gradient {
                Some(g) => (
                    Some(g.iter().map(|v| v * v).sum::<f64>().sqrt()),
                    Some(g.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
                ),
                None => (None, None),
            };
            obj_sum += r.value;
            frames.push(FrameLoss {
                object_id: obj.id,
                t,
                value: r.value,
                grad_l2,
                grad_max_abs,
            });
        }
        if !obj.masks.is_empty() {
            per_object.insert(obj.id, obj_sum / obj.masks.len() as f64);
        }
    }
    let aggregate = if frames.is_empty() {
        0.0
    } else {
        frames.iter().map(|f| f.value).sum::<f64>() / frames.len() as f64
    };
    Ok(ClipLoss {
        clip_id: pseudo.clip_id.clone(),
        frames,
        per_object,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub trials: usize,
    pub seed: u64,
    pub step: f64,
    pub pixels_checked: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the analytic gradient with central finite differences of the
/// loss value on random rasters (sizes up to 8x8, `p` in [0.05, 0.95],
/// weights drawn from {1, 2, 5}).
pub fn gradcheck(trials: usize, seed: u64, tolerance: f64, config: &LossConfig) -> Result<GradcheckReport> {
    const STEP: f64 = 1e-5;
    let mut rng = SplitMix64::new(seed);
    let mut max_rel: f64 = 0.0;
    let mut pixels = 0;
    for _ in 0..trials {
        let h = rng.range(1, 8);
        let w = rng.range(1, 8);
        let p: Vec<f64> = (0..h * w).map(|_| 0.05 + 0.9 * rng.next_f64()).collect();
        let y = BinaryMask::from_bits(h, w, (0..h * w).map(|_| rng.chance(0.5)).collect())?;
        let wts = (0..h * w).map(|_| *rng.pick(&[1.0f32, 2.0, 5.0])).collect();
        let wts = WeightRaster::from_values(h, w, wts)?;
        let mut probs = ProbRaster::from_values(h, w, p)?;
        let analytic = loss_gradient(&probs, &y, &wts, config)?;
        for i in 0..h * w {
            let orig = probs.values[i];
            probs.values[i] = orig + STEP;
            let up = action_guided_focal_loss(&probs, &y, &wts, config)?.value;
            probs.values[i] = orig - STEP;
            let down = action_guided_focal_loss(&probs, &y, &wts, config)?.value;
            probs.values[i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            max_rel = max_rel.max(relative_error(analytic[i], numeric));
            pixels += 1;
        }
    }
    Ok(GradcheckReport {
        trials,
        seed,
        step: STEP,
        pixels_checked: pixels,
        max_rel_error: max_rel,
        tolerance,
        passed: max_rel < tolerance,
    })
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
