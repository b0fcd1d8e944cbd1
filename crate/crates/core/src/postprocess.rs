//! Inference-time gating of predicted masks by classification score.

use serde::{Deserialize, Serialize};

use crate::clip::PredictionSet;
use crate::error::{Error, Result};
use crate::raster::ProbRaster;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionSource {
    /// Use the classification score, falling back to mask emptiness for
    /// objects without one.
    #[default]
    Score,
    /// Ignore scores; positive iff some final mask is nonempty.
    MaskNonempty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocessConfig {
    pub theta: f64,
    pub decision_source: DecisionSource,
    /// Probabilities `>= binarize_at` become foreground.
    pub binarize_at: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            theta: 0.75,
            decision_source: DecisionSource::Score,
            binarize_at: 0.5,
        }
    }
}

impl PostprocessConfig {
    pub fn with_theta(theta: f64) -> Self {
        PostprocessConfig {
            theta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.binarize_at > 0.0 && self.binarize_at <= 1.0) {
            return Err(Error::Config(format!(
                "binarization threshold must lie in (0, 1], got {}",
                self.binarize_at
            )));
        }
        Ok(())
    }
}

/// Zeroes every object whose score is below `theta` and binarizes the rest.
/// Objects without a score are only binarized.
pub fn apply_threshold(pred: &PredictionSet, config: &PostprocessConfig) -> PredictionSet {
    let mut out = pred.clone();
    for obj in out.objects.values_mut() {
        let gated = matches!(obj.cls_score, Some(s) if s < config.theta);
        for raster in obj.frames.values_mut() {
            *raster = if gated {
                ProbRaster::zeros(raster.height, raster.width)
            } else {
                ProbRaster::from_mask(&raster.binarize(config.binarize_at))
            };
        }
    }
    out
}

/// Final positive/negative decision for one object of a post-processed set.
pub fn predicted_positive(pred: &PredictionSet, object_id: u8, config: &PostprocessConfig) -> Result<bool> {
    let obj = pred.object(object_id)?;
    let nonempty = || {
        obj.frames
            .values()
            .any(|r| r.values.iter().any(|&v| v >= config.binarize_at))
    };
    Ok(match (config.decision_source, obj.cls_score) {
        (DecisionSource::Score, Some(s)) => s >= config.theta,
        (DecisionSource::Score, None) | (DecisionSource::MaskNonempty, _) => nonempty(),
    })
}
