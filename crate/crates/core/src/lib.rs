//! Action-aware video object segmentation toolkit.
//!
//! Builds action-aware pseudo-labels from narrations and hand-object masks,
//! computes the action-guided weighted focal loss and its gradient, gates
//! predictions on an action score, and scores them with positive/negative
//! IoU metrics. Everything runs on plain rasters, so models stay outside.

pub mod clip;
pub mod cli;

pub mod error;
pub mod io;
pub mod labeling;
pub mod loss;
pub mod mask;
pub mod metrics;
pub mod postprocess;
pub mod prompts;
pub mod raster;
pub mod rng;
pub mod synth;
pub mod vocab;
pub mod weighting;

pub use clip::{ActionClip, FrameRecord, ObjectEntry, ObjectPrediction, PredictionSet};
pub use error::{Error, Result};
pub use labeling::{build_pseudo_labels, classify_object, LabelingConfig, PseudoLabels, Reason};
pub use loss::{action_guided_focal_loss, focal_loss, loss_gradient, LossConfig};
pub use mask::{BBox, BinaryMask, LabelMap};
pub use metrics::{compute_report, EvalLabels, MetricReport};
pub use postprocess::{apply_threshold, PostprocessConfig};
pub use prompts::{build_prompt, PromptStyle};
pub use raster::{ProbRaster, WeightRaster};
pub use weighting::{weight_map, WeightConfig};
