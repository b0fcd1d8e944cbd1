//! Score gating: objects whose action score falls below theta lose their masks.

use std::collections::BTreeMap;

use actionvos::postprocess::predicted_positive;
use actionvos::{apply_threshold, BinaryMask, ObjectPrediction, PostprocessConfig, PredictionSet, ProbRaster};

pub fn run() -> actionvos::Result<()> {
    let mask = ProbRaster::from_mask(&BinaryMask::from_fn(4, 4, |r, _| r < 2));
    let objects: BTreeMap<u8, ObjectPrediction> = [0.9, 0.75, 0.6, 0.1]
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let frames = BTreeMap::from([(0, mask.clone())]);
            (i as u8 + 1, ObjectPrediction { cls_score: Some(s), frames })
        })
        .collect();
    let pred = PredictionSet { clip_id: "demo".into(), objects };
    for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let cfg = PostprocessConfig::with_theta(theta);
        let kept: Vec<u8> = pred
            .objects
            .keys()
            .copied()
            .filter(|&id| predicted_positive(&pred, id, &cfg).unwrap_or(false))
            .collect();
        let gated = apply_threshold(&pred, &cfg);
        let blank: Vec<u8> = gated
            .objects
            .iter()
            .filter(|(_, o)| o.frames.values().all(ProbRaster::is_zero))
            .map(|(&id, _)| id)
            .collect();
        println!("theta {theta:.2}: positive {kept:?}, zeroed {blank:?}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
