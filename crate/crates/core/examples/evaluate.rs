//! Scores synthetic predictors before and after gating.

use actionvos::synth::{generate, generate_predictions, PredictionMode, SynthParams};
use actionvos::{apply_threshold, compute_report, EvalLabels, PostprocessConfig};

pub fn run() -> actionvos::Result<()> {
    let (clips, truth) = generate(&SynthParams::default())?;
    let labels = clips
        .iter()
        .zip(&truth.clips)
        .map(|(c, t)| EvalLabels::from_clip(c, &t.positivity()))
        .collect::<actionvos::Result<Vec<_>>>()?;
    println!("{:<8} {:>6} {:>7} {:>7} {:>7} {:>7} {:>6} {:>6}", "mode", "theta", "p-mIoU", "n-mIoU", "p-cIoU", "n-cIoU", "gIoU", "Acc");
    for mode in [PredictionMode::Perfect, PredictionMode::Empty, PredictionMode::Leaky, PredictionMode::Noisy { sigma: 0.05, seed: 1 }] {
        let preds = generate_predictions(&clips, &truth, mode)?;
        for theta in [0.0, 0.75] {
            let cfg = PostprocessConfig::with_theta(theta);
            let gated: Vec<_> = preds.iter().map(|p| apply_threshold(p, &cfg)).collect();
            let r = compute_report(&gated, &labels, &cfg)?;
            println!(
                "{:<8} {theta:>6.2} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>6.4} {:>6.4}",
                mode.name(), r.p_miou, r.n_miou, r.p_ciou, r.n_ciou, r.giou, r.acc
            );
        }
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
