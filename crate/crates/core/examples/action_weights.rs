//! Pixel weights for a narrated object straddling a hand box and an
//! unmentioned object far from the hands.

use actionvos::clip::{FrameRecord, ObjectEntry};
use actionvos::weighting::{weight_cases, weight_histogram};
use actionvos::{weight_map, ActionClip, BinaryMask, LabelMap, LabelingConfig, WeightConfig};

pub fn run() -> actionvos::Result<()> {
    let mut lm = LabelMap::new(10, 10);
    for c in 3..=7 {
        lm.set(3, c, 1);
    }
    for r in 8..10 {
        for c in 0..3 {
            lm.set(r, c, 2);
        }
    }
    let hand = BinaryMask::from_fn(10, 10, |r, c| (2..=4).contains(&r) && (2..=4).contains(&c));
    let clip = ActionClip {
        clip_id: "demo".into(),
        narration: "take knife".into(),
        height: 10,
        width: 10,
        objects: vec![
            ObjectEntry { id: 1, name: "knife".into() },
            ObjectEntry { id: 2, name: "plate".into() },
        ],
        frames: vec![FrameRecord { t: 0, label_map: lm, hand_object: hand }],
    };
    let labeling = LabelingConfig::default();
    let weights = WeightConfig::default();
    for id in [1, 2] {
        let w = weight_map(&clip, id, 0, &labeling, &weights)?;
        println!("object {id}: histogram {:?}", weight_histogram(&w).entries());
        for r in 0..10 {
            let row: Vec<String> = (0..10).map(|c| format!("{}", w.get(r, c))).collect();
            println!("  {}", row.join(" "));
        }
    }
    let cases = weight_cases(&clip, 1, 0, &labeling)?;
    println!("knife cases on row 3: {:?}", &cases[30 + 3..30 + 8]);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
