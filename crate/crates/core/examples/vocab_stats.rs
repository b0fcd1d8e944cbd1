//! Action, verb and noun counts for two splits and how many validation
//! entries never occur in training.

use actionvos::clip::{FrameRecord, ObjectEntry};
use actionvos::vocab::vocab_stats;
use actionvos::{ActionClip, BinaryMask, LabelMap};

fn clip(id: &str, narration: &str, names: &[&str]) -> ActionClip {
    ActionClip {
        clip_id: id.into(),
        narration: narration.into(),
        height: 2,
        width: 2,
        objects: names
            .iter()
            .enumerate()
            .map(|(i, n)| ObjectEntry { id: i as u8 + 1, name: n.to_string() })
            .collect(),
        frames: vec![FrameRecord { t: 0, label_map: LabelMap::new(2, 2), hand_object: BinaryMask::empty(2, 2) }],
    }
}

pub fn run() -> actionvos::Result<()> {
    let train = vec![
        clip("a", "cut apple", &["knife", "apple"]),
        clip("b", "open tofu container", &["tofu container"]),
    ];
    let val = vec![clip("c", "cut onion", &["knife", "onion"]), clip("d", "cut apple", &["apple"])];
    let stats = vocab_stats(&train, &val);
    println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
