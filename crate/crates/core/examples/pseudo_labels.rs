//! Builds action-aware pseudo-labels for a hand-made clip with one object
//! per labeling rule.

use actionvos::clip::{FrameRecord, ObjectEntry};
use actionvos::{build_pseudo_labels, ActionClip, BinaryMask, LabelMap, LabelingConfig};

fn paint(lm: &mut LabelMap, id: u8, r0: usize, c0: usize, r1: usize, c1: usize) {
    for r in r0..=r1 {
        for c in c0..=c1 {
            lm.set(r, c, id);
        }
    }
}

pub fn clip() -> ActionClip {
    let mut lm = LabelMap::new(16, 16);
    paint(&mut lm, 1, 0, 0, 1, 1); // knife: named in the narration
    paint(&mut lm, 2, 6, 6, 7, 7); // sponge: held
    paint(&mut lm, 3, 9, 4, 10, 5); // bowl: touches the hand box
    paint(&mut lm, 4, 14, 14, 15, 15); // plate: nowhere near
    let mut hand = BinaryMask::from_fn(16, 16, |r, c| (5..=9).contains(&r) && (5..=9).contains(&c));
    hand.set(9, 5, false);
    ActionClip {
        clip_id: "kitchen-01".into(),
        narration: "cut apple with knife".into(),
        height: 16,
        width: 16,
        objects: ["knife", "sponge", "bowl", "plate"]
            .iter()
            .enumerate()
            .map(|(i, n)| ObjectEntry { id: i as u8 + 1, name: n.to_string() })
            .collect(),
        frames: vec![FrameRecord { t: 0, label_map: lm, hand_object: hand }],
    }
}

pub fn run() -> actionvos::Result<()> {
    let clip = clip();
    clip.validate()?;
    let labels = build_pseudo_labels(&clip, &LabelingConfig::default())?;
    for o in &labels.objects {
        let name = &clip.object(o.id)?.name;
        let area: usize = o.masks.values().map(BinaryMask::area).sum();
        println!("{name:>6}: cls={} reason={:?} mask area={area}", o.cls as u8, o.reason);
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
