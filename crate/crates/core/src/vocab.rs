//! Vocabulary statistics over narrations and object names.
//!
//! Narrations are lowercased and split on whitespace. The verb is the first
//! token; the noun vocabulary is every object name (as a whole phrase) plus
//! every remaining narration token.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clip::ActionClip;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub actions: usize,
    pub verbs: usize,
    pub nouns: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabStats {
    pub train: SplitCounts,
    pub val: SplitCounts,
    pub unseen_actions: usize,
    pub unseen_verbs: usize,
    pub unseen_nouns: usize,
}

#[derive(Default)]
struct Vocab {
    actions: BTreeSet<String>,
    verbs: BTreeSet<String>,
    nouns: BTreeSet<String>,
}

impl Vocab {
    fn of(clips: &[ActionClip]) -> Self {
        let mut v = Vocab::default();
        for clip in clips {
            let narration = clip.narration.to_lowercase();
            let mut toks = narration.split_whitespace();
            if let Some(verb) = toks.next() {
                v.actions.insert(toks.clone().fold(verb.to_string(), |a, t| a + " " + t));
                v.verbs.insert(verb.to_string());
            }
            v.nouns.extend(toks.map(str::to_string));
            for o in &clip.objects {
                let name = o.name.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
                if !name.is_empty() {
                    v.nouns.insert(name);
                }
            }
        }
        v
    }

    fn counts(&self) -> SplitCounts {
        SplitCounts {
            actions: self.actions.len(),
            verbs: self.verbs.len(),
            nouns: self.nouns.len(),
        }
    }
}

pub fn vocab_stats(train: &[ActionClip], val: &[ActionClip]) -> VocabStats {
    let t = Vocab::of(train);
    let v = Vocab::of(val);
    VocabStats {
        train: t.counts(),
        val: v.counts(),
        unseen_actions: v.actions.difference(&t.actions).count(),
        unseen_verbs: v.verbs.difference(&t.verbs).count(),
        unseen_nouns: v.nouns.difference(&t.nouns).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::{FrameRecord, ObjectEntry};
    use crate::mask::{BinaryMask, LabelMap};

    fn clip(narration: &str, names: &[&str]) -> ActionClip {
        ActionClip {
            clip_id: narration.into(),
            narration: narration.into(),
            height: 1,
            width: 1,
            objects: names
                .iter()
                .enumerate()
                .map(|(i, n)| ObjectEntry { id: i as u8 + 1, name: n.to_string() })
                .collect(),
            frames: vec![FrameRecord { t: 0, label_map: LabelMap::new(1, 1), hand_object: BinaryMask::empty(1, 1) }],
        }
    }

    #[test]
    fn identical_splits_have_nothing_unseen() {
        let a = vec![clip("cut apple", &["knife"]), clip("Open  Tofu container", &["tofu container"])];
        let s = vocab_stats(&a, &a);
        assert_eq!(s.train, s.val);
        assert_eq!((s.unseen_actions, s.unseen_verbs, s.unseen_nouns), (0, 0, 0));
    }

    #[test]
    fn empty_val_counts_zero() {
        let s = vocab_stats(&[clip("cut apple", &["knife"])], &[]);
        assert_eq!(s.val, SplitCounts::default());
        assert_eq!((s.unseen_actions, s.unseen_verbs, s.unseen_nouns), (0, 0, 0));
        assert_eq!(s.train, SplitCounts { actions: 1, verbs: 1, nouns: 2 });
    }

    #[test]
    fn order_does_not_matter() {
        let a = clip("cut apple", &["knife", "apple"]);
        let b = clip("wash pan", &["pan", "sponge"]);
        let c = clip("cut onion", &["onion"]);
        let x = vocab_stats(&[a.clone(), b.clone()], &[c.clone(), a.clone()]);
        let y = vocab_stats(&[b, a.clone()], &[a, c]);
        assert_eq!(x, y);
    }
}
