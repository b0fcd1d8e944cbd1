//! Runs every crate example in-process.

macro_rules! example {
    ($m:ident, $file:literal) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $m;

        #[test]
        fn $m() {
            $m::run().unwrap();
        }
    };
}

example!(mask_algebra, "../examples/mask_algebra.rs");
example!(pseudo_labels, "../examples/pseudo_labels.rs");
example!(action_weights, "../examples/action_weights.rs");
example!(focal_loss, "../examples/focal_loss.rs");
example!(gating, "../examples/gating.rs");
example!(evaluate, "../examples/evaluate.rs");
example!(prompts, "../examples/prompts.rs");
example!(synth_fixture, "../examples/synth_fixture.rs");
example!(vocab_stats, "../examples/vocab_stats.rs");
