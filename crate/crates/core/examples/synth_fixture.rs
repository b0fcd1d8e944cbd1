//! Generates a synthetic fixture, writes it to disk and reads it back.

use actionvos::io::{load_manifest, write_manifest};
use actionvos::synth::{generate, SynthParams};

pub fn run() -> actionvos::Result<()> {
    let params = SynthParams { seed: 7, clips: 4, ..Default::default() };
    let (clips, truth) = generate(&params)?;
    for t in &truth.clips {
        let roles: Vec<String> = t.objects.iter().map(|o| format!("{}={:?}", o.name, o.role)).collect();
        println!("{} hands={} hidden={:?}: {}", t.clip_id, t.hand_blobs.len(), t.hands_hidden, roles.join(", "));
    }
    let dir = std::env::temp_dir().join(format!("actionvos-synth-example-{}", std::process::id()));
    let manifest = write_manifest(&dir, &clips)?;
    let back = load_manifest(&manifest)?;
    assert_eq!(back, clips);
    println!("round-tripped {} clips through {}", back.len(), manifest.display());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
