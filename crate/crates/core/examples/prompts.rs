//! The three prompt styles.

use actionvos::{build_prompt, PromptStyle};

pub fn run() -> actionvos::Result<()> {
    for style in [PromptStyle::NoAction, PromptStyle::CommaAction, PromptStyle::SentenceAction] {
        println!("{style:?}: {}", build_prompt("knife", "cut apple", style)?);
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
