//! Text prompts combining an object name with the action narration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    /// Object name only.
    NoAction,
    /// `"{object}, {narration}"`.
    CommaAction,
    /// `"{object} used in the action of {narration}"`.
    #[default]
    SentenceAction,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn build_prompt(object_name: &str, narration: &str, style: PromptStyle) -> Result<String> {
    let object = squash(object_name);
    if object.is_empty() {
        return Err(Error::Config("prompt needs a nonempty object name".into()));
    }
    let narration = squash(narration);
    if style != PromptStyle::NoAction && narration.is_empty() {
        return Err(Error::Config(format!("{style:?} prompt needs a nonempty narration")));
    }
    Ok(match style {
        PromptStyle::NoAction => object,
        PromptStyle::CommaAction => format!("{object}, {narration}"),
        PromptStyle::SentenceAction => format!("{object} used in the action of {narration}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_three_styles() {
        assert_eq!(build_prompt("knife", "cut apple", PromptStyle::NoAction).unwrap(), "knife");
        assert_eq!(
            build_prompt("knife", "cut apple", PromptStyle::CommaAction).unwrap(),
            "knife, cut apple"
        );
        assert_eq!(
            build_prompt("knife", "cut apple", PromptStyle::SentenceAction).unwrap(),
            "knife used in the action of cut apple"
        );
    }

    #[test]
    fn whitespace_and_errors() {
        assert_eq!(
            build_prompt(" tofu   container ", "open\ttofu container", PromptStyle::CommaAction).unwrap(),
            "tofu container, open tofu container"
        );
        assert_eq!(build_prompt("knife", "", PromptStyle::NoAction).unwrap(), "knife");
        assert!(build_prompt("knife", "  ", PromptStyle::SentenceAction).is_err());
        assert!(build_prompt("", "cut apple", PromptStyle::NoAction).is_err());
    }

    #[test]
    fn comma_style_splits_back() {
        for (o, n) in [("knife", "cut apple"), ("tea towel", "dry hand"), ("pan", "put down pan")] {
            let p = build_prompt(o, n, PromptStyle::CommaAction).unwrap();
            let (a, b) = p.split_once(", ").unwrap();
            assert_eq!((a, b), (o, n));
            assert!(!build_prompt(o, n, PromptStyle::NoAction).unwrap().contains(n));
        }
    }
}
