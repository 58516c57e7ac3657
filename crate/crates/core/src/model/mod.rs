//! Prompt construction, provider calls, and HTML extraction for screenshot
//! to code generation.

mod client;
mod extract;

pub use client::{
    call_model, GenerationConfig, ModelClient, ModelError, ModelResponse, Provider, TokenBucket, Transcript, Usage,
};
pub use extract::extract_html;

use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::TextSegment;
use crate::render::Screenshot;

pub const DIRECT_PROMPT: &str = "You are an expert web developer who specializes in HTML and CSS. A user will provide you with a screenshot of a webpage. You need to return a single html file that uses HTML and CSS to reproduce the given website. Include all CSS code in the HTML file itself. If it involves any images, use \"rick.jpg\" as the placeholder. Some images on the webpage are replaced with a blue rectangle as the placeholder, use \"rick.jpg\" for those as well. Do not hallucinate any dependencies to external files. You do not need to include JavaScript scripts for dynamic interactions. Pay attention to things like size, text, position, and color of all the elements, as well as the overall layout. Respond with the content of the HTML+CSS file.";

pub const SELF_REVISION_TEMPLATE: &str = "You are an expert web developer who specializes in HTML and CSS. I have an HTML file for implementing a webpage but it has some missing or wrong elements that are different from the original webpage. The current implementation I have is: [generated code from text-augmented prompting]. I will provide the reference webpage that I want to build as well as the rendered webpage of the current implementation. I also provide you all the texts that I want to include in the webpage here: [extracted texts from the original webpage]. Please compare the two webpages and refer to the provided text elements to be included, and revise the original HTML implementation to make it look exactly like the reference webpage. Make sure the code is syntactically correct and can render into a well-formed webpage. You can use \"rick.jpg\" as the placeholder image file. Pay attention to things like size, text, position, and color of all the elements, as well as the overall layout. Respond directly with the content of the new revised and improved HTML file without any extra explanations.";

pub const CODE_SLOT: &str = "[generated code from text-augmented prompting]";
pub const TEXTS_SLOT: &str = "[extracted texts from the original webpage]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Direct,
    TextAugmented,
    SelfRevision,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Direct, Strategy::TextAugmented, Strategy::SelfRevision];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::TextAugmented => "text-augmented",
            Strategy::SelfRevision => "self-revision",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "direct" => Ok(Strategy::Direct),
            "text-augmented" => Ok(Strategy::TextAugmented),
            "self-revision" => Ok(Strategy::SelfRevision),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("screenshot missing or empty")]
    MissingScreenshot,
    #[error("self-revision needs a previous generation")]
    MissingPreviousCode,
}

/// PNG-encoded image attached to a prompt.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptImage {
    pub png: Vec<u8>,
}

impl fmt::Debug for PromptImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PromptImage({} bytes)", self.png.len())
    }
}

impl PromptImage {
    pub fn from_screenshot(shot: &Screenshot) -> Self {
        PromptImage { png: shot.png_bytes() }
    }

    fn check(self) -> Result<Self, PromptError> {
        if self.png.is_empty() {
            Err(PromptError::MissingScreenshot)
        } else {
            Ok(self)
        }
    }
}

impl From<&Screenshot> for PromptImage {
    fn from(shot: &Screenshot) -> Self {
        PromptImage::from_screenshot(shot)
    }
}

/// Everything sent to the model for one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub strategy: Strategy,
    pub system: Option<String>,
    pub user_text: String,
    pub images: Vec<PromptImage>,
}

fn text_lines(texts: &[TextSegment]) -> String {
    texts.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\n")
}

pub fn build_direct_prompt(shot: impl Into<PromptImage>) -> Result<PromptBundle, PromptError> {
    Ok(PromptBundle {
        strategy: Strategy::Direct,
        system: None,
        user_text: DIRECT_PROMPT.to_string(),
        images: vec![shot.into().check()?],
    })
}

/// Direct prompt followed by one line per text segment.
pub fn build_text_augmented_prompt(
    shot: impl Into<PromptImage>,
    texts: &[TextSegment],
) -> Result<PromptBundle, PromptError> {
    let mut user_text = DIRECT_PROMPT.to_string();
    if !texts.is_empty() {
        user_text.push('\n');
        user_text.push_str(&text_lines(texts));
    }
    Ok(PromptBundle {
        strategy: Strategy::TextAugmented,
        system: None,
        user_text,
        images: vec![shot.into().check()?],
    })
}

/// Revision template with the previous code and the reference texts filled
/// in; reference screenshot first, previous render second.
pub fn build_self_revision_prompt(
    reference: impl Into<PromptImage>,
    previous: impl Into<PromptImage>,
    previous_code: &str,
    texts: &[TextSegment],
) -> Result<PromptBundle, PromptError> {
    if previous_code.trim().is_empty() {
        return Err(PromptError::MissingPreviousCode);
    }
    let (head, rest) = SELF_REVISION_TEMPLATE.split_once(CODE_SLOT).expect("code slot");
    let (mid, tail) = rest.split_once(TEXTS_SLOT).expect("texts slot");
    let user_text = format!("{head}{previous_code}{mid}{}{tail}", text_lines(texts));
    Ok(PromptBundle {
        strategy: Strategy::SelfRevision,
        system: None,
        user_text,
        images: vec![reference.into().check()?, previous.into().check()?],
    })
}

impl PromptBundle {
    /// Stacks all images top to bottom into one, for single-image models.
    pub fn concatenated(&self) -> Result<PromptBundle, image::ImageError> {
        if self.images.len() < 2 {
            return Ok(self.clone());
        }
        let decoded = self
            .images
            .iter()
            .map(|i| image::load_from_memory_with_format(&i.png, image::ImageFormat::Png).map(|d| d.to_rgb8()))
            .collect::<Result<Vec<_>, _>>()?;
        let width = decoded.iter().map(|i| i.width()).max().unwrap_or(0);
        let height = decoded.iter().map(|i| i.height()).sum();
        let mut canvas = RgbImage::from_pixel(width, height, image::Rgb([255, 255, 255]));
        let mut y = 0;
        for img in &decoded {
            image::imageops::replace(&mut canvas, img, 0, i64::from(y));
            y += img.height();
        }
        let mut png = std::io::Cursor::new(Vec::new());
        canvas.write_to(&mut png, image::ImageFormat::Png)?;
        Ok(PromptBundle {
            images: vec![PromptImage { png: png.into_inner() }],
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::Viewport;

    fn shot() -> Screenshot {
        Screenshot {
            image: RgbImage::from_pixel(4, 3, image::Rgb([1, 2, 3])),
            viewport: Viewport::default(),
            doc_ref: "x".into(),
        }
    }

    fn seg(text: &str) -> TextSegment {
        TextSegment {
            node_path: vec![],
            text: text.into(),
            visible: true,
        }
    }

    #[test]
    fn prompts_match_fixtures_byte_for_byte() {
        assert_eq!(DIRECT_PROMPT, include_str!("../../tests/data/prompt_direct.txt"));
        assert_eq!(SELF_REVISION_TEMPLATE, include_str!("../../tests/data/prompt_self_revision.txt"));
        assert!(DIRECT_PROMPT.contains("\"rick.jpg\""));
    }

    #[test]
    fn direct_bundle() {
        let b = build_direct_prompt(&shot()).unwrap();
        assert_eq!(b.strategy, Strategy::Direct);
        assert_eq!(b.images.len(), 1);
        assert_eq!(b.user_text, DIRECT_PROMPT);
        assert_eq!(build_direct_prompt(PromptImage { png: vec![] }), Err(PromptError::MissingScreenshot));
    }

    #[test]
    fn text_augmented_appends_lines_in_order() {
        let b = build_text_augmented_prompt(&shot(), &[seg("a"), seg("b")]).unwrap();
        assert!(b.user_text.ends_with("\na\nb"));
        assert_eq!(b.user_text, format!("{DIRECT_PROMPT}\na\nb"));
        let empty = build_text_augmented_prompt(&shot(), &[]).unwrap();
        assert_eq!(empty.user_text, DIRECT_PROMPT);

        let many: Vec<_> = (0..1000).map(|i| seg(&format!("t{i}"))).collect();
        let b = build_text_augmented_prompt(&shot(), &many).unwrap();
        let lines: Vec<&str> = b.user_text.strip_prefix(DIRECT_PROMPT).unwrap()[1..].split('\n').collect();
        assert_eq!(lines, many.iter().map(|s| s.text.as_str()).collect::<Vec<_>>());
    }

    #[test]
    fn self_revision_fills_slots() {
        let r = build_self_revision_prompt(&shot(), &shot(), "<p>old</p>", &[seg("x"), seg("y")]).unwrap();
        assert_eq!(r.images.len(), 2);
        let (head, rest) = SELF_REVISION_TEMPLATE.split_once(CODE_SLOT).unwrap();
        let (mid, tail) = rest.split_once(TEXTS_SLOT).unwrap();
        assert_eq!(r.user_text, format!("{head}<p>old</p>{mid}x\ny{tail}"));
        assert_eq!(
            build_self_revision_prompt(&shot(), &shot(), "  ", &[]),
            Err(PromptError::MissingPreviousCode)
        );
    }

    #[test]
    fn slot_text_in_inputs_is_not_refilled() {
        let code = format!("<!-- {TEXTS_SLOT} -->");
        let r = build_self_revision_prompt(&shot(), &shot(), &code, &[seg(CODE_SLOT)]).unwrap();
        assert!(r.user_text.contains(&code));
        assert_eq!(r.user_text.matches(CODE_SLOT).count(), 1);
    }

    #[test]
    fn concatenation_stacks_vertically() {
        let r = build_self_revision_prompt(&shot(), &shot(), "x", &[]).unwrap();
        let c = r.concatenated().unwrap();
        assert_eq!(c.images.len(), 1);
        let img = image::load_from_memory(&c.images[0].png).unwrap();
        assert_eq!((img.width(), img.height()), (4, 6));
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("self_revision".parse::<Strategy>().unwrap(), Strategy::SelfRevision);
    }
}
