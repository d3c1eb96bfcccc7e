//! OCR file: one JSON object per sampled frame, one per line.
//!
//! ```text
//! {"frame_index":0,"regions":[{"x":12,"y":40,"w":120,"h":48,"text":"Save","conf":0.97}]}
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameText, TextRegion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OcrLine {
    frame_index: u64,
    regions: Vec<TextRegion>,
}

pub fn parse_ocr(text: &str, path: &Path) -> Result<Vec<FrameText>> {
    let mut frames: Vec<FrameText> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: OcrLine =
            serde_json::from_str(line).map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 1)))?;
        if let Some(prev) = frames.last() {
            if parsed.frame_index <= prev.frame_index {
                return Err(Error::format(
                    path,
                    format!(
                        "line {}: frame_index {} is not increasing",
                        lineno + 1,
                        parsed.frame_index
                    ),
                ));
            }
        }
        for r in &parsed.regions {
            r.validate()
                .map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 1)))?;
        }
        frames.push(FrameText {
            frame_index: parsed.frame_index,
            regions: parsed.regions,
        });
    }
    Ok(frames)
}

pub fn read_ocr(path: impl AsRef<Path>) -> Result<Vec<FrameText>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ocr(&text, path)
}

pub fn format_ocr(frames: &[FrameText]) -> String {
    let mut out = String::new();
    for f in frames {
        let line = OcrLine {
            frame_index: f.frame_index,
            regions: f.regions.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("OCR line serializes")).unwrap();
    }
    out
}

pub fn write_ocr(path: impl AsRef<Path>, frames: &[FrameText]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_ocr(frames)).map_err(|e| Error::io(path, e))
}
