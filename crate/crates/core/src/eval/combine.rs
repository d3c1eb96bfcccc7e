//! Linear combination of the per-modality scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SimilarityScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "vis")]
    Vis,
    #[serde(rename = "txt")]
    Txt,
    #[serde(rename = "seq_vis")]
    SeqVis,
    #[serde(rename = "seq_txt")]
    SeqTxt,
    #[serde(rename = "vis+txt")]
    VisTxt,
    #[serde(rename = "vis+seq")]
    VisSeq,
    #[serde(rename = "txt+seq")]
    TxtSeq,
    #[serde(rename = "vis+txt+seq")]
    VisTxtSeq,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Vis,
        Mode::Txt,
        Mode::SeqVis,
        Mode::SeqTxt,
        Mode::VisTxt,
        Mode::VisSeq,
        Mode::TxtSeq,
        Mode::VisTxtSeq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Vis => "vis",
            Mode::Txt => "txt",
            Mode::SeqVis => "seq_vis",
            Mode::SeqTxt => "seq_txt",
            Mode::VisTxt => "vis+txt",
            Mode::VisSeq => "vis+seq",
            Mode::TxtSeq => "txt+seq",
            Mode::VisTxtSeq => "vis+txt+seq",
        }
    }

    /// Weight on the second operand of the mode's outermost combination.
    pub fn default_weight(self) -> f64 {
        match self {
            Mode::VisTxt => 0.1,
            Mode::VisSeq | Mode::TxtSeq => 0.5,
            Mode::VisTxtSeq => 0.4,
            Mode::Vis | Mode::Txt | Mode::SeqVis | Mode::SeqTxt => 0.0,
        }
    }

    pub fn components(self) -> Components {
        let (vis, txt, seq_vis, seq_txt) = match self {
            Mode::Vis => (true, false, false, false),
            Mode::Txt => (false, true, false, false),
            Mode::SeqVis => (false, false, true, false),
            Mode::SeqTxt => (false, false, false, true),
            Mode::VisTxt => (true, true, false, false),
            Mode::VisSeq => (true, false, true, false),
            Mode::TxtSeq => (false, true, false, true),
            Mode::VisTxtSeq => (true, true, true, true),
        };
        Components {
            vis,
            txt,
            seq_vis,
            seq_txt,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode {s:?}")))
    }
}

/// Which similarity channels a mode (or set of modes) reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub vis: bool,
    pub txt: bool,
    pub seq_vis: bool,
    pub seq_txt: bool,
}

impl Components {
    pub fn union(self, other: Components) -> Components {
        Components {
            vis: self.vis || other.vis,
            txt: self.txt || other.txt,
            seq_vis: self.seq_vis || other.seq_vis,
            seq_txt: self.seq_txt || other.seq_txt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub mode: Mode,
    pub w: f64,
}

impl CombinationWeights {
    pub fn new(mode: Mode) -> Self {
        CombinationWeights {
            mode,
            w: mode.default_weight(),
        }
    }

    pub fn with_weight(mode: Mode, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidConfig(format!("weight {w} outside [0, 1]")));
        }
        Ok(CombinationWeights { mode, w })
    }

    pub fn label(&self) -> String {
        if self.w == self.mode.default_weight() {
            self.mode.name().to_string()
        } else {
            format!("{}@w={}", self.mode.name(), self.w)
        }
    }
}

/// Scores of one query/candidate pair; absent channels were not computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub vis: Option<f64>,
    pub txt: Option<f64>,
    pub seq_vis: Option<f64>,
    pub seq_txt: Option<f64>,
}

impl ComponentScores {
    pub fn all(value: f64) -> Self {
        ComponentScores {
            vis: Some(value),
            txt: Some(value),
            seq_vis: Some(value),
            seq_txt: Some(value),
        }
    }
}

/// `(1 - w) * a + w * b`, returning `a` unchanged when `a == b`.
fn mix(a: f64, b: f64, w: f64) -> f64 {
    if a == b {
        a
    } else {
        (1.0 - w) * a + w * b
    }
}

pub fn combined_score(scores: &ComponentScores, weights: &CombinationWeights) -> Result<SimilarityScore> {
    let mode = weights.mode.name();
    let need = |v: Option<f64>, component: &'static str| v.ok_or(Error::MissingComponent { mode, component });
    let half = 0.5;
    let value = match weights.mode {
        Mode::Vis => need(scores.vis, "vis")?,
        Mode::Txt => need(scores.txt, "txt")?,
        Mode::SeqVis => need(scores.seq_vis, "seq_vis")?,
        Mode::SeqTxt => need(scores.seq_txt, "seq_txt")?,
        Mode::VisTxt => mix(need(scores.vis, "vis")?, need(scores.txt, "txt")?, weights.w),
        Mode::VisSeq => mix(need(scores.vis, "vis")?, need(scores.seq_vis, "seq_vis")?, weights.w),
        Mode::TxtSeq => mix(need(scores.txt, "txt")?, need(scores.seq_txt, "seq_txt")?, weights.w),
        Mode::VisTxtSeq => {
            let vis_seq = mix(need(scores.vis, "vis")?, need(scores.seq_vis, "seq_vis")?, half);
            let txt_seq = mix(need(scores.txt, "txt")?, need(scores.seq_txt, "seq_txt")?, half);
            mix(vis_seq, txt_seq, weights.w)
        }
    };
    Ok(SimilarityScore::new(value))
}
