//! Token id layout.
//!
//! Numeric tokens come first and are slot-typed: the same id is an x bin, a
//! y bin or a parent index depending on its position inside a sextet. Class
//! tokens and specials follow. With the default 200 x 100 grid:
//!
//! | ids       | meaning                                 |
//! |-----------|-----------------------------------------|
//! | 0..=199   | coordinate bins / parent indices        |
//! | 200..=203 | ANCESTOR, LINEAL, OFFSHOOT, CLONE        |
//! | 204       | NCLS (noise class)                      |
//! | 205..=208 | START, EOK, EOS, PAD                    |

use serde::{Deserialize, Serialize};

use crate::config::CodecConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeypointClass {
    Ancestor,
    Lineal,
    Offshoot,
    Clone,
}

impl KeypointClass {
    pub const ALL: [KeypointClass; 4] = [
        KeypointClass::Ancestor,
        KeypointClass::Lineal,
        KeypointClass::Offshoot,
        KeypointClass::Clone,
    ];

    /// Whether the sextet realizes a key point that was not emitted before.
    pub fn is_new_keypoint(self) -> bool {
        self != KeypointClass::Clone
    }

    /// Whether `con` holds a parent index rather than 0.
    pub fn has_parent_index(self) -> bool {
        matches!(self, KeypointClass::Offshoot | KeypointClass::Clone)
    }
}

/// Coarse token category, used to key per-token loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Numeric,
    Class,
    Noise,
    Special,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    coord: u32,
}

impl Vocabulary {
    pub fn new(cfg: &CodecConfig) -> Self {
        Self {
            coord: cfg.coord_tokens(),
        }
    }

    pub fn numeric_tokens(&self) -> u32 {
        self.coord
    }

    pub fn class_token(&self, cls: KeypointClass) -> u32 {
        self.coord + cls as u32
    }

    pub fn class_of(&self, token: u32) -> Option<KeypointClass> {
        token
            .checked_sub(self.coord)
            .and_then(|k| KeypointClass::ALL.get(k as usize).copied())
    }

    pub fn ncls(&self) -> u32 {
        self.coord + 4
    }

    pub fn start(&self) -> u32 {
        self.coord + 5
    }

    pub fn eok(&self) -> u32 {
        self.coord + 6
    }

    pub fn eos(&self) -> u32 {
        self.coord + 7
    }

    pub fn pad(&self) -> u32 {
        self.coord + 8
    }

    pub fn size(&self) -> usize {
        self.coord as usize + 9
    }

    pub fn kind(&self, token: u32) -> TokenKind {
        match token {
            t if t < self.coord => TokenKind::Numeric,
            t if t < self.ncls() => TokenKind::Class,
            t if t == self.ncls() => TokenKind::Noise,
            t if t <= self.pad() => TokenKind::Special,
            _ => TokenKind::Unknown,
        }
    }
}
