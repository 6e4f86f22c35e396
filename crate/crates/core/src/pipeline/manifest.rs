use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::colorlab::Palette;
use crate::emotion::EmotionVector;
use crate::{Error, Result};

/// One matched music–palette pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub music_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_path: Option<PathBuf>,
    pub palette_id: String,
    pub palette: Palette,
    pub emotion_music: EmotionVector,
    pub emotion_palette: EmotionVector,
    pub similarity: f64,
}

/// Entries in file order; serialized as JSON lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<DatasetEntry>) -> Result<Self> {
        let m = DatasetManifest { entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.music_id.as_str()) {
                return Err(Error::invalid(format!("duplicate music id `{}`", e.music_id)));
            }
            if !(-1.0..=1.0).contains(&e.similarity) {
                return Err(Error::invalid(format!(
                    "entry `{}`: similarity {} outside [-1, 1]",
                    e.music_id, e.similarity
                )));
            }
            if e.audio_path.is_none() && e.feature_path.is_none() {
                return Err(Error::invalid(format!(
                    "entry `{}` has neither audio_path nor feature_path",
                    e.music_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, music_id: &str) -> Option<&DatasetEntry> {
        self.entries.iter().find(|e| e.music_id == music_id)
    }

    pub fn music_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.music_id.clone()).collect()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Blank lines are ignored; errors name the offending line.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: DatasetEntry = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("manifest line {}: {e}", i + 1)))?;
            entries.push(e);
        }
        DatasetManifest::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DatasetManifest::from_jsonl(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_jsonl()?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Joins relative paths onto the manifest's directory.
pub fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
