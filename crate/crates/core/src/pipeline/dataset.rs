use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::manifest::{resolve_path, DatasetEntry, DatasetManifest};
use crate::audiofeat::{build_feature_matrix, load_audio, FeatureMatrix};
use crate::colorlab::{Palette, PaletteJson};
use crate::emotion::{match_pairs, EmotionVector, MatchResult, PaletteEmotionProvider};
use crate::{Error, Result};

/// Extension of cached feature matrices written next to their audio.
pub const FEATURE_EXTENSION: &str = "m2pf";

pub const DEFAULT_MAX_SECONDS: f64 = 60.0;

/// Decodes a clip, keeps the first `max_seconds` and extracts features.
pub fn extract_features(audio: &Path, max_seconds: f64) -> Result<FeatureMatrix> {
    let clip = load_audio(audio)?.truncated(max_seconds);
    build_feature_matrix(&clip)
}

/// Cached features when present, otherwise extraction from audio. Errors
/// name the clip.
pub fn entry_features(entry: &DatasetEntry, base: &Path, max_seconds: f64) -> Result<FeatureMatrix> {
    let tagged = |e: Error| match e {
        Error::Numeric(m) => Error::Numeric(format!("clip `{}`: {m}", entry.music_id)),
        other => Error::InvalidInput(format!("clip `{}`: {other}", entry.music_id)),
    };
    if let Some(fp) = &entry.feature_path {
        let fp = resolve_path(base, fp);
        if fp.exists() || entry.audio_path.is_none() {
            return FeatureMatrix::load(&fp).map_err(tagged);
        }
    }
    let audio = entry
        .audio_path
        .as_ref()
        .expect("manifest validation guarantees a path");
    extract_features(&resolve_path(base, audio), max_seconds).map_err(tagged)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PaletteRecord {
    id: String,
    #[serde(flatten)]
    palette: PaletteJson,
}

/// Parses one `{"id": .., "colors": [..]}` or `{"id": .., "hex": [..]}`
/// object per line.
pub fn parse_palette_records(text: &str) -> Result<Vec<(String, Palette)>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PaletteRecord = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("palette line {}: {e}", i + 1)))?;
        let palette = Palette::try_from(rec.palette)
            .map_err(|e| Error::invalid(format!("palette `{}`: {e}", rec.id)))?;
        if !ids.insert(rec.id.clone()) {
            return Err(Error::invalid(format!("duplicate palette id `{}`", rec.id)));
        }
        out.push((rec.id, palette));
    }
    Ok(out)
}

pub fn load_palette_records(path: &Path) -> Result<Vec<(String, Palette)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_palette_records(&text)
}

/// Keeps the first palette of each [`Palette::dedup_key`] class.
pub fn dedup_palettes(palettes: Vec<(String, Palette)>) -> (Vec<(String, Palette)>, usize) {
    let mut seen = HashSet::new();
    let before = palettes.len();
    let kept: Vec<_> = palettes
        .into_iter()
        .filter(|(_, p)| seen.insert(p.dedup_key()))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// Where palette emotion vectors come from.
pub enum PaletteVectors<'a> {
    Provider(&'a dyn PaletteEmotionProvider),
    File(&'a BTreeMap<String, EmotionVector>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub top_k: usize,
    pub min_similarity: f64,
    pub max_seconds: f64,
    /// Extract features for every kept clip and cache them beside the audio.
    pub cache_features: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            top_k: 5,
            min_similarity: 0.5,
            max_seconds: DEFAULT_MAX_SECONDS,
            cache_features: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub manifest: DatasetManifest,
    /// Top-k candidates per clip, for the sidecar file.
    pub candidates: MatchResult,
    pub duplicates_removed: usize,
    /// Clips whose best palette fell below `min_similarity`.
    pub below_threshold: Vec<String>,
}

/// `*.wav` files directly inside `dir`, sorted by file name, with their stems.
pub fn list_audio(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for item in rd {
        let path = item.map_err(|e| Error::io(dir, e))?.path();
        let is_wav = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.push((stem, path));
        }
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(out)
}

/// Pairs every clip in `audio_dir` with its most similar palette.
pub fn build_dataset(
    audio_dir: &Path,
    palettes: Vec<(String, Palette)>,
    music_vectors: &BTreeMap<String, EmotionVector>,
    palette_vectors: PaletteVectors<'_>,
    opts: &BuildOptions,
) -> Result<BuildReport> {
    let (palettes, duplicates_removed) = dedup_palettes(palettes);
    if duplicates_removed > 0 {
        log::info!("removed {duplicates_removed} duplicate palettes");
    }
    let mut pal_vecs = Vec::with_capacity(palettes.len());
    for (id, p) in &palettes {
        let v = match &palette_vectors {
            PaletteVectors::Provider(provider) => provider.palette_emotion(p)?,
            PaletteVectors::File(map) => *map.get(id).ok_or_else(|| {
                Error::invalid(format!("missing emotion vector for palette `{id}`"))
            })?,
        };
        pal_vecs.push((id.clone(), v));
    }

    let clips = list_audio(audio_dir)?;
    let mut music = Vec::with_capacity(clips.len());
    for (id, _) in &clips {
        let v = music_vectors
            .get(id)
            .ok_or_else(|| Error::invalid(format!("missing emotion vector for music `{id}`")))?;
        music.push((id.clone(), *v));
    }

    let candidates = match_pairs(&music, &pal_vecs, opts.top_k)?;
    let palette_by_id: BTreeMap<&str, &Palette> =
        palettes.iter().map(|(id, p)| (id.as_str(), p)).collect();
    let path_by_id: BTreeMap<&str, &PathBuf> =
        clips.iter().map(|(id, p)| (id.as_str(), p)).collect();
    let pal_vec_by_id: BTreeMap<&str, &EmotionVector> =
        pal_vecs.iter().map(|(id, v)| (id.as_str(), v)).collect();

    let mut entries = Vec::new();
    let mut below_threshold = Vec::new();
    for (music_id, list) in &candidates.ranked {
        let Some(best) = list.first().filter(|c| c.similarity >= opts.min_similarity) else {
            below_threshold.push(music_id.clone());
            continue;
        };
        let audio = path_by_id[music_id.as_str()];
        let feature_path = if opts.cache_features {
            let fp = audio.with_extension(FEATURE_EXTENSION);
            let f = extract_features(audio, opts.max_seconds)
                .map_err(|e| Error::invalid(format!("clip `{music_id}`: {e}")))?;
            f.save(&fp)?;
            Some(fp)
        } else {
            None
        };
        entries.push(DatasetEntry {
            music_id: music_id.clone(),
            audio_path: Some(audio.clone()),
            feature_path,
            palette_id: best.palette_id.clone(),
            palette: palette_by_id[best.palette_id.as_str()].clone(),
            emotion_music: music_vectors[music_id],
            emotion_palette: *pal_vec_by_id[best.palette_id.as_str()],
            similarity: best.similarity,
        });
    }
    if entries.is_empty() {
        return Err(Error::invalid(format!(
            "no clip reached similarity {} with any palette",
            opts.min_similarity
        )));
    }
    Ok(BuildReport {
        manifest: DatasetManifest::new(entries)?,
        candidates,
        duplicates_removed,
        below_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audiofeat::{write_wav, MusicClip, SAMPLE_RATE};
    use crate::emotion::HeuristicProvider;

    fn tone(freq: f64, seconds: f64) -> MusicClip {
        let n = (seconds * SAMPLE_RATE as f64) as usize;
        let s = (0..n)
            .map(|i| (0.3 * (2.0 * std::f64::consts::PI * freq * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect();
        MusicClip::new(s, SAMPLE_RATE).unwrap()
    }

    fn one_hot(i: usize) -> EmotionVector {
        let mut v = [0.0; 8];
        v[i] = 1.0;
        EmotionVector::new(v).unwrap()
    }

    const PALETTES: &str = r##"{"id":"warm","hex":["#ff0000","#ff8800","#ffcc00"]}
{"id":"cool","hex":["#0000ff","#0088ff","#00ccff"]}
{"id":"warm-copy","hex":["#ffcc00","#ff0000","#ff8800"]}
{"id":"gray","hex":["#111111","#777777","#eeeeee"]}
"##;

    #[test]
    fn palette_records_and_dedup() {
        let recs = parse_palette_records(PALETTES).unwrap();
        assert_eq!(recs.len(), 4);
        let (kept, removed) = dedup_palettes(recs);
        assert_eq!(removed, 1);
        assert!(kept.iter().all(|(id, _)| id != "warm-copy"));
        assert!(parse_palette_records("{\"id\":\"a\",\"hex\":[\"#000000\"]}").is_err());
        let dup = "{\"id\":\"a\",\"hex\":[\"#000000\",\"#111111\",\"#222222\"]}\n".repeat(2);
        assert!(parse_palette_records(&dup).is_err());
    }

    #[test]
    fn perfect_matches_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["c0", "c1", "c2"].iter().enumerate() {
            write_wav(&dir.path().join(format!("{name}.wav")), &tone(220.0 * (i + 1) as f64, 0.3)).unwrap();
        }
        let palettes = parse_palette_records(PALETTES).unwrap();
        let pal_vecs: BTreeMap<String, EmotionVector> = [("warm", 0), ("cool", 3), ("gray", 5), ("warm-copy", 1)]
            .iter()
            .map(|&(id, k)| (id.to_string(), one_hot(k)))
            .collect();
        let music: BTreeMap<String, EmotionVector> = [("c0", 5), ("c1", 0), ("c2", 3)]
            .iter()
            .map(|&(id, k)| (id.to_string(), one_hot(k)))
            .collect();
        let report = build_dataset(
            dir.path(),
            palettes.clone(),
            &music,
            PaletteVectors::File(&pal_vecs),
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(report.duplicates_removed, 1);
        let got: Vec<(&str, &str, f64)> = report
            .manifest
            .entries
            .iter()
            .map(|e| (e.music_id.as_str(), e.palette_id.as_str(), e.similarity))
            .collect();
        assert_eq!(got, vec![("c0", "gray", 1.0), ("c1", "warm", 1.0), ("c2", "cool", 1.0)]);
        let e = &report.manifest.entries[0];
        let cached = entry_features(e, Path::new("/"), 60.0).unwrap();
        assert_eq!(cached.rows(), 539);
        assert!(e.feature_path.as_ref().unwrap().exists());

        let strict = BuildOptions {
            min_similarity: 1.01,
            cache_features: false,
            ..Default::default()
        };
        let err = build_dataset(dir.path(), palettes.clone(), &music, PaletteVectors::File(&pal_vecs), &strict);
        assert!(err.is_err());

        let mut partial = music.clone();
        partial.remove("c2");
        let err = build_dataset(
            dir.path(),
            palettes,
            &partial,
            PaletteVectors::Provider(&HeuristicProvider),
            &BuildOptions { cache_features: false, ..Default::default() },
        )
        .unwrap_err();
        assert!(err.to_string().contains("c2"), "{err}");
    }
}
