use std::path::{Path, PathBuf};

use super::dataset::{entry_features, extract_features, FEATURE_EXTENSION};
use super::manifest::DatasetManifest;
use super::split::split_ids;
use super::train::TrainConfig;
use crate::audiofeat::FeatureMatrix;
use crate::colorlab::{write_ppm, write_svg, Palette};
use crate::emotion::HeuristicProvider;
use crate::metrics::{evaluate, EvalClip, EvalOptions, Evaluation, ModelGenerator, PaletteGenerator};
use crate::model::ModelState;
use crate::{Error, Result};

/// Reads a [`TrainConfig`] from TOML (`.toml`) or JSON (anything else).
pub fn load_train_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_toml = path
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("toml"));
    let config: TrainConfig = if is_toml {
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
    };
    config.validate()?;
    Ok(config)
}

/// Features from a cached matrix (by extension) or from audio.
pub fn load_input_features(input: &Path, max_seconds: f64) -> Result<FeatureMatrix> {
    let cached = input
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case(FEATURE_EXTENSION));
    if cached {
        FeatureMatrix::load(input)
    } else {
        extract_features(input, max_seconds)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn palette_json(p: &Palette) -> Result<String> {
    let mut s = serde_json::to_string_pretty(p)?;
    s.push('\n');
    Ok(s)
}

/// Writes an SVG or PPM swatch, chosen by the extension of `out`.
pub fn write_swatch(p: &Palette, out: &Path) -> Result<()> {
    let ext = out
        .extension()
        .map(|x| x.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    let mut buf = Vec::new();
    match ext.as_str() {
        "svg" => write_svg(p, &mut buf),
        "ppm" => write_ppm(p, &mut buf),
        _ => {
            return Err(Error::invalid(format!(
                "swatch output `{}` must end in .svg or .ppm",
                out.display()
            )))
        }
    }
    .map_err(|e| Error::io(out, e))?;
    std::fs::write(out, buf).map_err(|e| Error::io(out, e))
}

pub fn load_palette(path: &Path) -> Result<Palette> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Generates `k` palettes with seeds `seed..seed+k` and writes
/// `<stem>_<i>.json`, `.svg` and `.ppm` into `out_dir`. Returns the JSON paths.
pub fn generate_cmd(
    input: &Path,
    checkpoint: &Path,
    k: usize,
    sigma: f64,
    seed: u64,
    out_dir: &Path,
    max_seconds: f64,
) -> Result<Vec<PathBuf>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma must be non-negative"));
    }
    let state = ModelState::load(checkpoint)?;
    let features = load_input_features(input, max_seconds)?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "clip".into());
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let generator = ModelGenerator { state: &state, sigma };
    let mut written = Vec::with_capacity(k);
    for i in 0..k {
        let palette = generator.generate(&features, seed + i as u64)?;
        let base = out_dir.join(format!("{stem}_{i}"));
        let json = base.with_extension("json");
        write_text(&json, &palette_json(&palette)?)?;
        write_swatch(&palette, &base.with_extension("svg"))?;
        write_swatch(&palette, &base.with_extension("ppm"))?;
        written.push(json);
    }
    Ok(written)
}

/// Scores the manifest's test split (the split for `seed`) and writes the
/// metrics CSV.
pub fn evaluate_cmd(
    manifest_path: &Path,
    checkpoint: &Path,
    opts: &EvalOptions,
    max_seconds: f64,
    out_csv: &Path,
) -> Result<Evaluation> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let split = split_ids(&manifest.music_ids(), opts.seed);
    if split.test.is_empty() {
        return Err(Error::invalid(format!(
            "test split is empty ({} entries give no test clips)",
            manifest.len()
        )));
    }
    let state = ModelState::load(checkpoint)?;
    let mut clips = Vec::with_capacity(split.test.len());
    for id in &split.test {
        let entry = manifest.get(id).expect("split ids come from the manifest");
        clips.push(EvalClip {
            id: id.clone(),
            features: entry_features(entry, base, max_seconds)?,
            emotion_music: entry.emotion_music,
            ground_truth: Some(entry.palette.clone()),
        });
    }
    let generator = ModelGenerator {
        state: &state,
        sigma: state.config.noise_sigma,
    };
    let eval = evaluate(&clips, &generator, &HeuristicProvider, opts)?;
    write_text(out_csv, &eval.to_csv())?;
    Ok(eval)
}
