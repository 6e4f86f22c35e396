use crate::colorlab::{ciede2000, Palette};
use crate::emotion::{cosine_similarity, EmotionVector, PaletteEmotionProvider};
use crate::losses::assigned_mean_delta_e;
use crate::{Error, Result};

/// Mean ΔE00 over unordered color pairs within one palette.
pub fn palette_div(p: &Palette) -> Result<f64> {
    let c = p.colors();
    if c.len() < 2 {
        return Err(Error::invalid("diversity needs at least two colors"));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            sum += ciede2000(c[i], c[j]);
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Assigned mean ΔE00 between two palettes, compared on the shorter
/// length after canonical ordering.
pub fn palette_distance(a: &Palette, b: &Palette) -> Result<f64> {
    let n = a.len().min(b.len());
    let a = a.canonical_order();
    let b = b.canonical_order();
    Ok(assigned_mean_delta_e(&a.colors()[..n], &b.colors()[..n])?.0)
}

/// Mean pairwise palette distance among generations for one input.
pub fn multimodality(palettes: &[Palette]) -> Result<f64> {
    if palettes.len() < 2 {
        return Err(Error::invalid("multimodality needs at least two palettes"));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..palettes.len() {
        for j in i + 1..palettes.len() {
            sum += palette_distance(&palettes[i], &palettes[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

pub fn emotion_similarity(
    music: &EmotionVector,
    palette: &Palette,
    provider: &dyn PaletteEmotionProvider,
) -> Result<f64> {
    cosine_similarity(music, &provider.palette_emotion(palette)?)
}
