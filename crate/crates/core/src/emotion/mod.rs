//! Eight-octant emotion vectors over Russell's circumplex, similarity and
//! music–palette matching.

mod heuristic;
mod io;
mod matching;
mod vector;

pub use heuristic::{
    heuristic_palette_emotion, octant_angle_degrees, palette_emotion_generic, HeuristicProvider,
    SCORE_FLOOR,
};
pub use io::{load_emotion_vectors, parse_emotion_vectors, save_emotion_vectors};
pub use matching::{match_pairs, write_matches_jsonl, MatchCandidate, MatchResult, SkippedVector};
pub use vector::{
    cosine_similarity, cosine_similarity_generic, js_divergence, EmotionDistribution,
    EmotionVector, EMOTION_LABELS, NUM_EMOTIONS,
};

use crate::colorlab::Palette;
use crate::Result;

/// Source of palette emotion vectors.
pub trait PaletteEmotionProvider {
    fn palette_emotion(&self, palette: &Palette) -> Result<EmotionVector>;
}

impl<F> PaletteEmotionProvider for F
where
    F: Fn(&Palette) -> Result<EmotionVector>,
{
    fn palette_emotion(&self, palette: &Palette) -> Result<EmotionVector> {
        self(palette)
    }
}
