//! Offline palette emotion provider.
//!
//! Each palette is placed in the valence–arousal plane:
//!
//! ```text
//! valence = mean(L)/50 - 1 + 0.3 * mean(cos(h) * C/150)
//! arousal = mean(C)/75 - 1
//! ```
//!
//! and scored against the eight octant directions. Octant `k` (label order
//! excited, happy, content, calm, depressed, sad, afraid, angry) points at
//! `45° - 45°·k`, i.e. excited at 45°, happy at 0° (pure positive valence),
//! calm at -90° (pure low arousal), sad at 180°, angry at 90°. The score is
//! the positive part of the projection plus [`SCORE_FLOOR`], which keeps
//! the vector away from zero norm at the origin of the plane.

use super::{EmotionVector, PaletteEmotionProvider, NUM_EMOTIONS};
use crate::autograd::Real;
use crate::colorlab::{Palette, CHROMA_CEILING};
use crate::Result;

pub const SCORE_FLOOR: f64 = 0.01;

const WARM_BONUS: f64 = 0.3;

/// Direction of octant `k` in degrees, measured from the positive valence axis.
pub fn octant_angle_degrees(k: usize) -> f64 {
    45.0 - 45.0 * k as f64
}

/// Emotion scores for colors given as `(L, C, h°)`, over any [`Real`].
pub fn palette_emotion_generic<S: Real>(colors: &[[S; 3]]) -> [S; NUM_EMOTIONS] {
    assert!(!colors.is_empty());
    let n = colors.len() as f64;
    let deg = std::f64::consts::PI / 180.0;
    let mut sum_l = colors[0][0];
    let mut sum_c = colors[0][1];
    let mut sum_warm = (colors[0][2] * deg).cos() * colors[0][1];
    for c in &colors[1..] {
        sum_l = sum_l + c[0];
        sum_c = sum_c + c[1];
        sum_warm = sum_warm + (c[2] * deg).cos() * c[1];
    }
    let valence = sum_l / (50.0 * n) - 1.0 + sum_warm * (WARM_BONUS / (CHROMA_CEILING * n));
    let arousal = sum_c / (75.0 * n) - 1.0;
    std::array::from_fn(|k| {
        let (s, c) = (octant_angle_degrees(k) * deg).sin_cos();
        (valence * c + arousal * s).relu() + SCORE_FLOOR
    })
}

pub fn heuristic_palette_emotion(p: &Palette) -> EmotionVector {
    let colors: Vec<[f64; 3]> = p.colors().iter().map(|c| [c.l, c.c, c.h]).collect();
    EmotionVector::new(palette_emotion_generic(&colors)).expect("heuristic scores are finite")
}

/// [`heuristic_palette_emotion`] as a provider.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicProvider;

impl PaletteEmotionProvider for HeuristicProvider {
    fn palette_emotion(&self, palette: &Palette) -> Result<EmotionVector> {
        Ok(heuristic_palette_emotion(palette))
    }
}
