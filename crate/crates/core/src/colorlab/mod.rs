//! Color spaces, CIEDE2000 and palettes.
//!
//! All conversions use the D65 white point and the 2° standard observer.

mod convert;
mod delta_e;
mod palette;
mod swatch;

pub use convert::{lab_to_lch, lch_to_lab, lch_to_srgb, srgb_to_lab, srgb_to_lch, Rgb8};
pub use delta_e::{ciede2000, ciede2000_lab, ciede2000_generic};
pub use palette::{DedupKey, Palette, PaletteJson, MAX_COLORS, MIN_COLORS};
pub use swatch::{write_ppm, write_svg, SWATCH_HEIGHT, SWATCH_STRIPE_WIDTH};

use serde::{Deserialize, Serialize};

/// Chroma below this is treated as achromatic and its hue stored as 0.
pub const ACHROMATIC_CHROMA: f64 = 1e-6;

/// Maximum chroma produced by the decoder's output scaling.
pub const CHROMA_CEILING: f64 = 150.0;

/// A color in cylindrical CIELCh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LchColor {
    pub l: f64,
    pub c: f64,
    pub h: f64,
}

impl LchColor {
    /// Builds a color, clamping lightness to `[0, 100]`, chroma to `>= 0` and
    /// wrapping hue into `[0, 360)`.
    pub fn new(l: f64, c: f64, h: f64) -> Self {
        debug_assert!(l.is_finite() && c.is_finite() && h.is_finite());
        let l = l.clamp(0.0, 100.0);
        let c = c.max(0.0);
        let h = if c < ACHROMATIC_CHROMA {
            0.0
        } else {
            wrap_degrees(h)
        };
        LchColor { l, c, h }
    }

    pub fn to_lab(self) -> LabColor {
        lch_to_lab(self)
    }

    /// `(l/100, c/150, h/360)`, the decoder's input and output scale.
    pub fn normalized(self) -> [f64; 3] {
        [self.l / 100.0, self.c / CHROMA_CEILING, self.h / 360.0]
    }

    pub fn from_normalized(s: [f64; 3]) -> Self {
        LchColor::new(100.0 * s[0], CHROMA_CEILING * s[1], 360.0 * s[2])
    }
}

/// A color in CIELAB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub fn new(l: f64, a: f64, b: f64) -> Self {
        LabColor { l, a, b }
    }

    pub fn to_lch(self) -> LchColor {
        lab_to_lch(self)
    }
}

pub(crate) fn wrap_degrees(h: f64) -> f64 {
    let w = h.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lch_invariants_are_enforced() {
        let c = LchColor::new(120.0, -3.0, 725.0);
        assert_eq!(c, LchColor::new(100.0, 0.0, 0.0));
        let c = LchColor::new(-5.0, 20.0, -30.0);
        assert_eq!(c.l, 0.0);
        assert!((c.h - 330.0).abs() < 1e-12);
        assert_eq!(LchColor::new(50.0, 1e-9, 123.0).h, 0.0);
        assert_eq!(wrap_degrees(-1e-18), 0.0);
    }
}
