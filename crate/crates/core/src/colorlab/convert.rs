use serde::{Deserialize, Serialize};

use super::{wrap_degrees, LabColor, LchColor, ACHROMATIC_CHROMA};
use crate::{Error, Result};

// D65 white taken as the row sums of the matrix, so that sRGB white maps to
// a = b = 0 exactly.
const XN: f64 = RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2];
const YN: f64 = RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2];
const ZN: f64 = RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

/// Linear-light channels further than this outside `[0, 1]` count as clipped.
const CLIP_TOLERANCE: f64 = 1e-6;

/// An 8-bit sRGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb8 { r, g, b }
    }

    pub fn to_hex(self) -> String {
        format!("#{:02X}{:02X}{:02X}", self.r, self.g, self.b)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let h = s.trim().trim_start_matches('#');
        if h.len() != 6 || !h.is_ascii() {
            return Err(Error::invalid(format!("bad hex color {s:?}")));
        }
        let channel = |i: usize| {
            u8::from_str_radix(&h[i..i + 2], 16)
                .map_err(|_| Error::invalid(format!("bad hex color {s:?}")))
        };
        Ok(Rgb8::new(channel(0)?, channel(2)?, channel(4)?))
    }
}

fn srgb_decode(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn lab_f_inv(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

fn mat3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn srgb_to_lab(rgb: Rgb8) -> LabColor {
    let lin = [rgb.r, rgb.g, rgb.b].map(|c| srgb_decode(c as f64 / 255.0));
    let [x, y, z] = mat3(&RGB_TO_XYZ, lin);
    let (fx, fy, fz) = (lab_f(x / XN), lab_f(y / YN), lab_f(z / ZN));
    LabColor {
        l: (116.0 * fy - 16.0).clamp(0.0, 100.0),
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

pub fn srgb_to_lch(rgb: Rgb8) -> LchColor {
    lab_to_lch(srgb_to_lab(rgb))
}

pub fn lab_to_lch(lab: LabColor) -> LchColor {
    let c = lab.a.hypot(lab.b);
    let h = if c < ACHROMATIC_CHROMA {
        0.0
    } else {
        wrap_degrees(lab.b.atan2(lab.a).to_degrees())
    };
    LchColor::new(lab.l, c, h)
}

pub fn lch_to_lab(lch: LchColor) -> LabColor {
    let (s, c) = lch.h.to_radians().sin_cos();
    LabColor {
        l: lch.l,
        a: lch.c * c,
        b: lch.c * s,
    }
}

/// Converts to 8-bit sRGB, clamping linear RGB into `[0, 1]`. The flag is
/// `true` when any channel had to be clipped.
pub fn lch_to_srgb(lch: LchColor) -> (Rgb8, bool) {
    let lab = lch_to_lab(lch);
    let fy = (lab.l + 16.0) / 116.0;
    let fx = fy + lab.a / 500.0;
    let fz = fy - lab.b / 200.0;
    let xyz = [XN * lab_f_inv(fx), YN * lab_f_inv(fy), ZN * lab_f_inv(fz)];
    let lin = mat3(&XYZ_TO_RGB, xyz);
    let clipped = lin
        .iter()
        .any(|&v| v < -CLIP_TOLERANCE || v > 1.0 + CLIP_TOLERANCE);
    let [r, g, b] = lin.map(|v| (srgb_encode(v.clamp(0.0, 1.0)) * 255.0).round() as u8);
    (Rgb8 { r, g, b }, clipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_and_black() {
        let w = srgb_to_lch(Rgb8::new(255, 255, 255));
        assert!((w.l - 100.0).abs() < 1e-6);
        assert!(w.c < 1e-3);
        assert_eq!(w.h, 0.0);
        let k = srgb_to_lch(Rgb8::new(0, 0, 0));
        assert_eq!((k.l, k.c, k.h), (0.0, 0.0, 0.0));
        assert_eq!(
            lch_to_srgb(LchColor::new(100.0, 0.0, 0.0)),
            (Rgb8::new(255, 255, 255), false)
        );
    }

    #[test]
    fn pure_red_matches_reference_conversion() {
        // Reference: Lab(53.2408, 80.0925, 67.2032) for sRGB red under D65.
        let lab = srgb_to_lab(Rgb8::new(255, 0, 0));
        assert!((lab.l - 53.2408).abs() < 1e-3);
        assert!((lab.a - 80.0925).abs() < 1e-3);
        assert!((lab.b - 67.2032).abs() < 1e-3);
        let lch = lab_to_lch(lab);
        assert!((lch.l - 53.24).abs() < 5e-3);
        assert!((lch.c - 104.55).abs() < 5e-3);
        assert!((lch.h - 40.00).abs() < 5e-3);
    }

    #[test]
    fn out_of_gamut_is_flagged() {
        let (_, clipped) = lch_to_srgb(LchColor::new(50.0, 140.0, 300.0));
        assert!(clipped);
        let (_, clipped) = lch_to_srgb(srgb_to_lch(Rgb8::new(12, 200, 99)));
        assert!(!clipped);
    }

    #[test]
    fn brute_force_gamut_scan_excludes_chroma_140_at_hue_300() {
        // Largest chroma reachable by any 8-bit sRGB color near L=50, h=300.
        let mut max_c = 0.0f64;
        for r in 0..=255u8 {
            for g in 0..=255u8 {
                for b in 0..=255u8 {
                    let c = srgb_to_lch(Rgb8::new(r, g, b));
                    let dh = (c.h - 300.0).abs();
                    if (c.l - 50.0).abs() < 1.0 && dh.min(360.0 - dh) < 2.0 {
                        max_c = max_c.max(c.c);
                    }
                }
            }
        }
        assert!(max_c > 50.0 && max_c < 140.0, "max chroma {max_c}");
    }

    #[test]
    fn hex_round_trip() {
        let c = Rgb8::new(0x1a, 0xff, 0x07);
        assert_eq!(c.to_hex(), "#1AFF07");
        assert_eq!(Rgb8::from_hex("#1aff07").unwrap(), c);
        assert!(Rgb8::from_hex("#12345").is_err());
        assert!(Rgb8::from_hex("#12345g").is_err());
    }
}
