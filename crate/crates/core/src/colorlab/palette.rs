use serde::{Deserialize, Serialize};

use super::{lch_to_srgb, srgb_to_lch, LchColor, Rgb8};
use crate::{Error, Result};

pub const MIN_COLORS: usize = 3;
pub const MAX_COLORS: usize = 5;

/// An ordered palette of 3 to 5 colors.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    colors: Vec<LchColor>,
}

/// Opaque deduplication key; see [`Palette::dedup_key`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(Vec<(i64, i64, i64)>);

impl Palette {
    pub fn new(colors: Vec<LchColor>) -> Result<Self> {
        if !(MIN_COLORS..=MAX_COLORS).contains(&colors.len()) {
            return Err(Error::invalid(format!(
                "palette must have {MIN_COLORS} to {MAX_COLORS} colors, got {}",
                colors.len()
            )));
        }
        if colors
            .iter()
            .any(|c| !(c.l.is_finite() && c.c.is_finite() && c.h.is_finite()))
        {
            return Err(Error::invalid("palette contains a non-finite color"));
        }
        Ok(Palette {
            colors: colors
                .into_iter()
                .map(|c| LchColor::new(c.l, c.c, c.h))
                .collect(),
        })
    }

    pub fn from_hex<S: AsRef<str>>(hex: &[S]) -> Result<Self> {
        let colors = hex
            .iter()
            .map(|h| Rgb8::from_hex(h.as_ref()).map(srgb_to_lch))
            .collect::<Result<Vec<_>>>()?;
        Palette::new(colors)
    }

    pub fn colors(&self) -> &[LchColor] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn hex(&self) -> Vec<String> {
        self.colors
            .iter()
            .map(|&c| lch_to_srgb(c).0.to_hex())
            .collect()
    }

    /// Colors sorted lexicographically by `(l, c, h)` ascending.
    pub fn canonical_order(&self) -> Palette {
        let mut colors = self.colors.clone();
        colors.sort_by(|a, b| {
            a.l.total_cmp(&b.l)
                .then(a.c.total_cmp(&b.c))
                .then(a.h.total_cmp(&b.h))
        });
        Palette { colors }
    }

    /// Key that is equal for two palettes exactly when their colors agree
    /// after quantizing L and C to 0.5 and hue to 1°, irrespective of order.
    pub fn dedup_key(&self) -> DedupKey {
        let mut q: Vec<(i64, i64, i64)> = self
            .colors
            .iter()
            .map(|c| {
                let h = (c.h.round() as i64).rem_euclid(360);
                ((c.l * 2.0).round() as i64, (c.c * 2.0).round() as i64, h)
            })
            .collect();
        q.sort_unstable();
        DedupKey(q)
    }
}

/// Wire form: `{"colors":[{"l":..,"c":..,"h":..}],"hex":["#RRGGBB",..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaletteJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<LchColor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hex: Option<Vec<String>>,
}

impl From<&Palette> for PaletteJson {
    fn from(p: &Palette) -> Self {
        PaletteJson {
            colors: Some(p.colors.clone()),
            hex: Some(p.hex()),
        }
    }
}

impl TryFrom<PaletteJson> for Palette {
    type Error = Error;

    /// LCh colors take precedence; hex alone is accepted for source palettes.
    fn try_from(j: PaletteJson) -> Result<Self> {
        match (j.colors, j.hex) {
            (Some(colors), _) => Palette::new(colors),
            (None, Some(hex)) => Palette::from_hex(&hex),
            (None, None) => Err(Error::invalid("palette needs `colors` or `hex`")),
        }
    }
}

impl Serialize for Palette {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PaletteJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Palette {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PaletteJson::deserialize(d)?;
        Palette::try_from(j).map_err(serde::de::Error::custom)
    }
}
