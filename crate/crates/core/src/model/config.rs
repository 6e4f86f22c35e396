use serde::{Deserialize, Serialize};

use crate::colorlab::MAX_COLORS;
use crate::{Error, Result};

/// Architecture hyperparameters shared by the encoder and decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub dropout: f64,
    /// Frames per temporal patch.
    pub patch_frames: usize,
    pub max_colors: usize,
    pub noise_sigma: f64,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 256,
            encoder_layers: 4,
            decoder_layers: 4,
            heads: 8,
            ff_dim: 1024,
            dropout: 0.1,
            patch_frames: 4,
            max_colors: MAX_COLORS,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::invalid(m));
        if self.d_model == 0 || self.d_model % 2 != 0 {
            return fail(format!("d_model must be even and positive, got {}", self.d_model));
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return fail(format!(
                "d_model {} is not divisible by heads {}",
                self.d_model, self.heads
            ));
        }
        if self.ff_dim == 0 || self.encoder_layers == 0 || self.decoder_layers == 0 {
            return fail("ff_dim and layer counts must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.patch_frames == 0 {
            return fail("patch_frames must be at least 1".into());
        }
        if self.max_colors != MAX_COLORS {
            return fail(format!("max_colors must be {MAX_COLORS}"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = ModelConfig::default();
        for bad in [
            ModelConfig { heads: 7, ..base.clone() },
            ModelConfig { d_model: 255, heads: 5, ..base.clone() },
            ModelConfig { patch_frames: 0, ..base.clone() },
            ModelConfig { max_colors: 6, ..base.clone() },
            ModelConfig { dropout: 1.0, ..base.clone() },
            ModelConfig { noise_sigma: -0.1, ..base.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
