use serde::{Deserialize, Serialize};

use crate::autograd::Real;
use crate::{Error, Result};

pub const NUM_EMOTIONS: usize = 8;

/// Octant labels in vector order.
pub const EMOTION_LABELS: [&str; NUM_EMOTIONS] = [
    "excited", "happy", "content", "calm", "depressed", "sad", "afraid", "angry",
];

/// Scores against the eight octant labels, in [`EMOTION_LABELS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmotionVector([f64; NUM_EMOTIONS]);

impl EmotionVector {
    pub fn new(scores: [f64; NUM_EMOTIONS]) -> Result<Self> {
        if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "emotion score `{}` is not finite",
                EMOTION_LABELS[i]
            )));
        }
        Ok(EmotionVector(scores))
    }

    pub fn from_slice(scores: &[f64]) -> Result<Self> {
        let arr: [f64; NUM_EMOTIONS] = scores.try_into().map_err(|_| {
            Error::invalid(format!(
                "emotion vector needs {NUM_EMOTIONS} values, got {}",
                scores.len()
            ))
        })?;
        EmotionVector::new(arr)
    }

    pub fn scores(&self) -> &[f64; NUM_EMOTIONS] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, f: f64) -> EmotionVector {
        EmotionVector(self.0.map(|v| v * f))
    }

    /// Clamps negatives to zero and L1-normalizes; uniform if nothing is left.
    pub fn to_distribution(&self) -> EmotionDistribution {
        let clamped = self.0.map(|v| v.max(0.0));
        let sum: f64 = clamped.iter().sum();
        if sum > 0.0 {
            EmotionDistribution(clamped.map(|v| v / sum))
        } else {
            EmotionDistribution([1.0 / NUM_EMOTIONS as f64; NUM_EMOTIONS])
        }
    }
}

impl TryFrom<Vec<f64>> for EmotionVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        EmotionVector::from_slice(&v)
    }
}

impl From<EmotionVector> for Vec<f64> {
    fn from(v: EmotionVector) -> Self {
        v.0.to_vec()
    }
}

/// A probability distribution over the eight octants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionDistribution([f64; NUM_EMOTIONS]);

impl EmotionDistribution {
    pub fn new(probs: [f64; NUM_EMOTIONS]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("distribution must be non-negative and sum to 1"));
        }
        Ok(EmotionDistribution(probs))
    }

    pub fn probs(&self) -> &[f64; NUM_EMOTIONS] {
        &self.0
    }
}

/// Cosine similarity over any [`Real`]; callers guarantee non-zero norms.
pub fn cosine_similarity_generic<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = a[0] * b[0];
    let mut na = a[0] * a[0];
    let mut nb = b[0] * b[0];
    for i in 1..a.len() {
        dot = dot + a[i] * b[i];
        na = na + a[i] * a[i];
        nb = nb + b[i] * b[i];
    }
    dot / (na * nb).sqrt()
}

pub fn cosine_similarity(a: &EmotionVector, b: &EmotionVector) -> Result<f64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero-norm emotion vector"));
    }
    Ok(cosine_similarity_generic(&a.0, &b.0).clamp(-1.0, 1.0))
}

/// Jensen–Shannon divergence with natural logarithms, bounded by ln 2.
pub fn js_divergence(p: &EmotionDistribution, q: &EmotionDistribution) -> f64 {
    let kl_to_mid = |x: &[f64; NUM_EMOTIONS], y: &[f64; NUM_EMOTIONS]| -> f64 {
        x.iter()
            .zip(y)
            .filter(|(xi, _)| **xi > 0.0)
            .map(|(xi, yi)| xi * (2.0 * xi / (xi + yi)).ln())
            .sum()
    };
    let d = 0.5 * kl_to_mid(&p.0, &q.0) + 0.5 * kl_to_mid(&q.0, &p.0);
    d.clamp(0.0, std::f64::consts::LN_2)
}
