use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::net::{augment, Forward};
use super::state::ModelState;
use crate::audiofeat::FeatureMatrix;
use crate::autograd::{Graph, Mat, Var};
use crate::colorlab::{Palette, MIN_COLORS};
use crate::emotion::{palette_emotion_generic, EmotionVector};
use crate::losses::{
    color_distance_generic, diversity_generic, emotion_consistency_generic, stop_loss_generic,
    HueMetric, LossParts, LossWeights,
};
use crate::{Error, Result};

/// One supervised pair with its emotion annotations.
#[derive(Debug, Clone, Copy)]
pub struct TrainExample<'a> {
    pub features: &'a FeatureMatrix,
    pub target: &'a Palette,
    pub emotion_music: &'a EmotionVector,
    pub emotion_palette: &'a EmotionVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveOptions {
    pub weights: LossWeights,
    pub hue_metric: HueMetric,
    pub noise_sigma: f64,
    /// Enables dropout.
    pub train_mode: bool,
}

#[derive(Debug, Clone)]
pub struct ObjectiveOutput {
    /// Batch means of the unweighted terms.
    pub parts: LossParts,
    pub total: f64,
    /// Optimal assignment used for each example's color term.
    pub assignments: Vec<Vec<usize>>,
    /// Gradient of `total` per parameter name, when requested.
    pub grads: Option<BTreeMap<String, Mat>>,
}

/// Teacher-forced batch loss. Noise and dropout masks are drawn from `rng`
/// in a fixed order, so identical generator states give identical results.
pub fn objective(
    state: &ModelState,
    batch: &[TrainExample<'_>],
    opts: &ObjectiveOptions,
    rng: &mut ChaCha8Rng,
    with_grad: bool,
) -> Result<ObjectiveOutput> {
    if batch.is_empty() {
        return Err(Error::invalid("empty training batch"));
    }
    for ex in batch {
        let n = ex.target.len();
        if !(MIN_COLORS..=state.config.max_colors).contains(&n) {
            return Err(Error::invalid(format!("target palette has {n} colors")));
        }
        if ex.emotion_music.norm() == 0.0 || ex.emotion_palette.norm() == 0.0 {
            return Err(Error::invalid("training example has a zero-norm emotion vector"));
        }
    }
    let d = state.config.d_model;
    let noise: Vec<Vec<f64>> = batch
        .iter()
        .map(|_| augment(&vec![0.0; d], opts.noise_sigma, rng))
        .collect();
    let dropout_rng = opts
        .train_mode
        .then(|| ChaCha8Rng::seed_from_u64(rng.gen()));

    let g = Graph::new();
    let fwd = Forward::new(&g, state, dropout_rng);
    let features: Vec<&FeatureMatrix> = batch.iter().map(|e| e.features).collect();
    let (tokens, segs) = fwd.encode(&features)?;
    let (memory, mem_segs) = fwd.memory(tokens, &segs, &noise);
    let prefixes: Vec<Vec<[f64; 3]>> = batch
        .iter()
        .map(|e| e.target.colors().iter().map(|c| c.normalized()).collect())
        .collect();
    let (act, stop, dec_segs) = fwd.decode(&prefixes, memory, &mem_segs);
    if act.value().data.iter().chain(&stop.value().data).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("decoder produced non-finite outputs".into()));
    }

    let mut sums: Option<LossParts<Var<'_>>> = None;
    let mut assignments = Vec::with_capacity(batch.len());
    for (ex, seg) in batch.iter().zip(&dec_segs) {
        let n = ex.target.len();
        let rows: Vec<[Var<'_>; 3]> = (0..n)
            .map(|i| {
                let r = seg.start + i;
                [act.at(r, 0) * 100.0, act.at(r, 1) * 150.0, act.at(r, 2) * 360.0]
            })
            .collect();
        let (color, assignment) = color_distance_generic(&rows, ex.target.colors())?;
        assignments.push(assignment.permutation);
        let hues: Vec<Var<'_>> = (0..n).map(|i| act.at(seg.start + i, 2)).collect();
        let diversity = diversity_generic(&hues, opts.hue_metric);
        let predicted = palette_emotion_generic(&rows);
        let emotion = emotion_consistency_generic(
            ex.emotion_music.scores(),
            &predicted,
            ex.emotion_palette.scores(),
        );
        let logits: Vec<Var<'_>> = (0..seg.len).map(|i| stop.at(seg.start + i, 0)).collect();
        let stop_term = stop_loss_generic(&logits);
        let here = LossParts {
            color,
            diversity,
            emotion,
            stop: stop_term,
        };
        sums = Some(match sums {
            None => here,
            Some(s) => LossParts {
                color: s.color + here.color,
                diversity: s.diversity + here.diversity,
                emotion: s.emotion + here.emotion,
                stop: s.stop + here.stop,
            },
        });
    }
    let s = sums.expect("batch is non-empty");
    let inv = 1.0 / batch.len() as f64;
    let mean = LossParts {
        color: s.color * inv,
        diversity: s.diversity * inv,
        emotion: s.emotion * inv,
        stop: s.stop * inv,
    };
    let total = mean.weighted(&opts.weights);
    let parts = LossParts {
        color: mean.color.item(),
        diversity: mean.diversity.item(),
        emotion: mean.emotion.item(),
        stop: mean.stop.item(),
    };
    let total_value = total.item();
    if !parts.is_finite() || !total_value.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss: color {} diversity {} emotion {} stop {}",
            parts.color, parts.diversity, parts.emotion, parts.stop
        )));
    }
    let grads = with_grad.then(|| {
        let grads = g.backward(total);
        fwd.leaves
            .iter()
            .map(|(name, v)| (name.clone(), grads.get_or_zeros(*v)))
            .collect()
    });
    Ok(ObjectiveOutput {
        parts,
        total: total_value,
        assignments,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorlab::LchColor;
    use crate::emotion::heuristic_palette_emotion;
    use crate::model::ModelConfig;
    use std::sync::Arc;

    fn tiny() -> ModelConfig {
        ModelConfig {
            d_model: 16,
            heads: 2,
            ff_dim: 32,
            encoder_layers: 1,
            decoder_layers: 1,
            patch_frames: 2,
            ..ModelConfig::default()
        }
    }

    fn fixture(seed: u64) -> (Vec<FeatureMatrix>, Vec<Palette>, Vec<EmotionVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feats = (0..2)
            .map(|_| {
                FeatureMatrix::new(539, 5, (0..539 * 5).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        let pals: Vec<Palette> = (0..2)
            .map(|i| {
                Palette::new(
                    (0..3 + i)
                        .map(|_| {
                            LchColor::new(
                                rng.gen_range(20.0..80.0),
                                rng.gen_range(10.0..60.0),
                                rng.gen_range(20.0..340.0),
                            )
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let emo = pals.iter().map(heuristic_palette_emotion).collect();
        (feats, pals, emo)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let state = ModelState::init(&tiny()).unwrap();
        let (feats, pals, emo) = fixture(2);
        let batch: Vec<TrainExample> = (0..2)
            .map(|i| TrainExample {
                features: &feats[i],
                target: &pals[i],
                emotion_music: &emo[1 - i],
                emotion_palette: &emo[i],
            })
            .collect();
        let opts = ObjectiveOptions {
            weights: LossWeights::default(),
            hue_metric: HueMetric::Linear,
            noise_sigma: 0.1,
            train_mode: false,
        };
        let run = |s: &ModelState, grad: bool| {
            objective(s, &batch, &opts, &mut ChaCha8Rng::seed_from_u64(9), grad).unwrap()
        };
        let base = run(&state, true);
        let grads = base.grads.as_ref().unwrap();
        let names: Vec<&String> = state.params().keys().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = 1e-3;
        let mut checked = 0;
        while checked < 20 {
            let name = names[rng.gen_range(0..names.len())];
            let idx = rng.gen_range(0..state.param(name).len());
            let perturbed = |delta: f64| {
                let mut s = state.clone();
                Arc::make_mut(s.params_mut().get_mut(name).unwrap()).data[idx] += delta;
                run(&s, false)
            };
            let (plus, minus) = (perturbed(h), perturbed(-h));
            assert_eq!(plus.assignments, base.assignments);
            assert_eq!(minus.assignments, base.assignments);
            let numeric = (plus.total - minus.total) / (2.0 * h);
            let analytic = grads[name].data[idx];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-7);
            assert!(rel < 1e-3, "{name}[{idx}]: analytic {analytic} numeric {numeric}");
            checked += 1;
        }
    }

    #[test]
    fn deterministic_given_generator_state() {
        let state = ModelState::init(&tiny()).unwrap();
        let (feats, pals, emo) = fixture(3);
        let batch = [TrainExample {
            features: &feats[0],
            target: &pals[0],
            emotion_music: &emo[0],
            emotion_palette: &emo[0],
        }];
        let opts = ObjectiveOptions {
            weights: LossWeights::default(),
            hue_metric: HueMetric::Linear,
            noise_sigma: 0.1,
            train_mode: true,
        };
        let a = objective(&state, &batch, &opts, &mut ChaCha8Rng::seed_from_u64(1), true).unwrap();
        let b = objective(&state, &batch, &opts, &mut ChaCha8Rng::seed_from_u64(1), true).unwrap();
        assert_eq!(a.total, b.total);
        assert_eq!(a.grads, b.grads);
    }
}
