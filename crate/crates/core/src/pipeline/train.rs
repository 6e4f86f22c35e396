use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{entry_features, DEFAULT_MAX_SECONDS};
use super::manifest::DatasetManifest;
use super::optim::{cosine_lr, AdamW};
use super::split::{split_ids, Split};
use crate::audiofeat::FeatureMatrix;
use crate::colorlab::Palette;
use crate::emotion::EmotionVector;
use crate::losses::{HueMetric, LossParts, LossWeights};
use crate::model::{objective, ModelConfig, ModelState, ObjectiveOptions, TrainExample};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    /// Learning rate reached at the last epoch.
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weights: LossWeights,
    pub hue_metric: HueMetric,
    /// Embedding noise during training.
    pub noise_sigma: f64,
    /// Drives the split, batch order, noise and dropout. Weight
    /// initialization uses `model.seed`.
    pub seed: u64,
    pub max_seconds: f64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            lr_min: 1e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            batch_size: 16,
            epochs: 100,
            weights: LossWeights::default(),
            hue_metric: HueMetric::default(),
            noise_sigma: 0.1,
            seed: 0,
            max_seconds: DEFAULT_MAX_SECONDS,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lr) {
            return Err(Error::invalid("lr must be positive"));
        }
        if !(self.lr_min.is_finite() && self.lr_min >= 0.0 && self.lr_min <= self.lr) {
            return Err(Error::invalid("lr_min must lie in [0, lr]"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::invalid("AdamW betas must lie in [0, 1)"));
        }
        if !positive(self.eps) || !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid("eps must be positive and weight_decay non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma must be non-negative"));
        }
        if !positive(self.max_seconds) {
            return Err(Error::invalid("max_seconds must be positive"));
        }
        self.weights.validate()?;
        self.model.validate()
    }

    fn objective_options(&self, train_mode: bool) -> ObjectiveOptions {
        ObjectiveOptions {
            weights: self.weights,
            hue_metric: self.hue_metric,
            noise_sigma: if train_mode { self.noise_sigma } else { 0.0 },
            train_mode,
        }
    }
}

/// An owned training pair.
#[derive(Debug, Clone)]
pub struct FitExample {
    pub id: String,
    pub features: FeatureMatrix,
    pub palette: Palette,
    pub emotion_music: EmotionVector,
    pub emotion_palette: EmotionVector,
}

impl FitExample {
    fn borrowed(&self) -> TrainExample<'_> {
        TrainExample {
            features: &self.features,
            target: &self.palette,
            emotion_music: &self.emotion_music,
            emotion_palette: &self.emotion_palette,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub epoch: usize,
    pub step: usize,
    pub parts: LossParts,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train: LossParts,
    pub train_total: f64,
    pub val_total: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub final_state: ModelState,
    /// Lowest validation loss, or lowest training loss without a
    /// validation set.
    pub best_state: ModelState,
    pub best_epoch: usize,
    pub epochs: Vec<EpochLog>,
    pub steps: Vec<StepLog>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl FitOutcome {
    pub fn epochs_csv(&self) -> String {
        let mut s = String::from(
            "epoch,lr,train_color,train_diversity,train_emotion,train_stop,train_total,val_total\n",
        );
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                e.epoch,
                e.lr,
                e.train.color,
                e.train.diversity,
                e.train.emotion,
                e.train.stop,
                e.train_total,
                fmt_opt(e.val_total)
            );
        }
        s
    }

    pub fn steps_csv(&self) -> String {
        let mut s = String::from("epoch,step,L_color,L_diversity,L_emotion,L_stop,total\n");
        for r in &self.steps {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.epoch, r.step, r.parts.color, r.parts.diversity, r.parts.emotion, r.parts.stop, r.total
            );
        }
        s
    }
}

fn add_scaled(acc: &mut LossParts, p: &LossParts, w: f64) {
    acc.color += w * p.color;
    acc.diversity += w * p.diversity;
    acc.emotion += w * p.emotion;
    acc.stop += w * p.stop;
}

const ZERO_PARTS: LossParts = LossParts {
    color: 0.0,
    diversity: 0.0,
    emotion: 0.0,
    stop: 0.0,
};

/// Eval-mode teacher-forced loss without noise, averaged over examples.
pub fn mean_loss(
    state: &ModelState,
    examples: &[FitExample],
    config: &TrainConfig,
) -> Result<(LossParts, f64)> {
    if examples.is_empty() {
        return Err(Error::invalid("no examples to score"));
    }
    let opts = config.objective_options(false);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut acc = ZERO_PARTS;
    let mut total = 0.0;
    for chunk in examples.chunks(config.batch_size) {
        let batch: Vec<TrainExample> = chunk.iter().map(FitExample::borrowed).collect();
        let out = objective(state, &batch, &opts, &mut rng, false)?;
        let w = chunk.len() as f64 / examples.len() as f64;
        add_scaled(&mut acc, &out.parts, w);
        total += w * out.total;
    }
    Ok((acc, total))
}

/// Trains a freshly initialized model on `train`, scoring `val` after
/// every epoch.
pub fn fit(train: &[FitExample], val: &[FitExample], config: &TrainConfig) -> Result<FitOutcome> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut state = ModelState::init(&config.model)?;
    let mut opt = AdamW::new(config.beta1, config.beta2, config.eps, config.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let opts = config.objective_options(true);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut steps = Vec::new();
    let mut best: Option<(f64, usize, ModelState)> = None;
    let mut step = 0;

    for e in 0..config.epochs {
        let epoch = e + 1;
        let lr = cosine_lr(config.lr, config.lr_min, e, config.epochs);
        order.shuffle(&mut rng);
        let mut acc = ZERO_PARTS;
        let mut acc_total = 0.0;
        for idx in order.chunks(config.batch_size) {
            step += 1;
            let batch: Vec<TrainExample> = idx.iter().map(|&i| train[i].borrowed()).collect();
            let out = objective(&state, &batch, &opts, &mut rng, true).map_err(|err| match err {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch} step {step}: {m}")),
                other => other,
            })?;
            let grads = out.grads.as_ref().expect("gradients were requested");
            opt.step(&mut state, grads, lr);
            if !state.is_finite() {
                return Err(Error::Numeric(format!(
                    "epoch {epoch} step {step}: non-finite weights after update (loss {})",
                    out.total
                )));
            }
            let w = idx.len() as f64 / train.len() as f64;
            add_scaled(&mut acc, &out.parts, w);
            acc_total += w * out.total;
            steps.push(StepLog {
                epoch,
                step,
                parts: out.parts,
                total: out.total,
            });
        }
        let val_total = if val.is_empty() {
            None
        } else {
            Some(mean_loss(&state, val, config)?.1)
        };
        let score = val_total.unwrap_or(acc_total);
        log::info!(
            "epoch {epoch}: train {acc_total:.4} (color {:.3}) val {}",
            acc.color,
            fmt_opt(val_total)
        );
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, epoch, state.clone()));
        }
        epochs.push(EpochLog {
            epoch,
            lr,
            train: acc,
            train_total: acc_total,
            val_total,
        });
    }
    let (_, best_epoch, best_state) = best.expect("at least one epoch ran");
    Ok(FitOutcome {
        final_state: state,
        best_state,
        best_epoch,
        epochs,
        steps,
    })
}

/// Loads every manifest entry's features as training pairs.
pub fn load_examples(
    manifest: &DatasetManifest,
    base: &Path,
    max_seconds: f64,
) -> Result<Vec<FitExample>> {
    manifest
        .entries
        .iter()
        .map(|e| {
            Ok(FitExample {
                id: e.music_id.clone(),
                features: entry_features(e, base, max_seconds)?,
                palette: e.palette.clone(),
                emotion_music: e.emotion_music,
                emotion_palette: e.emotion_palette,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub best_checkpoint: PathBuf,
    pub final_checkpoint: PathBuf,
    pub epochs_csv: PathBuf,
    pub steps_csv: PathBuf,
    pub split: Split,
    pub best_epoch: usize,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Splits the manifest, fits on the training part and writes checkpoints,
/// loss logs and the split into `out_dir`.
pub fn train(
    manifest: &DatasetManifest,
    base: &Path,
    config: &TrainConfig,
    out_dir: &Path,
) -> Result<TrainArtifacts> {
    config.validate()?;
    if manifest.len() < 2 {
        return Err(Error::invalid("training needs at least two manifest entries"));
    }
    let split = split_ids(&manifest.music_ids(), config.seed);
    let examples = load_examples(manifest, base, config.max_seconds)?;
    let pick = |ids: &[String]| -> Vec<FitExample> {
        examples
            .iter()
            .filter(|x| ids.binary_search(&x.id).is_ok())
            .cloned()
            .collect()
    };
    let (train_set, val_set) = (pick(&split.train), pick(&split.val));
    let outcome = fit(&train_set, &val_set, config)?;

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let artifacts = TrainArtifacts {
        best_checkpoint: out_dir.join("best.json"),
        final_checkpoint: out_dir.join("final.json"),
        epochs_csv: out_dir.join("epochs.csv"),
        steps_csv: out_dir.join("steps.csv"),
        split,
        best_epoch: outcome.best_epoch,
    };
    outcome.best_state.save(&artifacts.best_checkpoint)?;
    outcome.final_state.save(&artifacts.final_checkpoint)?;
    write(&artifacts.epochs_csv, &outcome.epochs_csv())?;
    write(&artifacts.steps_csv, &outcome.steps_csv())?;
    let mut split_json = serde_json::to_string_pretty(&artifacts.split)?;
    split_json.push('\n');
    write(&out_dir.join("split.json"), &split_json)?;
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorlab::LchColor;
    use crate::emotion::heuristic_palette_emotion;
    use rand::Rng;

    pub(crate) fn tiny_config() -> TrainConfig {
        TrainConfig {
            batch_size: 2,
            epochs: 3,
            lr: 1e-3,
            model: ModelConfig {
                d_model: 16,
                heads: 2,
                ff_dim: 32,
                encoder_layers: 1,
                decoder_layers: 1,
                patch_frames: 2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn examples(n: usize) -> Vec<FitExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..n)
            .map(|i| {
                let data = (0..539 * 6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let palette = Palette::new(
                    (0..3 + i % 3)
                        .map(|_| LchColor::new(rng.gen_range(20.0..80.0), rng.gen_range(5.0..60.0), rng.gen_range(0.0..360.0)))
                        .collect(),
                )
                .unwrap();
                let e = heuristic_palette_emotion(&palette);
                FitExample {
                    id: format!("c{i}"),
                    features: FeatureMatrix::new(539, 6, data).unwrap(),
                    palette,
                    emotion_music: e,
                    emotion_palette: e,
                }
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { lr_min: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let parsed: TrainConfig = toml::from_str("epochs = 7\n[model]\nd_model = 32\nheads = 4\n").unwrap();
        assert_eq!((parsed.epochs, parsed.model.d_model, parsed.lr), (7, 32, 1e-4));
        assert!(toml::from_str::<TrainConfig>("epoch = 7\n").is_err());
    }

    #[test]
    fn fit_is_deterministic_and_logs_every_step() {
        let ex = examples(5);
        let cfg = tiny_config();
        let a = fit(&ex[..4], &ex[4..], &cfg).unwrap();
        let b = fit(&ex[..4], &ex[4..], &cfg).unwrap();
        assert_eq!(a.epochs_csv(), b.epochs_csv());
        assert_eq!(a.steps_csv(), b.steps_csv());
        assert_eq!(a.steps.len(), 6);
        assert_eq!(a.epochs.len(), 3);
        assert!(a.epochs.iter().all(|e| e.val_total.is_some()));
        let best = a.epochs.iter().map(|e| e.val_total.unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(a.epochs[a.best_epoch - 1].val_total, Some(best));
        let csv = a.steps_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epoch,step,L_color,L_diversity,L_emotion,L_stop,total");
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn short_training_reduces_loss() {
        let ex = examples(4);
        let cfg = TrainConfig { epochs: 30, ..tiny_config() };
        let out = fit(&ex, &[], &cfg).unwrap();
        let before = mean_loss(&ModelState::init(&cfg.model).unwrap(), &ex, &cfg).unwrap().1;
        let after = mean_loss(&out.final_state, &ex, &cfg).unwrap().1;
        assert!(after < before, "{before} -> {after}");
    }
}
