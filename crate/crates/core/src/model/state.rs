use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::audiofeat::FEATURE_ROWS;
use crate::autograd::Mat;
use crate::{Error, Result};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy)]
enum Init {
    /// Uniform Glorot bound from the shape.
    Glorot,
    Zeros,
    Ones,
    Small,
}

/// Named weights plus the configuration they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    params: BTreeMap<String, Arc<Mat>>,
}

fn layout(cfg: &ModelConfig) -> Vec<(String, usize, usize, Init)> {
    let d = cfg.d_model;
    let ff = cfg.ff_dim;
    let mut out = Vec::new();
    let mut push = |name: String, r: usize, c: usize, init: Init| out.push((name, r, c, init));
    let linear = |push: &mut dyn FnMut(String, usize, usize, Init), p: &str, i: usize, o: usize| {
        push(format!("{p}.w"), i, o, Init::Glorot);
        push(format!("{p}.b"), 1, o, Init::Zeros);
    };
    let norm = |push: &mut dyn FnMut(String, usize, usize, Init), p: &str| {
        push(format!("{p}.g"), 1, d, Init::Ones);
        push(format!("{p}.b"), 1, d, Init::Zeros);
    };
    let attention = |push: &mut dyn FnMut(String, usize, usize, Init), p: &str| {
        for part in ["q", "k", "v", "o"] {
            linear(push, &format!("{p}.{part}"), d, d);
        }
    };
    let feedforward = |push: &mut dyn FnMut(String, usize, usize, Init), p: &str| {
        linear(push, &format!("{p}.ff1"), d, ff);
        linear(push, &format!("{p}.ff2"), ff, d);
    };

    linear(&mut push, "enc.patch", FEATURE_ROWS * cfg.patch_frames, d);
    for i in 0..cfg.encoder_layers {
        let p = format!("enc.{i}");
        norm(&mut push, &format!("{p}.ln1"));
        attention(&mut push, &format!("{p}.attn"));
        norm(&mut push, &format!("{p}.ln2"));
        feedforward(&mut push, &p);
    }
    norm(&mut push, "enc.ln_f");

    push("dec.start".into(), 1, d, Init::Small);
    linear(&mut push, "dec.color", 3, d);
    for i in 0..cfg.decoder_layers {
        let p = format!("dec.{i}");
        norm(&mut push, &format!("{p}.ln1"));
        attention(&mut push, &format!("{p}.self"));
        norm(&mut push, &format!("{p}.ln2"));
        attention(&mut push, &format!("{p}.cross"));
        norm(&mut push, &format!("{p}.ln3"));
        feedforward(&mut push, &p);
    }
    norm(&mut push, "dec.ln_f");

    linear(&mut push, "head.ff", d, d);
    norm(&mut push, "head.ln");
    linear(&mut push, "head.out", d, 3);
    linear(&mut push, "head.stop_ff", d, d);
    norm(&mut push, "head.stop_ln");
    linear(&mut push, "head.stop", d, 1);
    out
}

impl ModelState {
    /// Fresh weights drawn deterministically from `config.seed`.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = BTreeMap::new();
        for (name, rows, cols, init) in layout(config) {
            let data = match init {
                Init::Zeros => vec![0.0; rows * cols],
                Init::Ones => vec![1.0; rows * cols],
                Init::Glorot | Init::Small => {
                    let bound = match init {
                        Init::Glorot => (6.0 / (rows + cols) as f64).sqrt(),
                        _ => 0.02,
                    };
                    let dist = Uniform::new_inclusive(-bound, bound);
                    (0..rows * cols).map(|_| dist.sample(&mut rng)).collect()
                }
            };
            params.insert(name, Arc::new(Mat::from_vec(rows, cols, data)));
        }
        Ok(ModelState {
            config: config.clone(),
            params,
        })
    }

    pub fn param(&self, name: &str) -> &Arc<Mat> {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn params(&self) -> &BTreeMap<String, Arc<Mat>> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut BTreeMap<String, Arc<Mat>> {
        &mut self.params
    }

    pub fn num_weights(&self) -> usize {
        self.params.values().map(|m| m.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.values().all(|m| m.is_finite())
    }

    /// Writes `path` (JSON manifest) and a sibling `.bin` blob of
    /// little-endian `f32` weights.
    pub fn save(&self, path: &Path) -> Result<()> {
        let blob_path = blob_path(path);
        let mut blob = Vec::with_capacity(4 * self.num_weights());
        let mut tensors = Vec::with_capacity(self.params.len());
        for (name, m) in &self.params {
            tensors.push(TensorEntry {
                name: name.clone(),
                rows: m.rows,
                cols: m.cols,
                offset: blob.len() as u64,
            });
            for v in &m.data {
                blob.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        let manifest = CheckpointManifest {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            blob: blob_path
                .file_name()
                .expect("blob path has a file name")
                .to_string_lossy()
                .into_owned(),
            blob_bytes: blob.len() as u64,
            tensors,
        };
        let mut json = serde_json::to_string_pretty(&manifest)?;
        json.push('\n');
        std::fs::write(&blob_path, &blob).map_err(|e| Error::io(&blob_path, e))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: CheckpointManifest = serde_json::from_str(&text)?;
        if manifest.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {}",
                manifest.version
            )));
        }
        manifest.config.validate()?;
        let blob_path = path.with_file_name(&manifest.blob);
        let blob = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        if blob.len() as u64 != manifest.blob_bytes {
            return Err(Error::Format("checkpoint blob has the wrong size".into()));
        }

        let expected = layout(&manifest.config);
        if expected.len() != manifest.tensors.len() {
            return Err(Error::Format(
                "checkpoint tensors do not match its configuration".into(),
            ));
        }
        let mut shapes: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for (name, r, c, _) in &expected {
            shapes.insert(name, (*r, *c));
        }
        let mut params = BTreeMap::new();
        for t in &manifest.tensors {
            if shapes.get(t.name.as_str()) != Some(&(t.rows, t.cols)) {
                return Err(Error::Format(format!(
                    "checkpoint tensor {} has an unexpected name or shape",
                    t.name
                )));
            }
            let start = t.offset as usize;
            let end = start + 4 * t.rows * t.cols;
            let bytes = blob.get(start..end).ok_or_else(|| {
                Error::Format(format!("checkpoint tensor {} lies outside the blob", t.name))
            })?;
            let data: Vec<f64> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect();
            let m = Mat::from_vec(t.rows, t.cols, data);
            if !m.is_finite() {
                return Err(Error::Numeric(format!("checkpoint tensor {} is not finite", t.name)));
            }
            params.insert(t.name.clone(), Arc::new(m));
        }
        Ok(ModelState {
            config: manifest.config,
            params,
        })
    }
}

fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointManifest {
    version: u32,
    config: ModelConfig,
    blob: String,
    blob_bytes: u64,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: u64,
}
