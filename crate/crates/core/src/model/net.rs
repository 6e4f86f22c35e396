use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::ModelConfig;
use super::state::ModelState;
use crate::audiofeat::{FeatureMatrix, FEATURE_ROWS};
use crate::autograd::{Graph, Mat, Var};
use crate::colorlab::{LchColor, Palette, CHROMA_CEILING, MIN_COLORS};
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;

/// Sinusoidal encoding of a temporal patch index.
pub fn positional_encoding(pos: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| {
            let pair = (i / 2) * 2;
            let angle = pos as f64 / 10000f64.powf(pair as f64 / d as f64);
            if i % 2 == 0 {
                angle.sin()
            } else {
                angle.cos()
            }
        })
        .collect()
}

/// `z + sigma * eps` with `eps ~ N(0, I)` drawn from `rng`.
pub fn augment(z: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    z.iter()
        .map(|v| {
            let e: f64 = rng.sample(StandardNormal);
            v + sigma * e
        })
        .collect()
}

/// One decoder output: color activations in `(0, 1)` and the stop logit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeStep {
    pub color_activation: [f64; 3],
    pub stop_logit: f64,
}

impl DecodeStep {
    pub fn color(&self) -> LchColor {
        activation_to_color(self.color_activation)
    }
}

pub(crate) fn activation_to_color(s: [f64; 3]) -> LchColor {
    LchColor::new(100.0 * s[0], CHROMA_CEILING * s[1], 360.0 * s[2])
}

/// Encoder tokens and the pooled embedding, kept as the decoder's memory.
#[derive(Debug, Clone)]
pub struct Encoded {
    /// `N × d_model` token sequence.
    pub tokens: Mat,
    /// Mean of the tokens.
    pub pooled: Vec<f64>,
}

/// Cross-attention memory: the (possibly noised) pooled embedding followed
/// by the encoder tokens.
#[derive(Debug, Clone)]
pub struct Memory(Mat);

impl Memory {
    pub fn new(encoded: &Encoded, z_aug: &[f64]) -> Self {
        let d = encoded.tokens.cols;
        assert_eq!(z_aug.len(), d);
        let mut data = Vec::with_capacity((encoded.tokens.rows + 1) * d);
        data.extend_from_slice(z_aug);
        data.extend_from_slice(&encoded.tokens.data);
        Memory(Mat::from_vec(encoded.tokens.rows + 1, d, data))
    }
}

/// Contiguous row block belonging to one sample in a stacked batch.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub start: usize,
    pub len: usize,
}

fn segments(lens: impl IntoIterator<Item = usize>) -> Vec<Segment> {
    let mut start = 0;
    lens.into_iter()
        .map(|len| {
            let s = Segment { start, len };
            start += len;
            s
        })
        .collect()
}

/// Parameters bound to a graph, plus the dropout source in training mode.
pub(crate) struct Forward<'g> {
    pub g: &'g Graph,
    cfg: ModelConfig,
    pub leaves: BTreeMap<String, Var<'g>>,
    dropout: Option<RefCell<ChaCha8Rng>>,
}

impl<'g> Forward<'g> {
    pub fn new(g: &'g Graph, state: &ModelState, dropout_rng: Option<ChaCha8Rng>) -> Self {
        let leaves = state
            .params()
            .iter()
            .map(|(k, v)| (k.clone(), g.leaf(v.clone())))
            .collect();
        let dropout = dropout_rng
            .filter(|_| state.config.dropout > 0.0)
            .map(RefCell::new);
        Forward {
            g,
            cfg: state.config.clone(),
            leaves,
            dropout,
        }
    }

    fn p(&self, name: &str) -> Var<'g> {
        self.leaves[name]
    }

    fn linear(&self, x: Var<'g>, prefix: &str) -> Var<'g> {
        x.matmul(self.p(&format!("{prefix}.w")))
            .add_row(self.p(&format!("{prefix}.b")))
    }

    fn norm(&self, x: Var<'g>, prefix: &str) -> Var<'g> {
        x.layer_norm(LN_EPS)
            .mul_row(self.p(&format!("{prefix}.g")))
            .add_row(self.p(&format!("{prefix}.b")))
    }

    fn drop(&self, x: Var<'g>) -> Var<'g> {
        let Some(rng) = &self.dropout else { return x };
        let keep = 1.0 - self.cfg.dropout;
        let (r, c) = x.shape();
        let mut rng = rng.borrow_mut();
        let mask = (0..r * c)
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        x * self.g.constant(Mat::from_vec(r, c, mask))
    }

    fn attention(
        &self,
        queries: Var<'g>,
        q_segs: &[Segment],
        keys: Var<'g>,
        k_segs: &[Segment],
        prefix: &str,
        causal: bool,
    ) -> Var<'g> {
        let q = self.linear(queries, &format!("{prefix}.q"));
        let k = self.linear(keys, &format!("{prefix}.k"));
        let v = self.linear(keys, &format!("{prefix}.v"));
        let dh = self.cfg.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let mut per_sample = Vec::with_capacity(q_segs.len());
        for (qs, ks) in q_segs.iter().zip(k_segs) {
            let qi = q.slice_rows(qs.start, qs.len);
            let ki = k.slice_rows(ks.start, ks.len);
            let vi = v.slice_rows(ks.start, ks.len);
            let heads: Vec<Var<'g>> = (0..self.cfg.heads)
                .map(|h| {
                    let qh = qi.slice_cols(h * dh, dh);
                    let kh = ki.slice_cols(h * dh, dh);
                    let vh = vi.slice_cols(h * dh, dh);
                    (qh.matmul(kh.t()) * scale)
                        .softmax_rows(causal)
                        .matmul(vh)
                })
                .collect();
            per_sample.push(if heads.len() == 1 {
                heads[0]
            } else {
                self.g.concat_cols(&heads)
            });
        }
        let joined = if per_sample.len() == 1 {
            per_sample[0]
        } else {
            self.g.concat_rows(&per_sample)
        };
        self.linear(joined, &format!("{prefix}.o"))
    }

    fn feedforward(&self, x: Var<'g>, prefix: &str) -> Var<'g> {
        let hidden = self.linear(x, &format!("{prefix}.ff1")).gelu();
        self.linear(hidden, &format!("{prefix}.ff2"))
    }

    /// Encodes a batch; returns stacked tokens (after the final norm) and
    /// each sample's row block.
    pub fn encode(&self, features: &[&FeatureMatrix]) -> Result<(Var<'g>, Vec<Segment>)> {
        let p = self.cfg.patch_frames;
        let d = self.cfg.d_model;
        let mut counts = Vec::with_capacity(features.len());
        for f in features {
            if f.rows() != FEATURE_ROWS {
                return Err(Error::invalid(format!(
                    "feature matrix has {} rows, expected {FEATURE_ROWS}",
                    f.rows()
                )));
            }
            if f.cols() == 0 {
                return Err(Error::invalid("feature matrix has no frames"));
            }
            counts.push(f.cols().div_ceil(p));
        }
        let segs = segments(counts.iter().copied());
        let total: usize = counts.iter().sum();
        let width = FEATURE_ROWS * p;
        let mut patches = Mat::zeros(total, width);
        let mut pe = Mat::zeros(total, d);
        for (f, seg) in features.iter().zip(&segs) {
            for n in 0..seg.len {
                let row = patches.row_mut(seg.start + n);
                for off in 0..p {
                    let t = n * p + off;
                    if t >= f.cols() {
                        break;
                    }
                    for r in 0..FEATURE_ROWS {
                        row[off * FEATURE_ROWS + r] = f.get(r, t) as f64;
                    }
                }
                pe.row_mut(seg.start + n)
                    .copy_from_slice(&positional_encoding(n, d));
            }
        }
        let mut x = self.linear(self.g.constant(patches), "enc.patch") + self.g.constant(pe);
        x = self.drop(x);
        for i in 0..self.cfg.encoder_layers {
            let pre = format!("enc.{i}");
            let h = self.norm(x, &format!("{pre}.ln1"));
            x = x + self.drop(self.attention(h, &segs, h, &segs, &format!("{pre}.attn"), false));
            let h = self.norm(x, &format!("{pre}.ln2"));
            x = x + self.drop(self.feedforward(h, &pre));
        }
        Ok((self.norm(x, "enc.ln_f"), segs))
    }

    /// Builds each sample's memory `[z_m + noise; tokens]`.
    pub fn memory(
        &self,
        tokens: Var<'g>,
        segs: &[Segment],
        noise: &[Vec<f64>],
    ) -> (Var<'g>, Vec<Segment>) {
        let parts: Vec<Var<'g>> = segs
            .iter()
            .zip(noise)
            .flat_map(|(s, eps)| {
                let block = tokens.slice_rows(s.start, s.len);
                let pooled = block.mean_rows() + self.g.constant(Mat::row_vector(eps));
                [pooled, block]
            })
            .collect();
        let mem_segs = segments(segs.iter().map(|s| s.len + 1));
        (self.g.concat_rows(&parts), mem_segs)
    }

    /// Decodes stacked prefixes. Sample `i` sees the start token followed by
    /// its `prefixes[i]`; returns `(activations, stop_logits)` with one row
    /// per decoder position.
    pub fn decode(
        &self,
        prefixes: &[Vec<[f64; 3]>],
        memory: Var<'g>,
        mem_segs: &[Segment],
    ) -> (Var<'g>, Var<'g>, Vec<Segment>) {
        let d = self.cfg.d_model;
        let segs = segments(prefixes.iter().map(|p| p.len() + 1));
        let start = self.p("dec.start");
        let mut rows = Vec::new();
        let mut pe = Mat::zeros(segs.iter().map(|s| s.len).sum(), d);
        for (prefix, seg) in prefixes.iter().zip(&segs) {
            rows.push(start);
            if !prefix.is_empty() {
                let flat = prefix.iter().flatten().copied().collect();
                let colors = self.g.constant(Mat::from_vec(prefix.len(), 3, flat));
                rows.push(self.linear(colors, "dec.color") * (d as f64).sqrt());
            }
            for pos in 0..seg.len {
                pe.row_mut(seg.start + pos)
                    .copy_from_slice(&positional_encoding(pos, d));
            }
        }
        let mut x = self.g.concat_rows(&rows) + self.g.constant(pe);
        x = self.drop(x);
        for i in 0..self.cfg.decoder_layers {
            let pre = format!("dec.{i}");
            let h = self.norm(x, &format!("{pre}.ln1"));
            x = x + self.drop(self.attention(h, &segs, h, &segs, &format!("{pre}.self"), true));
            let h = self.norm(x, &format!("{pre}.ln2"));
            x = x + self.drop(self.attention(
                h,
                &segs,
                memory,
                mem_segs,
                &format!("{pre}.cross"),
                false,
            ));
            let h = self.norm(x, &format!("{pre}.ln3"));
            x = x + self.drop(self.feedforward(h, &pre));
        }
        let h = self.norm(x, "dec.ln_f");
        let head = self.norm(self.linear(h, "head.ff").gelu(), "head.ln");
        let activations = self.linear(head, "head.out").sigmoid();
        let stop_h = self.norm(self.linear(h, "head.stop_ff").gelu(), "head.stop_ln");
        let stop = self.linear(stop_h, "head.stop");
        (activations, stop, segs)
    }
}

/// Eval-mode encoding of one clip.
pub fn encode(f: &FeatureMatrix, m: &ModelState) -> Result<Encoded> {
    let g = Graph::new();
    let fwd = Forward::new(&g, m, None);
    let (tokens, _) = fwd.encode(&[f])?;
    let tokens = (*tokens.value()).clone();
    let pooled = (0..tokens.cols)
        .map(|c| (0..tokens.rows).map(|r| tokens.get(r, c)).sum::<f64>() / tokens.rows as f64)
        .collect();
    Ok(Encoded { tokens, pooled })
}

/// Eval-mode decoder output for the next position after `prev_colors`.
pub fn decode_step(prev_colors: &[LchColor], memory: &Memory, m: &ModelState) -> Result<DecodeStep> {
    if prev_colors.len() >= m.config.max_colors {
        return Err(Error::invalid(format!(
            "prefix already holds {} colors, the maximum is {}",
            prev_colors.len(),
            m.config.max_colors
        )));
    }
    let g = Graph::new();
    let fwd = Forward::new(&g, m, None);
    let mem = g.constant(memory.0.clone());
    let mem_segs = [Segment {
        start: 0,
        len: memory.0.rows,
    }];
    let prefix: Vec<[f64; 3]> = prev_colors.iter().map(|c| c.normalized()).collect();
    let (act, stop, _) = fwd.decode(&[prefix], mem, &mem_segs);
    let act = act.value();
    let last = act.rows - 1;
    Ok(DecodeStep {
        color_activation: [act.get(last, 0), act.get(last, 1), act.get(last, 2)],
        stop_logit: stop.value().get(last, 0),
    })
}

/// Autoregressive generation with the stop rule: stop once at least three
/// colors exist and the stop probability exceeds one half, or at the cap.
pub fn generate(f: &FeatureMatrix, m: &ModelState, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Palette> {
    let encoded = encode(f, m)?;
    let z_aug = augment(&encoded.pooled, sigma, rng);
    let memory = Memory::new(&encoded, &z_aug);
    let mut colors = Vec::with_capacity(m.config.max_colors);
    while colors.len() < m.config.max_colors {
        let step = decode_step(&colors, &memory, m)?;
        let stop_prob = 1.0 / (1.0 + (-step.stop_logit).exp());
        if colors.len() >= MIN_COLORS && stop_prob > 0.5 {
            break;
        }
        colors.push(step.color());
    }
    Palette::new(colors)
}

/// Teacher-forced pass in eval mode. Returns `N_gt` predicted colors and
/// `N_gt + 1` stop logits.
pub fn forward_train(
    f: &FeatureMatrix,
    target: &Palette,
    m: &ModelState,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<LchColor>, Vec<f64>)> {
    let n = target.len();
    if !(MIN_COLORS..=m.config.max_colors).contains(&n) {
        return Err(Error::invalid(format!("target palette has {n} colors")));
    }
    let g = Graph::new();
    let fwd = Forward::new(&g, m, None);
    let (tokens, segs) = fwd.encode(&[f])?;
    let noise = vec![augment(&vec![0.0; m.config.d_model], sigma, rng)];
    let (mem, mem_segs) = fwd.memory(tokens, &segs, &noise);
    let prefix: Vec<[f64; 3]> = target.colors().iter().map(|c| c.normalized()).collect();
    let (act, stop, _) = fwd.decode(&[prefix], mem, &mem_segs);
    let act = act.value();
    let colors = (0..n)
        .map(|r| activation_to_color([act.get(r, 0), act.get(r, 1), act.get(r, 2)]))
        .collect();
    Ok((colors, stop.value().data.clone()))
}
