use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::histogram::bhattacharyya;
use super::hull::{convex_hull_overlap, DEFAULT_HULL_SAMPLES};
use super::scores::{emotion_similarity, multimodality, palette_div};
use crate::audiofeat::FeatureMatrix;
use crate::colorlab::Palette;
use crate::emotion::{js_divergence, EmotionVector, PaletteEmotionProvider};
use crate::model::{generate, ModelState};
use crate::{Error, Result};

/// Anything that maps features and a seed to a palette.
pub trait PaletteGenerator {
    fn generate(&self, features: &FeatureMatrix, seed: u64) -> Result<Palette>;
}

/// The trained model sampled with embedding noise `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct ModelGenerator<'a> {
    pub state: &'a ModelState,
    pub sigma: f64,
}

impl PaletteGenerator for ModelGenerator<'_> {
    fn generate(&self, features: &FeatureMatrix, seed: u64) -> Result<Palette> {
        generate(features, self.state, self.sigma, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

#[derive(Debug, Clone)]
pub struct EvalClip {
    pub id: String,
    pub features: FeatureMatrix,
    pub emotion_music: EmotionVector,
    pub ground_truth: Option<Palette>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Generations per clip.
    pub k: usize,
    pub seed: u64,
    pub hull_samples: usize,
    /// Compare generations to the ground truth for CHO and BC instead of
    /// to each other.
    pub against_ground_truth: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: 5,
            seed: 0,
            hull_samples: DEFAULT_HULL_SAMPLES,
            against_ground_truth: false,
        }
    }
}

/// One row of metrics; pairwise metrics are absent when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub div: f64,
    pub multi: Option<f64>,
    pub cho: Option<f64>,
    pub bc: Option<f64>,
    pub es: f64,
    pub js: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Per-clip rows in ascending clip id order.
    pub clips: Vec<(String, MetricReport)>,
    pub aggregate: MetricReport,
    /// Generated palettes per clip, same order as `clips`.
    pub palettes: Vec<Vec<Palette>>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Default)]
struct Acc {
    div: Vec<f64>,
    multi: Vec<f64>,
    cho: Vec<f64>,
    bc: Vec<f64>,
    es: Vec<f64>,
    js: Vec<f64>,
}

impl Acc {
    fn report(&self) -> MetricReport {
        MetricReport {
            div: mean(&self.div).unwrap_or(0.0),
            multi: mean(&self.multi),
            cho: mean(&self.cho),
            bc: mean(&self.bc),
            es: mean(&self.es).unwrap_or(0.0),
            js: mean(&self.js).unwrap_or(0.0),
        }
    }

    fn extend(&mut self, o: &Acc) {
        self.div.extend(&o.div);
        self.multi.extend(&o.multi);
        self.cho.extend(&o.cho);
        self.bc.extend(&o.bc);
        self.es.extend(&o.es);
        self.js.extend(&o.js);
    }
}

/// Generates `k` palettes per clip with seeds `seed..seed+k` and scores them.
pub fn evaluate(
    clips: &[EvalClip],
    generator: &dyn PaletteGenerator,
    provider: &dyn PaletteEmotionProvider,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if clips.is_empty() {
        return Err(Error::invalid("evaluation dataset is empty"));
    }
    if opts.k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut order: Vec<&EvalClip> = clips.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));

    let mut total = Acc::default();
    let mut rows = Vec::with_capacity(order.len());
    let mut all_palettes = Vec::with_capacity(order.len());
    for clip in order {
        let palettes: Vec<Palette> = (0..opts.k as u64)
            .map(|i| generator.generate(&clip.features, opts.seed.wrapping_add(i)))
            .collect::<Result<_>>()?;
        let mut acc = Acc::default();
        let music_dist = clip.emotion_music.to_distribution();
        for p in &palettes {
            acc.div.push(palette_div(p)?);
            acc.es.push(emotion_similarity(&clip.emotion_music, p, provider)?);
            let pe = provider.palette_emotion(p)?;
            acc.js.push(js_divergence(&music_dist, &pe.to_distribution()));
        }
        if palettes.len() >= 2 {
            acc.multi.push(multimodality(&palettes)?);
        }
        if opts.against_ground_truth {
            let gt = clip.ground_truth.as_ref().ok_or_else(|| {
                Error::invalid(format!("clip {} has no ground-truth palette", clip.id))
            })?;
            for p in &palettes {
                acc.cho.push(convex_hull_overlap(p, gt, opts.hull_samples, opts.seed)?);
                acc.bc.push(bhattacharyya(p, gt));
            }
        } else {
            for i in 0..palettes.len() {
                for j in i + 1..palettes.len() {
                    let (a, b) = (&palettes[i], &palettes[j]);
                    acc.cho.push(convex_hull_overlap(a, b, opts.hull_samples, opts.seed)?);
                    acc.bc.push(bhattacharyya(a, b));
                }
            }
        }
        total.extend(&acc);
        rows.push((clip.id.clone(), acc.report()));
        all_palettes.push(palettes);
    }
    Ok(Evaluation {
        clips: rows,
        aggregate: total.report(),
        palettes: all_palettes,
    })
}

pub const CSV_HEADER: &str = "clip_id,div,multi,cho,bc,es,js";
pub const AGGREGATE_ID: &str = "aggregate";

fn csv_row(out: &mut String, id: &str, r: &MetricReport) {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        "{id},{},{},{},{},{},{}",
        r.div,
        opt(r.multi),
        opt(r.cho),
        opt(r.bc),
        r.es,
        r.js
    );
}

impl Evaluation {
    /// Per-clip rows followed by the aggregate row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (id, r) in &self.clips {
            csv_row(&mut out, id, r);
        }
        csv_row(&mut out, AGGREGATE_ID, &self.aggregate);
        out
    }
}
