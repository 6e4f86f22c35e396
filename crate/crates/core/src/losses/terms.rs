//! Loss terms over [`Real`], with plain `f64` wrappers for evaluation.

use serde::{Deserialize, Serialize};

use super::assignment::{optimal_assignment, Assignment};
use crate::autograd::Real;
use crate::colorlab::{ciede2000_generic, LchColor, MAX_COLORS, MIN_COLORS};
use crate::emotion::{cosine_similarity_generic, EmotionVector, NUM_EMOTIONS};
use crate::{Error, Result};

/// Relative weights of the four loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_color: f64,
    pub lambda_diversity: f64,
    pub lambda_emotion: f64,
    pub lambda_stop: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_color: 1.0,
            lambda_diversity: 0.1,
            lambda_emotion: 0.5,
            lambda_stop: 0.2,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_color,
            self.lambda_diversity,
            self.lambda_emotion,
            self.lambda_stop,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("loss weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Unweighted loss terms for one sample or batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts<S = f64> {
    pub color: S,
    pub diversity: S,
    pub emotion: S,
    pub stop: S,
}

impl<S: Real> LossParts<S> {
    pub fn weighted(&self, w: &LossWeights) -> S {
        self.color * w.lambda_color
            + self.diversity * w.lambda_diversity
            + self.emotion * w.lambda_emotion
            + self.stop * w.lambda_stop
    }
}

impl LossParts<f64> {
    pub fn is_finite(&self) -> bool {
        [self.color, self.diversity, self.emotion, self.stop]
            .iter()
            .all(|v| v.is_finite())
    }
}

pub fn total_loss(parts: &LossParts, w: &LossWeights) -> f64 {
    parts.weighted(w)
}

/// How hue gaps are measured in the diversity term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HueMetric {
    /// `|h_i - h_j|` on hue / 360.
    #[default]
    Linear,
    /// Shorter way around the circle, so at most 0.5.
    Circular,
}

/// `(L, C, h°)` to `(L, a, b)`.
pub fn lch_to_lab_generic<S: Real>(lch: [S; 3]) -> [S; 3] {
    let h = lch[2] * (std::f64::consts::PI / 180.0);
    [lch[0], lch[1] * h.cos(), lch[1] * h.sin()]
}

/// Mean ΔE00 under the optimal matching of `gt` rows to `pred` entries.
///
/// The assignment is computed on current values and held fixed, so the
/// gradient flows only through the selected pairs.
pub fn color_distance_generic<S: Real>(
    pred: &[[S; 3]],
    gt: &[LchColor],
) -> Result<(S, Assignment)> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(Error::invalid(format!(
            "color distance needs equal non-empty lengths, got {} predicted and {} target",
            pred.len(),
            gt.len()
        )));
    }
    let pred_lab: Vec<[S; 3]> = pred.iter().map(|p| lch_to_lab_generic(*p)).collect();
    let gt_lab: Vec<[f64; 3]> = gt
        .iter()
        .map(|c| lch_to_lab_generic([c.l, c.c, c.h]))
        .collect();
    let cost: Vec<Vec<f64>> = gt_lab
        .iter()
        .map(|g| {
            pred_lab
                .iter()
                .map(|p| ciede2000_generic(*g, [p[0].val(), p[1].val(), p[2].val()]))
                .collect()
        })
        .collect();
    let assignment = optimal_assignment(&cost)?;
    let anchor = pred[0][0];
    let mut sum = anchor.lift(0.0);
    for (i, &j) in assignment.permutation.iter().enumerate() {
        let g = gt_lab[i].map(|v| anchor.lift(v));
        sum = sum + ciede2000_generic(g, pred_lab[j]);
    }
    Ok((sum / gt.len() as f64, assignment))
}

/// Mean assigned ΔE00 between two equally long color lists.
pub fn assigned_mean_delta_e(a: &[LchColor], b: &[LchColor]) -> Result<(f64, Assignment)> {
    let a: Vec<[f64; 3]> = a.iter().map(|c| [c.l, c.c, c.h]).collect();
    color_distance_generic(&a, b)
}

pub fn color_distance_loss(pred: &[LchColor], gt: &[LchColor]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predicted vs {} target colors",
            pred.len(),
            gt.len()
        )));
    }
    if !(MIN_COLORS..=MAX_COLORS).contains(&gt.len()) {
        return Err(Error::invalid(format!(
            "palettes hold {MIN_COLORS} to {MAX_COLORS} colors, got {}",
            gt.len()
        )));
    }
    Ok(assigned_mean_delta_e(pred, gt)?.0)
}

/// Negative mean pairwise hue gap over hues already scaled to `[0, 1]`.
pub fn diversity_generic<S: Real>(hues: &[S], metric: HueMetric) -> S {
    let n = hues.len();
    assert!(n >= 2);
    let mut sum = hues[0].lift(0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = (hues[i] - hues[j]).abs();
            let gap = match metric {
                HueMetric::Linear => gap,
                HueMetric::Circular if gap.val() > 0.5 => -gap + 1.0,
                HueMetric::Circular => gap,
            };
            sum = sum + gap;
        }
    }
    -(sum / (n * (n - 1)) as f64)
}

pub fn diversity_loss(pred: &[LchColor], metric: HueMetric) -> Result<f64> {
    if pred.len() < 2 {
        return Err(Error::invalid("diversity needs at least two colors"));
    }
    let hues: Vec<f64> = pred.iter().map(|c| c.h / 360.0).collect();
    Ok(diversity_generic(&hues, metric))
}

/// `2 - cos(music, pred) - cos(pred, gt)`; the caller guarantees non-zero norms.
pub fn emotion_consistency_generic<S: Real>(
    music: &[f64; NUM_EMOTIONS],
    pred: &[S; NUM_EMOTIONS],
    gt: &[f64; NUM_EMOTIONS],
) -> S {
    let lift = |v: &[f64; NUM_EMOTIONS]| v.map(|x| pred[0].lift(x));
    -cosine_similarity_generic(&lift(music), pred) - cosine_similarity_generic(pred, &lift(gt))
        + 2.0
}

pub fn emotion_consistency_loss(
    music: &EmotionVector,
    pred: &EmotionVector,
    gt: &EmotionVector,
) -> Result<f64> {
    if [music, pred, gt].iter().any(|v| v.norm() == 0.0) {
        return Err(Error::invalid("emotion consistency of a zero-norm vector"));
    }
    let v = emotion_consistency_generic(music.scores(), pred.scores(), gt.scores());
    Ok(v.clamp(0.0, 4.0))
}

/// Mean binary cross-entropy of stop logits against `(0, …, 0, 1)`.
pub fn stop_loss_generic<S: Real>(logits: &[S]) -> S {
    let n = logits.len();
    assert!(n >= 1);
    let mut sum = logits[n - 1].softplus() - logits[n - 1];
    for &x in &logits[..n - 1] {
        sum = sum + x.softplus();
    }
    sum / n as f64
}

pub fn stop_loss(logits: &[f64], n_gt: usize) -> Result<f64> {
    if logits.len() != n_gt + 1 {
        return Err(Error::invalid(format!(
            "expected {} stop logits for {n_gt} colors, got {}",
            n_gt + 1,
            logits.len()
        )));
    }
    Ok(stop_loss_generic(logits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::{Graph, Mat};
    use crate::colorlab::ciede2000;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_color(rng: &mut ChaCha8Rng) -> LchColor {
        LchColor::new(
            rng.gen_range(0.0..100.0),
            rng.gen_range(0.0..120.0),
            rng.gen_range(0.0..360.0),
        )
    }

    fn brute_force_mean(pred: &[LchColor], gt: &[LchColor]) -> f64 {
        fn go(gt: &[LchColor], pred: &[LchColor], used: &mut Vec<bool>, i: usize) -> f64 {
            if i == gt.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..pred.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(ciede2000(gt[i], pred[j]) + go(gt, pred, used, i + 1));
                    used[j] = false;
                }
            }
            best
        }
        go(gt, pred, &mut vec![false; pred.len()], 0) / gt.len() as f64
    }

    #[test]
    fn color_distance_zero_on_self_and_permutations() {
        let gt = vec![
            LchColor::new(30.0, 40.0, 10.0),
            LchColor::new(60.0, 20.0, 200.0),
            LchColor::new(90.0, 5.0, 300.0),
            LchColor::new(50.0, 0.0, 0.0),
        ];
        assert_eq!(color_distance_loss(&gt, &gt).unwrap(), 0.0);
        let mut rev = gt.clone();
        rev.reverse();
        assert!(color_distance_loss(&rev, &gt).unwrap() < 1e-12);
    }

    #[test]
    fn color_distance_errors() {
        let c = LchColor::new(50.0, 10.0, 10.0);
        assert!(color_distance_loss(&[c; 3], &[c; 4]).is_err());
        assert!(color_distance_loss(&[c; 2], &[c; 2]).is_err());
    }

    #[test]
    fn color_distance_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(3..=5);
            let pred: Vec<_> = (0..n).map(|_| random_color(&mut rng)).collect();
            let gt: Vec<_> = (0..n).map(|_| random_color(&mut rng)).collect();
            let got = color_distance_loss(&pred, &gt).unwrap();
            let want = brute_force_mean(&pred, &gt);
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn diversity_cases() {
        let same = [LchColor::new(50.0, 30.0, 120.0); 3];
        assert_eq!(diversity_loss(&same, HueMetric::Linear).unwrap(), 0.0);
        let opposite = [LchColor::new(50.0, 30.0, 0.0), LchColor::new(50.0, 30.0, 180.0)];
        assert!((diversity_loss(&opposite, HueMetric::Linear).unwrap() + 0.5).abs() < 1e-15);
        let wrap = [LchColor::new(50.0, 30.0, 1.0), LchColor::new(50.0, 30.0, 359.0)];
        assert!(diversity_loss(&wrap, HueMetric::Linear).unwrap() < -0.99);
        assert!(diversity_loss(&wrap, HueMetric::Circular).unwrap() > -0.01);
        assert!(diversity_loss(&same[..1], HueMetric::Linear).is_err());
    }

    #[test]
    fn diversity_matches_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let p: Vec<_> = (0..n).map(|_| random_color(&mut rng)).collect();
            let mut s = 0.0;
            for a in &p {
                for b in &p {
                    s += (a.h / 360.0 - b.h / 360.0).abs();
                }
            }
            let want = -s / (n * (n - 1)) as f64;
            let got = diversity_loss(&p, HueMetric::Linear).unwrap();
            assert!((got - want).abs() < 1e-12);
        }
    }

    fn ev(v: [f64; 8]) -> EmotionVector {
        EmotionVector::new(v).unwrap()
    }

    #[test]
    fn emotion_consistency_cases() {
        let a = ev([1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
        assert!(emotion_consistency_loss(&a, &a, &a).unwrap().abs() < 1e-12);
        let p = ev([0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((emotion_consistency_loss(&a, &p, &a).unwrap() - 2.0).abs() < 1e-12);
        let zero = ev([0.0; 8]);
        assert!(emotion_consistency_loss(&a, &zero, &a).is_err());
    }

    #[test]
    fn emotion_consistency_matches_cosine_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cos = |a: &[f64; 8], b: &[f64; 8]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        for _ in 0..100 {
            let v: Vec<[f64; 8]> = (0..3)
                .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0)))
                .collect();
            let want = 2.0 - cos(&v[0], &v[1]) - cos(&v[1], &v[2]);
            let got = emotion_consistency_loss(&ev(v[0]), &ev(v[1]), &ev(v[2])).unwrap();
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn stop_loss_cases() {
        assert!((stop_loss(&[0.0; 4], 3).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(stop_loss(&[-40.0, -40.0, -40.0, 40.0], 3).unwrap() < 1e-15);
        assert!(stop_loss(&[0.0; 3], 3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
            let want: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == 4 { -sig(v).ln() } else { -(1.0 - sig(v)).ln() })
                .sum::<f64>()
                / 5.0;
            assert!((stop_loss(&x, 4).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn total_loss_cases() {
        let parts = LossParts {
            color: 3.0,
            diversity: -0.2,
            emotion: 0.7,
            stop: 0.4,
        };
        let zero = LossWeights {
            lambda_color: 0.0,
            lambda_diversity: 0.0,
            lambda_emotion: 0.0,
            lambda_stop: 0.0,
        };
        assert_eq!(total_loss(&parts, &zero), 0.0);
        let color_only = LossWeights {
            lambda_color: 1.0,
            ..zero
        };
        assert_eq!(total_loss(&parts, &color_only), 3.0);
        let want = 1.0 * 3.0 + 0.1 * -0.2 + 0.5 * 0.7 + 0.2 * 0.4;
        assert!((total_loss(&parts, &LossWeights::default()) - want).abs() < 1e-12);
        assert!(LossWeights { lambda_stop: -1.0, ..zero }.validate().is_err());
    }

    #[test]
    fn tape_route_matches_plain_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pred: Vec<_> = (0..4).map(|_| random_color(&mut rng)).collect();
        let gt: Vec<_> = (0..4).map(|_| random_color(&mut rng)).collect();
        let g = Graph::new();
        let flat: Vec<f64> = pred.iter().flat_map(|c| [c.l, c.c, c.h]).collect();
        let x = g.leaf(Arc::new(Mat::from_vec(4, 3, flat)));
        let vars: Vec<[_; 3]> = (0..4).map(|i| [x.at(i, 0), x.at(i, 1), x.at(i, 2)]).collect();
        let (loss, _) = color_distance_generic(&vars, &gt).unwrap();
        let plain = color_distance_loss(&pred, &gt).unwrap();
        assert!((loss.item() - plain).abs() < 1e-12);
        let hues: Vec<_> = vars.iter().map(|v| v[2] / 360.0).collect();
        let div = diversity_generic(&hues, HueMetric::Linear);
        assert!((div.item() - diversity_loss(&pred, HueMetric::Linear).unwrap()).abs() < 1e-12);
        let grads = g.backward(loss + div);
        assert!(grads.get(x).unwrap().is_finite());
    }

    fn arb_color() -> impl Strategy<Value = LchColor> {
        (0.0..100.0f64, 0.0..120.0f64, 0.0..360.0f64).prop_map(|(l, c, h)| LchColor::new(l, c, h))
    }

    proptest! {
        #[test]
        fn color_distance_is_invariant_to_prediction_order(
            pred in prop::collection::vec(arb_color(), 4),
            gt in prop::collection::vec(arb_color(), 4),
            rot in 0usize..4,
        ) {
            let mut shuffled = pred.clone();
            shuffled.rotate_left(rot);
            let a = color_distance_loss(&pred, &gt).unwrap();
            let b = color_distance_loss(&shuffled, &gt).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn assignment_never_worse_than_identity(
            pred in prop::collection::vec(arb_color(), 5),
            gt in prop::collection::vec(arb_color(), 5),
        ) {
            let identity: f64 = gt.iter().zip(&pred).map(|(g, p)| ciede2000(*g, *p)).sum::<f64>() / 5.0;
            prop_assert!(color_distance_loss(&pred, &gt).unwrap() <= identity + 1e-9);
        }

        #[test]
        fn emotion_consistency_scale_invariant(
            v in prop::collection::vec(0.01..1.0f64, 24),
            s in 0.1..10.0f64,
        ) {
            let a = ev(std::array::from_fn(|i| v[i]));
            let b = ev(std::array::from_fn(|i| v[8 + i]));
            let c = ev(std::array::from_fn(|i| v[16 + i]));
            let base = emotion_consistency_loss(&a, &b, &c).unwrap();
            let scaled = emotion_consistency_loss(&a.scaled(s), &b.scaled(s), &c.scaled(s)).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9);
        }

        #[test]
        fn total_loss_linear_in_weights(k in 0.0..5.0f64, c in 0.0..50.0f64, d in -1.0..0.0f64) {
            let parts = LossParts { color: c, diversity: d, emotion: 0.3, stop: 0.6 };
            let w = LossWeights::default();
            let scaled = LossWeights {
                lambda_color: k * w.lambda_color,
                lambda_diversity: k * w.lambda_diversity,
                lambda_emotion: k * w.lambda_emotion,
                lambda_stop: k * w.lambda_stop,
            };
            prop_assert!((total_loss(&parts, &scaled) - k * total_loss(&parts, &w)).abs() < 1e-9);
        }

        #[test]
        fn diversity_permutation_invariant(p in prop::collection::vec(arb_color(), 2..6), rot in 0usize..6) {
            let mut q = p.clone();
            let len = q.len();
            q.rotate_left(rot % len);
            let a = diversity_loss(&p, HueMetric::Linear).unwrap();
            let b = diversity_loss(&q, HueMetric::Linear).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
