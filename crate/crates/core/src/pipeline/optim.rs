use std::collections::BTreeMap;
use std::sync::Arc;

use crate::autograd::Mat;
use crate::model::ModelState;

/// AdamW with decoupled weight decay applied to every tensor.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    first: BTreeMap<String, Vec<f64>>,
    second: BTreeMap<String, Vec<f64>>,
}

impl AdamW {
    pub fn new(beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        AdamW {
            beta1,
            beta2,
            eps,
            weight_decay,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, state: &mut ModelState, grads: &BTreeMap<String, Mat>, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (name, param) in state.params_mut().iter_mut() {
            let Some(g) = grads.get(name) else { continue };
            let p = Arc::make_mut(param);
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| vec![0.0; p.len()]);
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| vec![0.0; p.len()]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let update = (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
                p.data[i] -= lr * (update + self.weight_decay * p.data[i]);
            }
        }
    }
}

/// Cosine annealing from `base` at epoch 0 to `floor` at `total` epochs.
pub fn cosine_lr(base: f64, floor: f64, epoch: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    let progress = (epoch.min(total) as f64) / total as f64;
    floor + (base - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(1e-4, 1e-6, 0, 100), 1e-4);
        assert!((cosine_lr(1e-4, 1e-6, 100, 100) - 1e-6).abs() < 1e-18);
        assert!((cosine_lr(1e-4, 1e-6, 50, 100) - (1e-6 + 0.5 * (1e-4 - 1e-6))).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let cfg = ModelConfig {
            d_model: 8,
            heads: 2,
            ff_dim: 8,
            encoder_layers: 1,
            decoder_layers: 1,
            ..ModelConfig::default()
        };
        let mut state = ModelState::init(&cfg).unwrap();
        let before = state.param("head.stop.b").data[0];
        let mut grads = BTreeMap::new();
        grads.insert("head.stop.b".to_string(), Mat::scalar(3.0));
        let mut opt = AdamW::new(0.9, 0.999, 1e-8, 0.0);
        opt.step(&mut state, &grads, 0.01);
        let after = state.param("head.stop.b").data[0];
        assert!((after - (before - 0.01)).abs() < 1e-9);
        assert_eq!(opt.steps_taken(), 1);
    }
}
