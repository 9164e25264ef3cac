//! AdamW with decoupled weight decay.

use super::layers::{Grads, ParamStore};
use super::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> AdamWConfig {
        AdamWConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW<S> {
    pub config: AdamWConfig,
    step: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> AdamW<S> {
    pub fn new(config: AdamWConfig, store: &ParamStore<S>) -> AdamW<S> {
        AdamW {
            config,
            step: 0,
            m: store
                .params
                .iter()
                .map(|p| vec![S::ZERO; p.values.len()])
                .collect(),
            v: store
                .params
                .iter()
                .map(|p| vec![S::ZERO; p.values.len()])
                .collect(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore<S>, grads: &Grads<S>) {
        self.step += 1;
        let c = &self.config;
        let b1 = S::from_f64(c.beta1);
        let b2 = S::from_f64(c.beta2);
        let lr = S::from_f64(c.learning_rate);
        let eps = S::from_f64(c.epsilon);
        let wd = S::from_f64(c.weight_decay);
        let bias1 = S::from_f64(1.0 - c.beta1.powi(self.step as i32));
        let bias2 = S::from_f64(1.0 - c.beta2.powi(self.step as i32));
        for (pid, param) in store.params.iter_mut().enumerate() {
            let g = &grads.bufs[pid];
            let m = &mut self.m[pid];
            let v = &mut self.v[pid];
            for i in 0..param.values.len() {
                m[i] = b1 * m[i] + (S::ONE - b1) * g[i];
                v[i] = b2 * v[i] + (S::ONE - b2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                let w = param.values[i];
                param.values[i] = w - lr * (m_hat / (v_hat.sqrt() + eps)) - lr * wd * w;
            }
        }
    }
}
