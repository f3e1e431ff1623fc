use crate::error::{ensure_all_finite, Error, Result};

use super::{AdamParams, EpochReport, Objective, Optimizer, OptimizerKind};

/// Adam with bias correction, stepping once per mini-batch.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    params: AdamParams,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    grad: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, params: AdamParams, dim: usize) -> Self {
        Self { lr, params, m: vec![0.0; dim], v: vec![0.0; dim], step: 0, grad: vec![0.0; dim] }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update from `grad`; advances the moment estimates.
    pub fn step(&mut self, x: &mut [f64], grad: &[f64]) -> Result<()> {
        if x.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::config("adam state, parameter and gradient lengths differ"));
        }
        ensure_all_finite(grad, self.step as usize)?;
        self.step += 1;
        let AdamParams { beta1, beta2, eps, weight_decay, .. } = self.params;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2_sqrt = (1.0 - beta2.powi(self.step as i32)).sqrt();
        let step_size = self.lr / bc1;
        for i in 0..x.len() {
            let g = grad[i] + weight_decay * x[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let denom = self.v[i].sqrt() / bc2_sqrt + eps;
            x[i] -= step_size * self.m[i] / denom;
        }
        Ok(())
    }
}

impl Optimizer for Adam {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adam
    }

    fn epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<EpochReport> {
        let batches = objective.begin_epoch();
        let mut grad = std::mem::take(&mut self.grad);
        let result = (|| -> Result<()> {
            for b in 0..batches {
                objective.eval_batch(b, params, &mut grad)?;
                self.step(params, &grad)?;
            }
            Ok(())
        })();
        self.grad = grad;
        result?;
        Ok(EpochReport { steps: batches, evaluations: batches, ..EpochReport::default() })
    }

    fn starts_with_full_eval(&self) -> bool {
        false
    }
}
