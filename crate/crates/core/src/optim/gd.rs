use crate::error::{ensure_all_finite, Error, Result};

use super::{EpochReport, Objective, Optimizer, OptimizerKind};

/// `params ← params − lr · grad`.
pub fn gd_step(params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if params.len() != grad.len() {
        return Err(Error::config("gradient length differs from parameter count"));
    }
    ensure_all_finite(grad, 0)?;
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
    Ok(())
}

/// Full-batch gradient descent without momentum.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    lr: f64,
    grad: Vec<f64>,
    steps: usize,
}

impl GradientDescent {
    pub fn new(lr: f64, dim: usize) -> Self {
        Self { lr, grad: vec![0.0; dim], steps: 0 }
    }
}

impl Optimizer for GradientDescent {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Gd
    }

    fn epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<EpochReport> {
        objective.eval(params, &mut self.grad)?;
        gd_step(params, &self.grad, self.lr).map_err(|e| match e {
            Error::Divergence { value, .. } => Error::Divergence { value, step: self.steps },
            other => other,
        })?;
        self.steps += 1;
        Ok(EpochReport { steps: 1, evaluations: 1, ..EpochReport::default() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnObjective;

    #[test]
    fn single_step() {
        let mut p = [1.0];
        gd_step(&mut p, &[2.0], 0.1).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = [1.5, -2.0];
        gd_step(&mut p, &[0.0, 0.0], 0.3).unwrap();
        assert_eq!(p, [1.5, -2.0]);
    }

    #[test]
    fn two_epochs_on_quadratic() {
        let mut opt = GradientDescent::new(0.5, 1);
        let mut obj = FnObjective(|p: &[f64], g: &mut [f64]| {
            g[0] = p[0];
            Ok(0.5 * p[0] * p[0])
        });
        let mut p = [1.0];
        opt.epoch(&mut p, &mut obj).unwrap();
        opt.epoch(&mut p, &mut obj).unwrap();
        assert_eq!(p[0], 0.25);
    }

    #[test]
    fn non_finite_gradient_diverges() {
        let mut p = [1.0];
        assert!(gd_step(&mut p, &[f64::NAN], 0.1).unwrap_err().is_divergence());
    }
}
