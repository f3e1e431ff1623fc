//! Gradient descent, Adam, LBFGS and the bouncing Born–Infeld optimizer
//! behind a common per-epoch interface.

mod adam;
mod bbi;
mod config;
mod gd;
mod lbfgs;

pub use adam::Adam;
pub use bbi::{bbi_init, bbi_step, Bbi, BbiState, BounceStatus};
pub use config::{AdamParams, BbiParams, LbfgsParams, OptimizerConfig, OptimizerKind};
pub use gd::{gd_step, GradientDescent};
pub use lbfgs::{lbfgs_direction, CurvaturePair, Lbfgs, LbfgsStop, MIN_CURVATURE};

use crate::error::Result;

/// A differentiable training objective.
pub trait Objective {
    /// Full-batch loss; writes the gradient into `grad`.
    fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// Prepares the mini-batches of a new epoch and returns how many there are.
    fn begin_epoch(&mut self) -> usize {
        1
    }

    /// Loss and gradient on mini-batch `batch` of the current epoch.
    fn eval_batch(&mut self, _batch: usize, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.eval(params, grad)
    }
}

/// Adapts a closure `f(params, grad) -> loss` into a full-batch [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        (self.0)(params, grad)
    }
}

/// What happened during one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EpochReport {
    /// Parameter updates applied.
    pub steps: usize,
    /// Objective evaluations (full or mini-batch).
    pub evaluations: usize,
    pub lbfgs_stop: Option<LbfgsStop>,
    pub bounced: bool,
}

impl EpochReport {
    /// LBFGS found the gradient below tolerance before moving.
    pub fn converged(&self) -> bool {
        self.steps == 0 && self.lbfgs_stop == Some(LbfgsStop::GradConverged)
    }
}

pub trait Optimizer: Send {
    fn kind(&self) -> OptimizerKind;

    /// Advances `params` by one epoch.
    fn epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<EpochReport>;

    /// True when each epoch opens with a full-batch evaluation at the
    /// current parameters.
    fn starts_with_full_eval(&self) -> bool {
        true
    }
}

/// Builds the optimizer described by `config` for `dim` parameters. `seed`
/// feeds the optimizer's own randomness (BBI bounces).
pub fn build(config: &OptimizerConfig, dim: usize, seed: u64) -> Result<Box<dyn Optimizer>> {
    config.validate()?;
    Ok(match config.kind {
        OptimizerKind::Gd => Box::new(GradientDescent::new(config.learning_rate, dim)),
        OptimizerKind::Adam => Box::new(Adam::new(config.learning_rate, config.adam, dim)),
        OptimizerKind::Lbfgs => Box::new(Lbfgs::new(config.learning_rate, config.lbfgs, dim)),
        OptimizerKind::Bbi => Box::new(Bbi::new(config.learning_rate, config.bbi, dim, seed)),
    })
}
