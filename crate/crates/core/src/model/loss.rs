use crate::autodiff::{eval_with_input_derivs, mean, Scalar};
use crate::error::{Error, Result};

use super::batched::BatchedEvaluator;
use super::network::forward_generic;
use super::problem::{AdvectionProblem, PointSet, X_PERIOD};
use super::MlpArchitecture;

/// The three PINN loss terms (all weights equal to one) and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// Initial condition: mean of `(u(x, 0) − sin x)²`.
    pub ic: f64,
    /// PDE residual: mean of `(u_t + β u_x)²`.
    pub bulk: f64,
    /// Periodic boundary: mean of `(u(0, t) − u(2π, t))²`.
    pub bc: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(ic: f64, bulk: f64, bc: f64) -> Self {
        Self { ic, bulk, bc, total: ic + bulk + bc }
    }

    pub fn is_finite(&self) -> bool {
        self.ic.is_finite() && self.bulk.is_finite() && self.bc.is_finite() && self.total.is_finite()
    }
}

/// Loss terms in any scalar type; used to differentiate through the tape.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms<S> {
    pub ic: S,
    pub bulk: S,
    pub bc: S,
    pub total: S,
}

impl<S: Scalar> LossTerms<S> {
    pub fn breakdown(&self) -> LossBreakdown {
        LossBreakdown {
            ic: self.ic.value(),
            bulk: self.bulk.value(),
            bc: self.bc.value(),
            total: self.total.value(),
        }
    }
}

/// Reference evaluation of the loss, point by point, for any scalar type.
///
/// With `S = Var` this records the whole loss on a tape, so
/// [`crate::autodiff::grad_params`] yields its exact parameter gradient.
pub fn pinn_loss_terms<S: Scalar>(
    arch: &MlpArchitecture,
    params: &[S],
    problem: &AdvectionProblem,
    points: &PointSet,
) -> Result<LossTerms<S>> {
    arch.check_params(params.len())?;
    points.check_nonempty()?;
    let zero = S::constant(0.0);
    let ic: Vec<S> = points
        .ic
        .iter()
        .map(|&(x, target)| (forward_generic(arch, params, S::constant(x), zero) - S::constant(target)).square())
        .collect();
    let bulk = points
        .bulk
        .iter()
        .map(|&(x, t)| {
            let d = eval_with_input_derivs(arch, params, x, t)?;
            Ok((d.du_dt + S::constant(problem.beta) * d.du_dx).square())
        })
        .collect::<Result<Vec<S>>>()?;
    let bc: Vec<S> = points
        .bc
        .iter()
        .map(|&t| {
            let ts = S::constant(t);
            let left = forward_generic(arch, params, zero, ts);
            let right = forward_generic(arch, params, S::constant(X_PERIOD), ts);
            (left - right).square()
        })
        .collect();
    // check_nonempty guarantees each mean exists
    let ic = mean(&ic).unwrap();
    let bulk = mean(&bulk).unwrap();
    let bc = mean(&bc).unwrap();
    let terms = LossTerms { ic, bulk, bc, total: ic + bulk + bc };
    if !terms.total.value().is_finite() {
        return Err(Error::Divergence { value: terms.total.value(), step: 0 });
    }
    Ok(terms)
}

/// Loss breakdown of `params` on `points`.
pub fn pinn_loss(
    arch: &MlpArchitecture,
    params: &[f64],
    problem: &AdvectionProblem,
    points: &PointSet,
) -> Result<LossBreakdown> {
    BatchedEvaluator::new(arch.clone(), *problem).loss(params, points)
}
