use rand::seq::SliceRandom;

use crate::error::Result;
use crate::model::{BatchedEvaluator, LossBreakdown, PointSet};
use crate::optim::Objective;
use crate::rng::StreamRng;

struct Cached {
    params: Vec<f64>,
    loss: LossBreakdown,
    grad: Option<Vec<f64>>,
}

/// PINN training loss over the train split. Remembers the most recent
/// full-batch evaluation so the per-epoch bookkeeping and the optimizer's
/// opening evaluation at the same point cost one pass, not two.
pub(crate) struct PinnObjective {
    eval: BatchedEvaluator,
    train: PointSet,
    batch_size: usize,
    rng: StreamRng,
    batches: Vec<PointSet>,
    cache: Option<Cached>,
}

impl PinnObjective {
    pub fn new(eval: BatchedEvaluator, train: PointSet, batch_size: usize, rng: StreamRng) -> Self {
        Self { eval, train, batch_size, rng, batches: Vec::new(), cache: None }
    }

    pub fn evaluator(&self) -> &BatchedEvaluator {
        &self.eval
    }

    fn cached(&self, params: &[f64], need_grad: bool) -> Option<&Cached> {
        self.cache.as_ref().filter(|c| c.params == params && (!need_grad || c.grad.is_some()))
    }

    /// Full train-set loss at `params`. With `prefetch_grad` the gradient is
    /// computed too and kept for the next [`Objective::eval`] call.
    pub fn breakdown(&mut self, params: &[f64], prefetch_grad: bool) -> Result<LossBreakdown> {
        if let Some(c) = self.cached(params, prefetch_grad) {
            return Ok(c.loss);
        }
        let (loss, grad) = if prefetch_grad {
            let mut g = vec![0.0; params.len()];
            let loss = self.eval.loss_and_grad(params, &self.train, &mut g)?;
            (loss, Some(g))
        } else {
            (self.eval.loss(params, &self.train)?, None)
        };
        self.cache = Some(Cached { params: params.to_vec(), loss, grad });
        Ok(loss)
    }

    fn partition(&mut self) {
        let t = &self.train;
        let smallest = t.ic.len().min(t.bulk.len()).min(t.bc.len()).max(1);
        let n = ((t.len() as f64 / self.batch_size as f64).round() as usize).clamp(1, smallest);
        let mut ic = t.ic.clone();
        let mut bulk = t.bulk.clone();
        let mut bc = t.bc.clone();
        ic.shuffle(&mut self.rng);
        bulk.shuffle(&mut self.rng);
        bc.shuffle(&mut self.rng);
        let part = |len: usize, b: usize| (b * len / n)..((b + 1) * len / n);
        self.batches = (0..n)
            .map(|b| PointSet {
                ic: ic[part(ic.len(), b)].to_vec(),
                bulk: bulk[part(bulk.len(), b)].to_vec(),
                bc: bc[part(bc.len(), b)].to_vec(),
            })
            .collect();
    }
}

impl Objective for PinnObjective {
    fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        if let Some(c) = self.cached(params, true) {
            grad.copy_from_slice(c.grad.as_deref().expect("checked by cached"));
            return Ok(c.loss.total);
        }
        let loss = self.eval.loss_and_grad(params, &self.train, grad)?;
        self.cache = Some(Cached { params: params.to_vec(), loss, grad: Some(grad.to_vec()) });
        Ok(loss.total)
    }

    fn begin_epoch(&mut self) -> usize {
        self.partition();
        self.batches.len()
    }

    fn eval_batch(&mut self, batch: usize, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        Ok(self.eval.loss_and_grad(params, &self.batches[batch], grad)?.total)
    }
}
