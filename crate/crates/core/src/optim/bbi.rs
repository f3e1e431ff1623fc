use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_all_finite, ensure_finite, Error, Result};
use crate::kernels::{axpy, dot, norm};
use crate::rng::{stream, Stream, StreamRng};

use super::{BbiParams, EpochReport, Objective, Optimizer, OptimizerKind};

/// Dynamical state of the bouncing Born–Infeld optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct BbiState {
    pub momentum: Vec<f64>,
    /// Conserved energy, fixed at initialization.
    pub energy: f64,
    /// Shifted potential at the starting point.
    pub v0: f64,
}

impl BbiState {
    /// `V·(|Π|² + V)`, equal to `E²` along exact trajectories.
    pub fn invariant(&self, v: f64) -> f64 {
        v * (dot(&self.momentum, &self.momentum) + v)
    }

    /// Replaces the momentum by an isotropic random direction of the same norm.
    pub fn randomize_direction<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let speed = norm(&self.momentum);
        let mut dir: Vec<f64> = self.momentum.iter().map(|_| rng.sample(StandardNormal)).collect();
        let mut len = norm(&dir);
        while len == 0.0 {
            dir.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            len = norm(&dir);
        }
        let scale = speed / len;
        for (p, d) in self.momentum.iter_mut().zip(&dir) {
            *p = d * scale;
        }
    }
}

/// Initial state from the shifted loss `v0` and its gradient: the momentum
/// points downhill with magnitude `sqrt(E²/V₀ − V₀)`, `E = V₀ + δE`.
pub fn bbi_init(v0: f64, grad: &[f64], delta_e: f64) -> Result<BbiState> {
    if !(v0 > 0.0) {
        return Err(Error::config(format!(
            "shifted potential must be positive at the start, got {v0}; increase the objective shift"
        )));
    }
    ensure_all_finite(grad, 0)?;
    let gnorm = norm(grad);
    if gnorm == 0.0 {
        return Err(Error::DegenerateStart("zero gradient at the initial parameters".into()));
    }
    let energy = v0 + delta_e;
    let speed = (energy * energy / v0 - v0).sqrt();
    let momentum = grad.iter().map(|g| -g / gnorm * speed).collect();
    Ok(BbiState { momentum, energy, v0 })
}

/// One update: momentum first, then position with the new momentum. `v` is
/// the shifted potential at `params` and `grad` its gradient.
pub fn bbi_step(state: &mut BbiState, params: &mut [f64], grad: &[f64], v: f64, lr: f64, rescale: bool) -> Result<()> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("shifted potential must stay positive, got {v}")));
    }
    let e = state.energy;
    let kick = -0.5 * lr * (v / e + e / v);
    axpy(kick, grad, &mut state.momentum);
    if rescale {
        let target_sq = (e * e / v - v).max(0.0);
        let current = norm(&state.momentum);
        if current > 0.0 {
            let s = target_sq.sqrt() / current;
            state.momentum.iter_mut().for_each(|p| *p *= s);
        }
    }
    ensure_all_finite(&state.momentum, 0)?;
    axpy(lr * v / e, &state.momentum, params);
    Ok(())
}

/// Outcome of a bounce request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BounceStatus {
    Bounced,
    Exhausted,
}

/// BBI with fixed-period and progress-triggered bounces. One full-batch step
/// per epoch.
#[derive(Debug, Clone)]
pub struct Bbi {
    lr: f64,
    params: BbiParams,
    state: Option<BbiState>,
    rng: StreamRng,
    steps: usize,
    since_bounce: usize,
    bounces_used: usize,
    /// Losses of the last `t1 + 1` steps since the latest bounce.
    recent: VecDeque<f64>,
    grad: Vec<f64>,
}

impl Bbi {
    pub fn new(lr: f64, params: BbiParams, dim: usize, seed: u64) -> Self {
        Self::with_rng(lr, params, dim, stream(seed, Stream::Bounce))
    }

    pub fn with_rng(lr: f64, params: BbiParams, dim: usize, rng: StreamRng) -> Self {
        Self {
            lr,
            params,
            state: None,
            rng,
            steps: 0,
            since_bounce: 0,
            bounces_used: 0,
            recent: VecDeque::with_capacity(params.t1 + 1),
            grad: vec![0.0; dim],
        }
    }

    pub fn state(&self) -> Option<&BbiState> {
        self.state.as_ref()
    }

    pub fn bounces_used(&self) -> usize {
        self.bounces_used
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Randomizes the momentum direction if budget remains.
    pub fn bounce(&mut self) -> Result<BounceStatus> {
        let state = self.state.as_mut().ok_or_else(|| Error::Internal("bounce before initialization".into()))?;
        if self.bounces_used >= self.params.n_bounces {
            return Ok(BounceStatus::Exhausted);
        }
        state.randomize_direction(&mut self.rng);
        self.bounces_used += 1;
        self.since_bounce = 0;
        self.recent.clear();
        Ok(BounceStatus::Bounced)
    }

    fn bounce_due(&self, v: f64) -> bool {
        if self.bounces_used >= self.params.n_bounces {
            return false;
        }
        let t0 = self.params.t0;
        if t0 > 0 && self.steps.is_multiple_of(t0) {
            return true;
        }
        let t1 = self.params.t1;
        if t1 > 0 && self.recent.len() > t1 {
            let old = self.recent[0];
            if old > 0.0 && (old - v) / old < self.params.progress_threshold {
                return true;
            }
        }
        false
    }

    fn step_once(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<bool> {
        let loss = objective.eval(params, &mut self.grad)?;
        ensure_finite(loss, self.steps)?;
        let v = loss + self.params.delta_v;
        if self.state.is_none() {
            self.state = Some(bbi_init(v, &self.grad, self.params.delta_e)?);
        }
        let state = self.state.as_mut().expect("initialized above");
        bbi_step(state, params, &self.grad, v, self.lr, self.params.rescale_energy).map_err(|e| match e {
            Error::Divergence { value, .. } => Error::Divergence { value, step: self.steps },
            other => other,
        })?;
        self.steps += 1;
        self.since_bounce += 1;
        if self.recent.len() > self.params.t1 {
            self.recent.pop_front();
        }
        self.recent.push_back(v);
        if self.bounce_due(v) {
            return Ok(self.bounce()? == BounceStatus::Bounced);
        }
        Ok(false)
    }
}

impl Optimizer for Bbi {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Bbi
    }

    fn epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<EpochReport> {
        let bounced = self.step_once(params, objective)?;
        Ok(EpochReport { steps: 1, evaluations: 1, lbfgs_stop: None, bounced })
    }
}
