use crate::analysis::{EpochRecord, RunKey, RunRecord, RunStatus};
use crate::error::Result;
use crate::geom::CurvatureTracker;
use crate::model::{init_params, sample_dataset, AdvectionProblem, BatchedEvaluator, MseGrid, PointSet};
use crate::optim::{self, Optimizer};
use crate::rng::{stream, Stream};

use super::config::{ExperimentConfig, DIVERGENCE_THRESHOLD};
use super::objective::PinnObjective;

/// Knobs that change what is measured, not how training proceeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Evaluate the grid error every epoch. When off, `mse` is NaN.
    pub track_mse: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { track_mse: true }
    }
}

pub fn run_key(cfg: &ExperimentConfig) -> RunKey {
    RunKey {
        optimizer: cfg.optimizer.kind,
        beta: cfg.beta,
        arch: cfg.arch.label(),
        lr: cfg.optimizer.learning_rate,
    }
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run_with(cfg, RunOptions::default())
}

/// Trains one network and records telemetry after every epoch. Divergence
/// ends the run early with status [`RunStatus::Diverged`]; configuration
/// problems are returned as errors.
pub fn run_with(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunRecord> {
    let mut session = Session::new(cfg, opts)?;
    while session.step()? {}
    Ok(session.finish())
}

/// A training run advanced one epoch at a time.
///
/// Creating a session records epoch 0; every [`Session::step`] trains one
/// epoch and records it.
pub struct Session {
    key: RunKey,
    data_seed: u64,
    init_seed: u64,
    max_epochs: usize,
    objective: PinnObjective,
    test: PointSet,
    grid: Option<MseGrid>,
    params: Vec<f64>,
    optimizer: Box<dyn Optimizer>,
    prefetch: bool,
    tracker: CurvatureTracker,
    epochs: Vec<EpochRecord>,
    status: RunStatus,
}

impl Session {
    pub fn new(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Self> {
        cfg.validate()?;
        let arch = cfg.arch.build()?;
        let problem = AdvectionProblem::new(cfg.beta)?;
        let data = sample_dataset(&problem, cfg.data_seed, &cfg.sampling)?;
        let params = init_params(&arch, cfg.init_seed).into_inner();
        let optimizer = optim::build(&cfg.optimizer, params.len(), cfg.init_seed)?;
        let objective = PinnObjective::new(
            BatchedEvaluator::new(arch, problem),
            data.train,
            cfg.optimizer.adam.batch_size,
            stream(cfg.init_seed, Stream::Shuffle),
        );
        let mut session = Self {
            key: run_key(cfg),
            data_seed: cfg.data_seed,
            init_seed: cfg.init_seed,
            max_epochs: cfg.epochs,
            objective,
            test: data.test,
            grid: opts.track_mse.then(|| MseGrid::new(&problem, cfg.mse_grid)),
            params,
            prefetch: optimizer.starts_with_full_eval(),
            optimizer,
            tracker: CurvatureTracker::new(),
            epochs: Vec::with_capacity(cfg.epochs + 1),
            status: RunStatus::Completed,
        };
        session.record(0)?;
        Ok(session)
    }

    /// True while more epochs remain and the run has neither converged nor
    /// diverged.
    pub fn is_running(&self) -> bool {
        self.status == RunStatus::Completed && self.epoch() < self.max_epochs
    }

    /// Index of the latest recorded epoch.
    pub fn epoch(&self) -> usize {
        self.epochs.last().map_or(0, |e| e.epoch)
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.epochs
    }

    pub fn evaluator(&self) -> &BatchedEvaluator {
        self.objective.evaluator()
    }

    /// Trains one epoch if the run is still going. Returns
    /// [`Session::is_running`] afterwards.
    pub fn step(&mut self) -> Result<bool> {
        if !self.is_running() {
            return Ok(false);
        }
        let epoch = self.epoch() + 1;
        match self.optimizer.epoch(&mut self.params, &mut self.objective) {
            Ok(report) if report.converged() => {
                self.status = RunStatus::Converged;
                return Ok(false);
            }
            Ok(_) => {}
            Err(e) if e.is_divergence() => {
                self.status = RunStatus::Diverged;
                return Ok(false);
            }
            Err(e) => return Err(e),
        }
        self.record(epoch)?;
        Ok(self.is_running())
    }

    pub fn finish(self) -> RunRecord {
        RunRecord {
            key: self.key,
            data_seed: self.data_seed,
            init_seed: self.init_seed,
            status: self.status,
            epochs: self.epochs,
        }
    }

    fn observe(&mut self, epoch: usize) -> Result<EpochRecord> {
        let train = self.objective.breakdown(&self.params, self.prefetch)?;
        let eval = self.objective.evaluator();
        let test = eval.loss(&self.params, &self.test)?;
        let mse = match &self.grid {
            Some(g) => g.mse(eval, &self.params)?,
            None => f64::NAN,
        };
        let sample = self.tracker.push(&self.params)?;
        Ok(EpochRecord {
            epoch,
            train,
            test,
            mse,
            kappa_t: sample.and_then(|s| s.kappa_t),
            kappa_omega: sample.and_then(|s| s.kappa_omega),
            cos_theta: sample.and_then(|s| s.cos_theta),
        })
    }

    fn record(&mut self, epoch: usize) -> Result<()> {
        match self.observe(epoch) {
            Ok(row) => {
                let blown = !(row.train.total <= DIVERGENCE_THRESHOLD);
                self.epochs.push(row);
                if blown {
                    self.status = RunStatus::Diverged;
                }
                Ok(())
            }
            Err(e) if e.is_divergence() => {
                self.status = RunStatus::Diverged;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

/// `cfg.seeds` runs with initialization seeds `init_seed, init_seed + 1, …`
/// and a shared data seed, ordered by seed.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_batch_with(cfg, RunOptions::default())
}

pub fn run_batch_with(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let configs: Vec<ExperimentConfig> = (0..cfg.seeds as u64)
        .map(|i| {
            let mut c = cfg.clone();
            c.init_seed = cfg.init_seed.wrapping_add(i);
            c.seeds = 1;
            c
        })
        .collect();
    run_many(&configs, opts)
}

/// Runs independent configurations, in parallel when enabled. Output order
/// follows input order.
pub fn run_many(configs: &[ExperimentConfig], opts: RunOptions) -> Result<Vec<RunRecord>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs.par_iter().map(|c| run_with(c, opts)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs.iter().map(|c| run_with(c, opts)).collect()
    }
}
