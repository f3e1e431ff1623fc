use crate::analysis::{RunKey, RunStatus};
use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::csv::fmt_f64;
use super::train::{run_key, run_many, RunOptions};

/// Written instead of a learning rate when every candidate diverged.
pub const NO_VIABLE_LR: &str = "no-viable-lr";

pub const GRID_HEADER: &str = "optimizer,beta,arch,lr,mean_final_test_loss,n_diverged,trials,selected";

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchSpec {
    pub candidates: Vec<f64>,
    pub trials: usize,
    pub epochs: usize,
}

impl Default for GridSearchSpec {
    fn default() -> Self {
        Self { candidates: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0], trials: 5, epochs: 300 }
    }
}

impl GridSearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::config("grid search needs at least one learning rate"));
        }
        if let Some(bad) = self.candidates.iter().find(|&&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::config(format!("learning rates must be positive, got {bad}")));
        }
        if self.trials == 0 {
            return Err(Error::config("grid search needs at least one trial"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub lr: f64,
    /// Mean final test loss over trials; `None` when any trial diverged.
    pub mean_final_test_loss: Option<f64>,
    pub n_diverged: usize,
    pub trials: usize,
}

impl CandidateResult {
    pub fn viable(&self) -> bool {
        self.n_diverged == 0 && self.mean_final_test_loss.is_some_and(f64::is_finite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    /// Configuration searched; `lr` is the winner, or NaN if none.
    pub key: RunKey,
    pub candidates: Vec<CandidateResult>,
    pub best: Option<f64>,
}

/// Trains `spec.trials` networks per candidate learning rate (seeds
/// `base.init_seed + i`) and picks the candidate with the lowest mean final
/// test loss. A candidate with any diverged trial is not viable.
pub fn grid_search(spec: &GridSearchSpec, base: &ExperimentConfig) -> Result<GridSearchOutcome> {
    spec.validate()?;
    base.validate()?;
    let mut configs = Vec::with_capacity(spec.candidates.len() * spec.trials);
    for &lr in &spec.candidates {
        for t in 0..spec.trials as u64 {
            let mut c = base.clone().with_lr(lr).with_epochs(spec.epochs);
            c.init_seed = base.init_seed.wrapping_add(t);
            c.seeds = 1;
            configs.push(c);
        }
    }
    let records = run_many(&configs, RunOptions { track_mse: false })?;

    let candidates: Vec<CandidateResult> = spec
        .candidates
        .iter()
        .zip(records.chunks(spec.trials))
        .map(|(&lr, runs)| {
            let n_diverged = runs.iter().filter(|r| r.status == RunStatus::Diverged).count();
            let mean = (n_diverged == 0).then(|| {
                runs.iter().map(|r| r.last().map_or(f64::NAN, |e| e.test.total)).sum::<f64>() / runs.len() as f64
            });
            CandidateResult { lr, mean_final_test_loss: mean, n_diverged, trials: runs.len() }
        })
        .collect();

    let best = candidates
        .iter()
        .filter(|c| c.viable())
        .min_by(|a, b| a.mean_final_test_loss.unwrap().total_cmp(&b.mean_final_test_loss.unwrap()))
        .map(|c| c.lr);
    let mut key = run_key(base);
    key.lr = best.unwrap_or(f64::NAN);
    Ok(GridSearchOutcome { key, candidates, best })
}

/// Full table of candidates, marking the winner.
pub fn format_grid_csv(outcomes: &[GridSearchOutcome]) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for o in outcomes {
        let arch = if o.key.arch.contains(',') { format!("\"{}\"", o.key.arch) } else { o.key.arch.clone() };
        for c in &o.candidates {
            let selected = o.best == Some(c.lr);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                o.key.optimizer,
                fmt_f64(o.key.beta),
                arch,
                fmt_f64(c.lr),
                c.mean_final_test_loss.map(fmt_f64).unwrap_or_default(),
                c.n_diverged,
                c.trials,
                selected
            ));
        }
    }
    out
}

/// Winner per configuration, or the no-viable marker.
pub fn format_best_lr(outcome: &GridSearchOutcome) -> String {
    let lr = outcome.best.map(fmt_f64).unwrap_or_else(|| NO_VIABLE_LR.to_string());
    format!("{} beta={} arch={} lr={}", outcome.key.optimizer, outcome.key.beta, outcome.key.arch, lr)
}
