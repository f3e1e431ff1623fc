//! Statistics over training runs: rank correlation between curvature and
//! error, medians across seeds and end-of-run aggregates.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::LossBreakdown;
use crate::optim::OptimizerKind;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    /// Used the full epoch budget.
    Completed,
    /// Stopped early because the optimizer reached its gradient tolerance.
    Converged,
    /// Loss left the finite range or exceeded the guard.
    Diverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Converged => "converged",
            RunStatus::Diverged => "diverged",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "completed" => Ok(RunStatus::Completed),
            "converged" => Ok(RunStatus::Converged),
            "diverged" => Ok(RunStatus::Diverged),
            other => Err(Error::Parse(format!("unknown run status '{other}'"))),
        }
    }
}

/// Identifies the configuration a run belongs to. Runs sharing a key differ
/// only in their seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub optimizer: OptimizerKind,
    pub beta: f64,
    /// Architecture label such as `S`, `L` or `[2,8,1]`.
    pub arch: String,
    pub lr: f64,
}

impl RunKey {
    fn sort_tuple(&self) -> (OptimizerKind, f64, &str, f64) {
        (self.optimizer, self.beta, self.arch.as_str(), self.lr)
    }

    /// Total order used to sort groups deterministically.
    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b) = (self.sort_tuple(), other.sort_tuple());
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(b.2))
            .then(a.3.total_cmp(&b.3))
    }
}

/// One row of telemetry. Epoch 0 is the untrained network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub test: LossBreakdown,
    pub mse: f64,
    pub kappa_t: Option<f64>,
    pub kappa_omega: Option<f64>,
    pub cos_theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub key: RunKey,
    pub data_seed: u64,
    pub init_seed: u64,
    pub status: RunStatus,
    pub epochs: Vec<EpochRecord>,
}

impl RunRecord {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.last().map(|e| e.mse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMeasure {
    KappaT,
    KappaOmega,
}

impl CurvatureMeasure {
    pub fn of(self, e: &EpochRecord) -> Option<f64> {
        match self {
            CurvatureMeasure::KappaT => e.kappa_t,
            CurvatureMeasure::KappaOmega => e.kappa_omega,
        }
    }
}

/// Average ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InsufficientData("correlation of a constant series is undefined".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation of two fully defined series.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::config(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Domain("spearman input contains non-finite values".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub used: usize,
    pub dropped: usize,
}

/// Spearman correlation after listwise removal of pairs with an undefined or
/// non-finite entry.
pub fn spearman_paired(xs: &[Option<f64>], ys: &[Option<f64>]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::config(format!("series lengths differ: {} vs {}", xs.len(), ys.len())));
    }
    let (a, b): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter_map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Some((*x, *y)),
            _ => None,
        })
        .unzip();
    let dropped = xs.len() - a.len();
    let rho = spearman(&a, &b)?;
    Ok(Correlation { rho, used: a.len(), dropped })
}

/// Whole-trajectory ρ(curvature, MSE) for one run, optionally restricted to
/// an epoch range.
pub fn trajectory_spearman(
    record: &RunRecord,
    measure: CurvatureMeasure,
    epochs: Option<RangeInclusive<usize>>,
) -> Result<Correlation> {
    let rows = record.epochs.iter().filter(|e| epochs.as_ref().is_none_or(|r| r.contains(&e.epoch)));
    let (k, m): (Vec<_>, Vec<_>) = rows.map(|e| (measure.of(e), Some(e.mse))).unzip();
    spearman_paired(&k, &m)
}

/// Median with the midpoint rule for even counts. `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Per-epoch median of `extract` across runs. Each epoch uses the runs that
/// reached it with a defined value; epochs where none did are `None`.
pub fn median_over_seeds<F>(records: &[RunRecord], extract: F) -> Result<Vec<Option<f64>>>
where
    F: Fn(&EpochRecord) -> Option<f64>,
{
    if records.is_empty() {
        return Err(Error::InsufficientData("median over an empty set of runs".into()));
    }
    let len = records.iter().map(|r| r.epochs.len()).max().unwrap_or(0);
    let mut column = Vec::with_capacity(records.len());
    Ok((0..len)
        .map(|i| {
            column.clear();
            column.extend(records.iter().filter_map(|r| r.epochs.get(i).and_then(&extract)));
            median(&column)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub key: RunKey,
    pub init_seed: u64,
    pub status: RunStatus,
    pub kappa_omega: Option<f64>,
    pub kappa_t: Option<f64>,
    pub mse: Option<f64>,
}

/// Final curvature and error of each run, taken from its last epoch. An
/// undefined final curvature stays missing.
pub fn final_scatter(records: &[RunRecord]) -> Vec<ScatterPoint> {
    records
        .iter()
        .map(|r| {
            let last = r.last();
            ScatterPoint {
                key: r.key.clone(),
                init_seed: r.init_seed,
                status: r.status,
                kappa_omega: last.and_then(|e| e.kappa_omega),
                kappa_t: last.and_then(|e| e.kappa_t),
                mse: last.map(|e| e.mse),
            }
        })
        .collect()
}
