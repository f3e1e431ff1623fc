use std::f64::consts::TAU;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Right end of the periodic spatial domain `[0, 2π)`.
pub const X_PERIOD: f64 = TAU;
/// Final time of the domain `[0, 1]`.
pub const T_END: f64 = 1.0;

/// `u_t + β u_x = 0` on `[0, 2π) × [0, 1]`, `u(x, 0) = sin x`, periodic in x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionProblem {
    pub beta: f64,
}

impl AdvectionProblem {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!("wave speed must be positive, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn initial_condition(x: f64) -> f64 {
        x.sin()
    }

    pub fn exact(&self, x: f64, t: f64) -> f64 {
        exact_solution(self.beta, x, t)
    }
}

/// Characteristic solution `sin(x − βt)`.
pub fn exact_solution(beta: f64, x: f64, t: f64) -> f64 {
    (x - beta * t).sin()
}

/// Uniform sampling grid: `x_i = 2π i / nx` (periodic, right end excluded) and
/// `t_j = j / (nt − 1)` (both ends included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformGrid {
    pub nx: usize,
    pub nt: usize,
}

impl UniformGrid {
    pub const REFERENCE: UniformGrid = UniformGrid { nx: 256, nt: 100 };

    pub fn new(nx: usize, nt: usize) -> Result<Self> {
        if nx < 1 || nt < 2 {
            return Err(Error::config(format!("grid needs nx >= 1 and nt >= 2, got {nx}x{nt}")));
        }
        Ok(Self { nx, nt })
    }

    pub fn x(&self, i: usize) -> f64 {
        X_PERIOD * i as f64 / self.nx as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        T_END * j as f64 / (self.nt - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `k` in t-major order: `k = j·nx + i`.
    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.x(k % self.nx), self.t(k / self.nx))
    }
}

/// Collocation counts and the grid they are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub grid: UniformGrid,
    /// Initial-condition points.
    pub n_u: usize,
    /// Bulk (residual) points.
    pub n_f: usize,
    /// Periodic-boundary times.
    pub n_b: usize,
    pub train_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { grid: UniformGrid::REFERENCE, n_u: 100, n_f: 2000, n_b: 80, train_fraction: 0.8 }
    }
}

/// Points for the three loss terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    /// `(x, sin x)` at `t = 0`.
    pub ic: Vec<(f64, f64)>,
    /// `(x, t)` residual points.
    pub bulk: Vec<(f64, f64)>,
    /// Times `t`, each comparing `u(0, t)` with `u(2π, t)`.
    pub bc: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.ic.len() + self.bulk.len() + self.bc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        if self.ic.is_empty() || self.bulk.is_empty() || self.bc.is_empty() {
            return Err(Error::config(format!(
                "every loss category needs points (ic={}, bulk={}, bc={})",
                self.ic.len(),
                self.bulk.len(),
                self.bc.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub train: PointSet,
    pub test: PointSet,
}

fn split<T>(mut items: Vec<T>, fraction: f64) -> (Vec<T>, Vec<T>) {
    let n_train = (items.len() as f64 * fraction).round() as usize;
    let test = items.split_off(n_train.min(items.len()));
    (items, test)
}

/// Draws IC, bulk and boundary points from the grid without replacement and
/// splits each category independently into train and test parts.
pub fn sample_dataset(_problem: &AdvectionProblem, seed: u64, cfg: &SamplingConfig) -> Result<TrainingSet> {
    let grid = cfg.grid;
    UniformGrid::new(grid.nx, grid.nt)?;
    if cfg.n_u > grid.nx || cfg.n_f > grid.len() || cfg.n_b > grid.nt {
        return Err(Error::config(format!(
            "requested n_u={}, n_f={}, n_b={} exceed the {}x{} grid",
            cfg.n_u, cfg.n_f, cfg.n_b, grid.nx, grid.nt
        )));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0) {
        return Err(Error::config("train fraction must lie in (0, 1]"));
    }
    let mut rng = stream(seed, Stream::DataSampling);
    let ic: Vec<(f64, f64)> = index::sample(&mut rng, grid.nx, cfg.n_u)
        .into_iter()
        .map(|i| {
            let x = grid.x(i);
            (x, AdvectionProblem::initial_condition(x))
        })
        .collect();
    let bulk: Vec<(f64, f64)> = index::sample(&mut rng, grid.len(), cfg.n_f)
        .into_iter()
        .map(|k| grid.point(k))
        .collect();
    let bc: Vec<f64> = index::sample(&mut rng, grid.nt, cfg.n_b)
        .into_iter()
        .map(|j| grid.t(j))
        .collect();

    let (ic_train, ic_test) = split(ic, cfg.train_fraction);
    let (bulk_train, bulk_test) = split(bulk, cfg.train_fraction);
    let (bc_train, bc_test) = split(bc, cfg.train_fraction);
    Ok(TrainingSet {
        train: PointSet { ic: ic_train, bulk: bulk_train, bc: bc_train },
        test: PointSet { ic: ic_test, bulk: bulk_test, bc: bc_test },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn exact_solution_examples() {
        assert!((exact_solution(1.0, FRAC_PI_2, 0.0) - 1.0).abs() < 1e-15);
        assert!((exact_solution(5.0, 0.0, PI / 10.0) + 1.0).abs() < 1e-15);
        for k in 0..20 {
            let t = k as f64 / 19.0;
            let (a, b) = (exact_solution(30.0, 0.0, t), exact_solution(30.0, TAU, t));
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn default_split_sizes() {
        let p = AdvectionProblem::new(1.0).unwrap();
        let ds = sample_dataset(&p, 0, &SamplingConfig::default()).unwrap();
        assert_eq!((ds.train.ic.len(), ds.test.ic.len()), (80, 20));
        assert_eq!((ds.train.bulk.len(), ds.test.bulk.len()), (1600, 400));
        assert_eq!((ds.train.bc.len(), ds.test.bc.len()), (64, 16));
    }

    #[test]
    fn sampling_is_deterministic_and_in_domain() {
        let p = AdvectionProblem::new(5.0).unwrap();
        let cfg = SamplingConfig::default();
        let a = sample_dataset(&p, 42, &cfg).unwrap();
        assert_eq!(a, sample_dataset(&p, 42, &cfg).unwrap());
        assert_ne!(a, sample_dataset(&p, 43, &cfg).unwrap());
        for set in [&a.train, &a.test] {
            for &(x, target) in &set.ic {
                assert!((0.0..TAU).contains(&x));
                assert_eq!(target, x.sin());
            }
            for &(x, t) in &set.bulk {
                assert!((0.0..TAU).contains(&x) && (0.0..=1.0).contains(&t));
            }
            assert!(set.bc.iter().all(|t| (0.0..=1.0).contains(t)));
        }
    }

    #[test]
    fn points_are_distinct() {
        let p = AdvectionProblem::new(1.0).unwrap();
        let ds = sample_dataset(&p, 9, &SamplingConfig::default()).unwrap();
        let mut bulk: Vec<_> = ds.train.bulk.iter().chain(&ds.test.bulk).map(|&(x, t)| (x.to_bits(), t.to_bits())).collect();
        bulk.sort_unstable();
        bulk.dedup();
        assert_eq!(bulk.len(), 2000);
    }

    #[test]
    fn oversized_request_is_rejected() {
        let p = AdvectionProblem::new(1.0).unwrap();
        let cfg = SamplingConfig { n_b: 101, ..SamplingConfig::default() };
        assert!(matches!(sample_dataset(&p, 0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_positive_speed_rejected() {
        assert!(AdvectionProblem::new(0.0).is_err());
        assert!(AdvectionProblem::new(-1.0).is_err());
    }
}
