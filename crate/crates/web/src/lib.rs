//! Browser bindings: train a small PINN step by step, draw the exact
//! solution, and measure the curvature of a circle.

use wasm_bindgen::prelude::*;

use pinn_curvature::geom::CurvatureTracker;
use pinn_curvature::model::{exact_solution, UniformGrid};
use pinn_curvature::optim::OptimizerKind;
use pinn_curvature::runner::{ArchChoice, ExperimentConfig, RunOptions, Session};
use pinn_curvature::Result;

/// Grid used for the error curve; coarser than the reference grid so each
/// epoch stays interactive.
const DEMO_GRID: UniformGrid = UniformGrid { nx: 64, nt: 25 };

fn js_err(e: pinn_curvature::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `nt × nx` samples in t-major order.
fn grid_points(nx: usize, nt: usize) -> Result<Vec<(f64, f64)>> {
    let g = UniformGrid::new(nx, nt)?;
    Ok((0..g.len()).map(|k| g.point(k)).collect())
}

/// Native core of [`Trainer`].
pub struct DemoRun {
    session: Session,
}

impl DemoRun {
    pub fn new(optimizer: &str, beta: f64, lr: f64, seed: u64, max_epochs: usize) -> Result<Self> {
        let kind: OptimizerKind = optimizer.parse()?;
        let mut cfg = ExperimentConfig::new(kind, beta, ArchChoice::Small)
            .with_epochs(max_epochs)
            .with_seeds(seed, seed);
        if lr > 0.0 {
            cfg = cfg.with_lr(lr);
        }
        cfg.seeds = 1;
        cfg.mse_grid = DEMO_GRID;
        Ok(Self { session: Session::new(&cfg, RunOptions::default())? })
    }

    /// Trains up to `epochs` more epochs; false once the run has stopped.
    pub fn advance(&mut self, epochs: usize) -> Result<bool> {
        for _ in 0..epochs {
            if !self.session.step()? {
                return Ok(false);
            }
        }
        Ok(self.session.is_running())
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn field(&self, nx: usize, nt: usize) -> Result<Vec<f64>> {
        self.session.evaluator().predict(self.session.params(), &grid_points(nx, nt)?)
    }
}

/// A training run driven from JavaScript, one batch of epochs at a time.
#[wasm_bindgen]
pub struct Trainer {
    run: DemoRun,
}

#[wasm_bindgen]
impl Trainer {
    /// `lr <= 0` selects the reference learning rate of the optimizer.
    #[wasm_bindgen(constructor)]
    pub fn new(optimizer: &str, beta: f64, lr: f64, seed: u32, max_epochs: u32) -> std::result::Result<Trainer, JsError> {
        Ok(Self { run: DemoRun::new(optimizer, beta, lr, seed.into(), max_epochs as usize).map_err(js_err)? })
    }

    pub fn step(&mut self, epochs: u32) -> std::result::Result<bool, JsError> {
        self.run.advance(epochs as usize).map_err(js_err)
    }

    pub fn epoch(&self) -> u32 {
        self.run.session().epoch() as u32
    }

    /// "completed", "converged" or "diverged".
    pub fn status(&self) -> String {
        self.run.session().status().to_string()
    }

    pub fn running(&self) -> bool {
        self.run.session().is_running()
    }

    pub fn mse_history(&self) -> Vec<f64> {
        self.run.session().records().iter().map(|e| e.mse).collect()
    }

    pub fn loss_history(&self) -> Vec<f64> {
        self.run.session().records().iter().map(|e| e.train.total).collect()
    }

    /// κ_ω per epoch; NaN where undefined.
    pub fn kappa_history(&self) -> Vec<f64> {
        self.run.session().records().iter().map(|e| e.kappa_omega.unwrap_or(f64::NAN)).collect()
    }

    /// Network prediction on an `nt × nx` grid, t-major.
    pub fn field(&self, nx: u32, nt: u32) -> std::result::Result<Vec<f64>, JsError> {
        self.run.field(nx as usize, nt as usize).map_err(js_err)
    }
}

/// `sin(x − βt)` on an `nt × nx` grid, t-major.
#[wasm_bindgen]
pub fn exact_field(beta: f64, nx: u32, nt: u32) -> std::result::Result<Vec<f64>, JsError> {
    let points = grid_points(nx as usize, nt as usize).map_err(js_err)?;
    Ok(points.iter().map(|&(x, t)| exact_solution(beta, x, t)).collect())
}

/// κ_ω measured from three points of a circle of `radius` embedded in a
/// `dim`-dimensional space, spaced by `angle` radians.
pub fn measure_circle(radius: f64, angle: f64, dim: usize) -> Result<Option<f64>> {
    let dim = dim.max(2);
    let mut tracker = CurvatureTracker::new();
    let mut sample = None;
    for k in 0..3 {
        let phi = angle * k as f64;
        let mut w = vec![0.0; dim];
        // plane spanned by the first and last axes
        w[0] = radius * phi.cos();
        w[dim - 1] += radius * phi.sin();
        sample = tracker.push(&w)?;
    }
    Ok(sample.and_then(|s| s.kappa_omega))
}

#[wasm_bindgen]
pub fn circle_curvature(radius: f64, angle: f64, dim: u32) -> std::result::Result<f64, JsError> {
    Ok(measure_circle(radius, angle, dim as usize).map_err(js_err)?.unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_curvature_is_inverse_radius() {
        for r in [0.5, 1.0, 3.0] {
            let k = measure_circle(r, 1e-3, 751).unwrap().unwrap();
            assert!((k * r - 1.0).abs() < 1e-4, "r = {r}: {k}");
        }
    }

    #[test]
    fn demo_run_records_every_epoch() {
        let mut run = DemoRun::new("adam", 1.0, 0.0, 3, 5).unwrap();
        assert!(!run.advance(10).unwrap());
        let s = run.session();
        assert_eq!(s.records().len(), 6);
        assert!(s.records().iter().all(|e| e.mse.is_finite()));
        assert_eq!(run.field(8, 4).unwrap().len(), 32);
    }

    #[test]
    fn unknown_optimizer_is_rejected() {
        assert!(DemoRun::new("sgdm", 1.0, 0.0, 0, 5).is_err());
    }

    #[test]
    fn exact_field_starts_at_initial_condition() {
        let pts = grid_points(16, 4).unwrap();
        for (k, &(x, t)) in pts.iter().take(16).enumerate() {
            assert_eq!(t, 0.0);
            assert_eq!(exact_solution(2.0, x, t), x.sin(), "k = {k}");
        }
    }
}
