use crate::error::{Error, Result};

use super::batched::BatchedEvaluator;
use super::problem::{exact_solution, AdvectionProblem, UniformGrid};
use super::MlpArchitecture;

/// Full-domain error reference: grid points and exact values, computed once
/// per wave speed.
#[derive(Debug, Clone)]
pub struct MseGrid {
    grid: UniformGrid,
    points: Vec<(f64, f64)>,
    exact: Vec<f64>,
}

impl MseGrid {
    pub fn new(problem: &AdvectionProblem, grid: UniformGrid) -> Self {
        let points: Vec<(f64, f64)> = (0..grid.len()).map(|k| grid.point(k)).collect();
        let exact = points.iter().map(|&(x, t)| exact_solution(problem.beta, x, t)).collect();
        Self { grid, points, exact }
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn exact(&self) -> &[f64] {
        &self.exact
    }

    /// Mean squared error of `predicted` (in grid order) against the exact field.
    pub fn mse_of(&self, predicted: &[f64]) -> Result<f64> {
        if predicted.len() != self.exact.len() {
            return Err(Error::config("prediction length differs from grid size"));
        }
        let mut acc = 0.0;
        for (u, e) in predicted.iter().zip(&self.exact) {
            let d = u - e;
            acc += d * d;
        }
        let mse = acc / self.exact.len() as f64;
        if !mse.is_finite() {
            return Err(Error::Divergence { value: mse, step: 0 });
        }
        Ok(mse)
    }

    pub fn mse(&self, eval: &BatchedEvaluator, params: &[f64]) -> Result<f64> {
        let predicted = eval.predict(params, &self.points)?;
        self.mse_of(&predicted)
    }

    /// MSE of an arbitrary field `u(x, t)`.
    pub fn mse_fn(&self, field: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let predicted: Vec<f64> = self.points.iter().map(|&(x, t)| field(x, t)).collect();
        self.mse_of(&predicted)
    }
}

/// Mean over the whole uniform grid of `(u − sin(x − βt))²`.
pub fn grid_mse(arch: &MlpArchitecture, params: &[f64], problem: &AdvectionProblem, grid: UniformGrid) -> Result<f64> {
    let eval = BatchedEvaluator::new(arch.clone(), *problem);
    MseGrid::new(problem, grid).mse(&eval, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_field_has_zero_error() {
        let p = AdvectionProblem::new(5.0).unwrap();
        let g = MseGrid::new(&p, UniformGrid::REFERENCE);
        assert_eq!(g.mse_fn(|x, t| exact_solution(5.0, x, t)).unwrap(), 0.0);
    }

    #[test]
    fn zero_field_has_half() {
        for beta in [1.0, 5.0, 15.0, 30.0] {
            let p = AdvectionProblem::new(beta).unwrap();
            let g = MseGrid::new(&p, UniformGrid::REFERENCE);
            assert!((g.mse_fn(|_, _| 0.0).unwrap() - 0.5).abs() < 1e-14);
        }
        // The zero network gives the same.
        let arch = MlpArchitecture::small();
        let p = AdvectionProblem::new(1.0).unwrap();
        let mse = grid_mse(&arch, &vec![0.0; 751], &p, UniformGrid::REFERENCE).unwrap();
        assert!((mse - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_shift_gives_square() {
        let p = AdvectionProblem::new(15.0).unwrap();
        let g = MseGrid::new(&p, UniformGrid::new(64, 20).unwrap());
        let mse = g.mse_fn(|x, t| exact_solution(15.0, x, t) + 0.3).unwrap();
        assert!((mse - 0.09).abs() < 1e-14);
    }

    #[test]
    fn output_bias_network_matches_closed_form() {
        // u ≡ c: mse = 1/2 + c² on a periodic grid.
        let arch = MlpArchitecture::new(vec![2, 3, 1]).unwrap();
        let mut params = vec![0.0; arch.param_count()];
        *params.last_mut().unwrap() = 0.2;
        let p = AdvectionProblem::new(1.0).unwrap();
        let mse = grid_mse(&arch, &params, &p, UniformGrid::REFERENCE).unwrap();
        assert!((mse - 0.54).abs() < 1e-14);
    }
}
