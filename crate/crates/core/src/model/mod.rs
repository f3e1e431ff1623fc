//! The tanh MLP and the linear-advection PINN problem.

mod arch;
pub mod batched;
mod grid;
mod loss;
pub mod network;
mod problem;

pub use arch::{init_params, param_count, LayerShape, MlpArchitecture, ParamVector};
pub use batched::BatchedEvaluator;
pub use grid::{grid_mse, MseGrid};
pub use loss::{pinn_loss, pinn_loss_terms, LossBreakdown, LossTerms};
pub use network::forward;
pub use problem::{
    exact_solution, sample_dataset, AdvectionProblem, PointSet, SamplingConfig, TrainingSet, UniformGrid,
    T_END, X_PERIOD,
};
