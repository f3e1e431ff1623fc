//! Exact derivatives for PINN losses.
//!
//! Input derivatives (∂u/∂x, ∂u/∂t) come from pushing [`DualScalar`]s through
//! the network; parameter gradients come from a reverse sweep over a [`Tape`]
//! on which those dual computations were recorded. A fresh tape is built for
//! every evaluation.
//!
//! This generic engine is the reference implementation. Training uses the
//! fused batched evaluator in [`crate::model::batched`], which is checked
//! against this module and against [`finite_diff_gradient`].

mod dual;
mod scalar;
mod tape;

pub use dual::DualScalar;
pub use scalar::{mean, sum, Scalar};
pub use tape::{OpKind, Tape, TapeNode, Var};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{network, MlpArchitecture};

/// Network output together with its exact input derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputDerivs<S> {
    pub u: S,
    pub du_dx: S,
    pub du_dt: S,
}

/// Evaluates `u(x, t)`, `∂u/∂x` and `∂u/∂t` with two dual-number passes
/// (tangent seeded on x, then on t).
pub fn eval_with_input_derivs<S: Scalar>(
    arch: &MlpArchitecture,
    params: &[S],
    x: f64,
    t: f64,
) -> Result<InputDerivs<S>> {
    arch.check_params(params.len())?;
    if !x.is_finite() || !t.is_finite() {
        return Err(Error::config(format!("non-finite input point ({x}, {t})")));
    }
    let lifted: Vec<DualScalar<S>> = params.iter().map(|&p| DualScalar::lift(p)).collect();
    let xs = S::constant(x);
    let ts = S::constant(t);
    let along_x = network::forward_generic(arch, &lifted, DualScalar::variable(xs), DualScalar::lift(ts));
    let along_t = network::forward_generic(arch, &lifted, DualScalar::lift(xs), DualScalar::variable(ts));
    Ok(InputDerivs { u: along_x.value, du_dx: along_x.tangent, du_dt: along_t.tangent })
}

/// Loss value and its gradient with respect to every parameter.
///
/// `loss` receives the parameters as tape variables and may call
/// [`eval_with_input_derivs`] internally.
pub fn value_and_grad<F>(params: &[f64], loss: F) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Var<'t>>,
{
    let tape = Tape::with_capacity(params.len() * 64);
    let leaves: Vec<Var<'_>> = params.iter().map(|&p| tape.leaf(p)).collect();
    let out = loss(&leaves)?;
    let value = ensure_finite(out.value(), 0)?;
    let adj = tape.adjoints(&out);
    let grad = leaves
        .iter()
        .map(|v| v.index().map_or(0.0, |i| adj[i as usize]))
        .collect();
    Ok((value, grad))
}

/// Gradient of `loss` at `params` by reverse sweep.
pub fn grad_params<F>(params: &[f64], loss: F) -> Result<Vec<f64>>
where
    F: for<'t> FnOnce(&[Var<'t>]) -> Result<Var<'t>>,
{
    value_and_grad(params, loss).map(|(_, g)| g)
}

/// Central-difference gradient estimate, one coordinate at a time.
pub fn finite_diff_gradient<F>(mut loss: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = ensure_finite(loss(&probe)?, i)?;
        probe[i] = orig - h;
        let down = ensure_finite(loss(&probe)?, i)?;
        probe[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn zero_network_has_zero_output_and_derivatives() {
        let arch = MlpArchitecture::new(vec![2, 5, 3, 1]).unwrap();
        let params = vec![0.0; arch.param_count()];
        let d = eval_with_input_derivs(&arch, &params, 1.3, 0.4).unwrap();
        assert_eq!((d.u, d.du_dx, d.du_dt), (0.0, 0.0, 0.0));
    }

    #[test]
    fn affine_network_derivatives() {
        let arch = MlpArchitecture::new(vec![2, 1]).unwrap();
        let params = [2.0, 3.0, 1.0];
        let (x, t) = (0.25, -1.5);
        let d = eval_with_input_derivs(&arch, &params, x, t).unwrap();
        assert_eq!(d.u, 2.0 * x + 3.0 * t + 1.0);
        assert_eq!((d.du_dx, d.du_dt), (2.0, 3.0));
    }

    #[test]
    fn input_derivatives_match_central_differences() {
        let arch = MlpArchitecture::new(vec![2, 25, 25, 1]).unwrap();
        let params = init_params(&arch, 11);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..10 {
            let x = rng.random_range(0.0..std::f64::consts::TAU);
            let t = rng.random_range(0.0..1.0);
            let d = eval_with_input_derivs(&arch, &params, x, t).unwrap();
            let f = |x: f64, t: f64| network::forward(&arch, &params, x, t).unwrap();
            let fd_x = (f(x + h, t) - f(x - h, t)) / (2.0 * h);
            let fd_t = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
            assert!(rel_err(d.du_dx, fd_x) < 1e-6, "{} vs {}", d.du_dx, fd_x);
            assert!(rel_err(d.du_dt, fd_t) < 1e-6, "{} vs {}", d.du_dt, fd_t);
            assert_eq!(d.u, f(x, t));
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let arch = MlpArchitecture::new(vec![2, 3, 1]).unwrap();
        let err = eval_with_input_derivs(&arch, &[0.0; 4], 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn quadratic_gradient_is_identity() {
        let params = [0.5, -2.0, 3.25];
        let g = grad_params(&params, |p| Ok(sum(p.iter().map(|v| v.square())) * Var::constant(0.5))).unwrap();
        assert_eq!(g, params.to_vec());
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = grad_params(&[1.0, 2.0], |_| Ok(Var::constant(4.0))).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_loss_is_divergence() {
        let err = grad_params(&[0.0], |p| Ok(p[0] / p[0])).unwrap_err();
        assert!(err.is_divergence());
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_diff_gradient(|p| Ok(p[0] * p[0]), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
        let g = finite_diff_gradient(|p| Ok(p[0].sin()), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9);
        assert!(finite_diff_gradient(|p| Ok(p[0]), &[0.0], 0.0).is_err());
        assert!(finite_diff_gradient(|_| Ok(f64::NAN), &[0.0], 1e-3).unwrap_err().is_divergence());
    }

    /// Each elementary op: dual tangent and tape partial against the closed form.
    #[test]
    fn elementary_ops_match_closed_form() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
        for _ in 0..100 {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(0.5..2.0);
            type D = DualScalar<f64>;
            let checks: [(f64, f64); 5] = [
                ((D::variable(a) + D::lift(b)).tangent, 1.0),
                ((D::variable(a) * D::lift(b)).tangent, b),
                (D::variable(a).tanh().tangent, 1.0 - a.tanh().powi(2)),
                (D::variable(a).sin().tangent, a.cos()),
                (D::variable(a).square().tangent, 2.0 * a),
            ];
            for (got, want) in checks {
                assert!(rel_err(got, want) < 1e-12, "{got} vs {want}");
            }

            let tape = Tape::new();
            let x = tape.leaf(a);
            let y = tape.leaf(b);
            let ix = x.index().unwrap() as usize;
            let iy = y.index().unwrap() as usize;
            let cases: Vec<(Var<'_>, f64, f64)> = vec![
                (x + y, 1.0, 1.0),
                (x * y, b, a),
                (x / y, 1.0 / b, -a / (b * b)),
                (x.tanh(), 1.0 - a.tanh().powi(2), 0.0),
                (x.sin(), a.cos(), 0.0),
                (x.square(), 2.0 * a, 0.0),
            ];
            for (out, dx, dy) in cases {
                let adj = tape.adjoints(&out);
                assert!(rel_err(adj[ix], dx) < 1e-12 || (adj[ix] - dx).abs() < 1e-300);
                assert!(rel_err(adj[iy], dy) < 1e-12 || (adj[iy] - dy).abs() < 1e-300);
            }
        }
    }
}
