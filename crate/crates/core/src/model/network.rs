use crate::autodiff::Scalar;
use crate::error::Result;

use super::MlpArchitecture;

/// Evaluates the network on one input point for any scalar type.
///
/// Assumes `params.len() == arch.param_count()`.
pub fn forward_generic<S: Scalar>(arch: &MlpArchitecture, params: &[S], x: S, t: S) -> S {
    let layers = arch.layers();
    let mut act = vec![x, t];
    let mut next = Vec::with_capacity(arch.max_width());
    for (l, layer) in layers.iter().enumerate() {
        next.clear();
        let hidden = l + 1 < layers.len();
        for o in 0..layer.fan_out {
            let row = &params[layer.weights + o * layer.fan_in..layer.weights + (o + 1) * layer.fan_in];
            let mut z = params[layer.biases + o];
            for (w, a) in row.iter().zip(&act) {
                z = z + *w * *a;
            }
            next.push(if hidden { z.tanh() } else { z });
        }
        std::mem::swap(&mut act, &mut next);
    }
    act[0]
}

/// Plain `f64` evaluation with a shape check.
pub fn forward(arch: &MlpArchitecture, params: &[f64], x: f64, t: f64) -> Result<f64> {
    arch.check_params(params.len())?;
    Ok(forward_generic(arch, params, x, t))
}
