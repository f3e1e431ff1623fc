//! Fused forward-over-reverse evaluation of the PINN loss over whole point sets.
//!
//! All points travel through the network together as matrix columns. Bulk
//! points carry one extra tangent column holding the directional derivative
//! along `(β, 1)` in `(x, t)`, which is exactly the residual `u_t + β u_x`.
//! The reverse pass differentiates through those tangent columns, giving the
//! same result as recording dual arithmetic on a scalar tape, at GEMM speed.
//!
//! Column layout of every activation matrix:
//!
//! ```text
//! [ bulk values | ic values | bc at x=0 | bc at x=2π | bulk tangents ]
//! ```

use crate::error::{ensure_all_finite, Error, Result};
use crate::kernels::{gemm_nn, gemm_nt, gemm_tn, tanh_inplace};

use super::loss::LossBreakdown;
use super::problem::{AdvectionProblem, PointSet, X_PERIOD};
use super::{LayerShape, MlpArchitecture};

/// Points per chunk for value-only prediction.
const PREDICT_CHUNK: usize = 2048;

#[derive(Debug, Clone)]
pub struct BatchedEvaluator {
    arch: MlpArchitecture,
    layers: Vec<LayerShape>,
    problem: AdvectionProblem,
}

struct Columns {
    /// Columns carrying values.
    values: usize,
    /// Leading value columns that also carry a tangent column.
    tangents: usize,
}

impl Columns {
    fn total(&self) -> usize {
        self.values + self.tangents
    }
}

/// Activations retained for the reverse pass.
struct ForwardTrace {
    /// `acts[l]` is the input of layer `l` (`fan_in × cols`); the last entry
    /// is the network output (`1 × cols`).
    acts: Vec<Vec<f64>>,
    /// Pre-activation tangents of each hidden layer (`fan_out × tangents`).
    pre_tangents: Vec<Vec<f64>>,
}

impl BatchedEvaluator {
    pub fn new(arch: MlpArchitecture, problem: AdvectionProblem) -> Self {
        let layers = arch.layers();
        Self { arch, layers, problem }
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn problem(&self) -> &AdvectionProblem {
        &self.problem
    }

    /// Runs the layers over `input` (2 × cols). Tangent columns get no bias
    /// and are pushed through `tanh` by the chain rule.
    fn forward(&self, params: &[f64], input: Vec<f64>, cols: &Columns, keep: bool) -> ForwardTrace {
        let n = cols.total();
        let nv = cols.values;
        let nt = cols.tangents;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_tangents = Vec::new();
        let mut current = input;
        for (l, layer) in self.layers.iter().enumerate() {
            let hidden = l + 1 < self.layers.len();
            let mut out = vec![0.0; layer.fan_out * n];
            gemm_nn(
                layer.fan_out,
                layer.fan_in,
                n,
                1.0,
                &params[layer.weights..layer.biases],
                &current,
                0.0,
                &mut out,
            );
            let mut pre_tan = if hidden && nt > 0 { vec![0.0; layer.fan_out * nt] } else { Vec::new() };
            for (o, row) in out.chunks_exact_mut(n).enumerate() {
                let b = params[layer.biases + o];
                let (vals, tans) = row.split_at_mut(nv);
                for v in vals.iter_mut() {
                    *v += b;
                }
                if hidden {
                    tanh_inplace(vals);
                    if nt > 0 {
                        pre_tan[o * nt..(o + 1) * nt].copy_from_slice(tans);
                    }
                    for (tan, a) in tans.iter_mut().zip(&vals[..nt]) {
                        *tan *= 1.0 - a * a;
                    }
                }
            }
            if keep {
                acts.push(current);
                if hidden {
                    pre_tangents.push(pre_tan);
                }
            }
            current = out;
        }
        acts.push(current);
        ForwardTrace { acts, pre_tangents }
    }

    fn loss_input(&self, points: &PointSet) -> (Vec<f64>, Columns) {
        let nb = points.bulk.len();
        let ni = points.ic.len();
        let nc = points.bc.len();
        let cols = Columns { values: nb + ni + 2 * nc, tangents: nb };
        let n = cols.total();
        let mut input = vec![0.0; 2 * n];
        let (xs, ts) = input.split_at_mut(n);
        for (j, &(x, t)) in points.bulk.iter().enumerate() {
            xs[j] = x;
            ts[j] = t;
            xs[cols.values + j] = self.problem.beta;
            ts[cols.values + j] = 1.0;
        }
        for (i, &(x, _)) in points.ic.iter().enumerate() {
            xs[nb + i] = x;
        }
        for (k, &t) in points.bc.iter().enumerate() {
            xs[nb + ni + k] = 0.0;
            ts[nb + ni + k] = t;
            xs[nb + ni + nc + k] = X_PERIOD;
            ts[nb + ni + nc + k] = t;
        }
        (input, cols)
    }

    fn breakdown(&self, points: &PointSet, output: &[f64], cols: &Columns) -> LossBreakdown {
        let nb = points.bulk.len();
        let ni = points.ic.len();
        let nc = points.bc.len();
        let mut ic = 0.0;
        for (i, &(_, target)) in points.ic.iter().enumerate() {
            let r = output[nb + i] - target;
            ic += r * r;
        }
        let mut bulk = 0.0;
        for r in &output[cols.values..cols.values + nb] {
            bulk += r * r;
        }
        let mut bc = 0.0;
        for k in 0..nc {
            let d = output[nb + ni + k] - output[nb + ni + nc + k];
            bc += d * d;
        }
        LossBreakdown::new(ic / ni as f64, bulk / nb as f64, bc / nc as f64)
    }

    fn check(&self, params: &[f64], points: &PointSet) -> Result<()> {
        self.arch.check_params(params.len())?;
        points.check_nonempty()
    }

    pub fn loss(&self, params: &[f64], points: &PointSet) -> Result<LossBreakdown> {
        self.check(params, points)?;
        let (input, cols) = self.loss_input(points);
        let trace = self.forward(params, input, &cols, false);
        let loss = self.breakdown(points, trace.acts.last().unwrap(), &cols);
        if !loss.is_finite() {
            return Err(Error::Divergence { value: loss.total, step: 0 });
        }
        Ok(loss)
    }

    /// Loss breakdown and the gradient of its total, written into `grad`.
    pub fn loss_and_grad(&self, params: &[f64], points: &PointSet, grad: &mut [f64]) -> Result<LossBreakdown> {
        self.check(params, points)?;
        if grad.len() != params.len() {
            return Err(Error::config("gradient buffer length differs from parameter count"));
        }
        let (input, cols) = self.loss_input(points);
        let trace = self.forward(params, input, &cols, true);
        let output = trace.acts.last().unwrap();
        let loss = self.breakdown(points, output, &cols);
        if !loss.is_finite() {
            return Err(Error::Divergence { value: loss.total, step: 0 });
        }

        let n = cols.total();
        let nv = cols.values;
        let nt = cols.tangents;
        let nb = points.bulk.len();
        let ni = points.ic.len();
        let nc = points.bc.len();

        // Adjoint of the output row.
        let mut d_out = vec![0.0; n];
        for (i, &(_, target)) in points.ic.iter().enumerate() {
            d_out[nb + i] = 2.0 * (output[nb + i] - target) / ni as f64;
        }
        for k in 0..nc {
            let d = 2.0 * (output[nb + ni + k] - output[nb + ni + nc + k]) / nc as f64;
            d_out[nb + ni + k] = d;
            d_out[nb + ni + nc + k] = -d;
        }
        for j in 0..nb {
            d_out[nv + j] = 2.0 * output[nv + j] / nb as f64;
        }

        let mut delta = d_out;
        for l in (0..self.layers.len()).rev() {
            let layer = self.layers[l];
            let input = &trace.acts[l];
            gemm_nt(
                layer.fan_out,
                n,
                layer.fan_in,
                1.0,
                &delta,
                input,
                0.0,
                &mut grad[layer.weights..layer.biases],
            );
            for (o, row) in delta.chunks_exact(n).enumerate() {
                grad[layer.biases + o] = row[..nv].iter().sum();
            }
            if l == 0 {
                break;
            }
            let mut d_in = vec![0.0; layer.fan_in * n];
            gemm_tn(
                layer.fan_in,
                layer.fan_out,
                n,
                1.0,
                &params[layer.weights..layer.biases],
                &delta,
                0.0,
                &mut d_in,
            );
            // Through the tanh of the previous hidden layer.
            let act = input;
            let pre_tan = &trace.pre_tangents[l - 1];
            for (r, (d_row, a_row)) in d_in.chunks_exact_mut(n).zip(act.chunks_exact(n)).enumerate() {
                let (d_vals, d_tans) = d_row.split_at_mut(nv);
                let a_vals = &a_row[..nv];
                let h_tans = &pre_tan[r * nt..(r + 1) * nt];
                for j in 0..nt {
                    let a = a_vals[j];
                    let s = 1.0 - a * a;
                    let dt = d_tans[j];
                    d_vals[j] = s * (d_vals[j] - 2.0 * a * dt * h_tans[j]);
                    d_tans[j] = s * dt;
                }
                for (d, a) in d_vals[nt..].iter_mut().zip(&a_vals[nt..]) {
                    *d *= 1.0 - a * a;
                }
            }
            delta = d_in;
        }
        ensure_all_finite(grad, 0)?;
        Ok(loss)
    }

    /// Network values at `points`, in order.
    pub fn predict(&self, params: &[f64], points: &[(f64, f64)]) -> Result<Vec<f64>> {
        self.arch.check_params(params.len())?;
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(PREDICT_CHUNK) {
            let n = chunk.len();
            let mut input = vec![0.0; 2 * n];
            for (j, &(x, t)) in chunk.iter().enumerate() {
                input[j] = x;
                input[n + j] = t;
            }
            let cols = Columns { values: n, tangents: 0 };
            let trace = self.forward(params, input, &cols, false);
            out.extend_from_slice(trace.acts.last().unwrap());
        }
        Ok(out)
    }
}
