use std::collections::VecDeque;

use crate::error::{ensure_finite, Error, Result};
use crate::kernels::{axpy, dot, max_abs, norm};

use super::{EpochReport, LbfgsParams, Objective, Optimizer, OptimizerKind};

/// Pairs with `⟨s, y⟩` at or below this are skipped. Without a line search
/// the step length is fixed, and near-flat pairs late in training can inflate
/// the inverse-Hessian scale enough to throw the iterate off.
pub const MIN_CURVATURE: f64 = 1e-10;

/// One stored `(s, y)` pair with `rho = 1/⟨y, s⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
}

/// Why an LBFGS epoch ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsStop {
    MaxIter,
    MaxEval,
    /// Largest gradient component at or below `tolerance_grad`.
    GradConverged,
    /// Step norm at or below `tolerance_change`.
    StepConverged,
    /// The two-loop direction does not point downhill.
    NotDescent,
}

/// Two-loop recursion: returns `d = −H·grad`, where `H` is the inverse
/// Hessian estimate seeded by `γI` with `γ = ⟨s,y⟩/⟨y,y⟩` of the newest pair.
pub fn lbfgs_direction(pairs: &[CurvaturePair], grad: &[f64]) -> Vec<f64> {
    let gamma = pairs.last().map_or(1.0, |p| 1.0 / (p.rho * dot(&p.y, &p.y)));
    direction_with_scale(pairs, gamma, grad)
}

fn direction_with_scale(pairs: &[CurvaturePair], gamma: f64, grad: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut alpha = vec![0.0; pairs.len()];
    for (i, p) in pairs.iter().enumerate().rev() {
        alpha[i] = dot(&p.s, &q) * p.rho;
        axpy(-alpha[i], &p.y, &mut q);
    }
    for v in q.iter_mut() {
        *v *= gamma;
    }
    for (i, p) in pairs.iter().enumerate() {
        let beta = dot(&p.y, &q) * p.rho;
        axpy(alpha[i] - beta, &p.s, &mut q);
    }
    q
}

/// Limited-memory BFGS. Each epoch is one outer call: an evaluation at the
/// current point followed by up to `max_iter` iterations. History, the last
/// direction and step length persist across epochs.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    lr: f64,
    params: LbfgsParams,
    history: VecDeque<CurvaturePair>,
    h_diag: f64,
    direction: Vec<f64>,
    step_len: f64,
    prev_grad: Option<Vec<f64>>,
    total_iters: usize,
    total_evals: usize,
    grad: Vec<f64>,
}

impl Lbfgs {
    pub fn new(lr: f64, params: LbfgsParams, dim: usize) -> Self {
        Self {
            lr,
            params,
            history: VecDeque::with_capacity(params.history_size),
            h_diag: 1.0,
            direction: vec![0.0; dim],
            step_len: lr,
            prev_grad: None,
            total_iters: 0,
            total_evals: 0,
            grad: vec![0.0; dim],
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> impl Iterator<Item = &CurvaturePair> {
        self.history.iter()
    }

    pub fn total_iterations(&self) -> usize {
        self.total_iters
    }

    pub fn total_evaluations(&self) -> usize {
        self.total_evals
    }

    fn evaluate(&mut self, objective: &mut dyn Objective, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let loss = objective.eval(x, grad)?;
        self.total_evals += 1;
        ensure_finite(loss, self.total_iters)?;
        Ok(loss)
    }

    fn push_pair(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let ys = dot(&y, &s);
        if ys > MIN_CURVATURE {
            if self.history.len() == self.params.history_size {
                self.history.pop_front();
            }
            self.h_diag = ys / dot(&y, &y);
            self.history.push_back(CurvaturePair { s, y, rho: 1.0 / ys });
        }
    }

    fn run_epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective, grad: &mut [f64]) -> Result<EpochReport> {
        let p = self.params;
        let max_eval = p.max_iter * 5 / 4;
        let mut report = EpochReport::default();

        let mut loss = self.evaluate(objective, params, grad)?;
        let mut evals = 1;
        if max_abs(grad) <= p.tolerance_grad {
            report.evaluations = evals;
            report.lbfgs_stop = Some(LbfgsStop::GradConverged);
            return Ok(report);
        }

        let mut n_iter = 0;
        let stop = loop {
            n_iter += 1;
            self.total_iters += 1;

            if self.total_iters == 1 {
                self.direction = grad.iter().map(|g| -g).collect();
                self.history.clear();
                self.h_diag = 1.0;
            } else {
                let prev = self.prev_grad.as_ref().ok_or_else(|| Error::Internal("missing previous gradient".into()))?;
                let y: Vec<f64> = grad.iter().zip(prev).map(|(g, pg)| g - pg).collect();
                let s: Vec<f64> = self.direction.iter().map(|d| d * self.step_len).collect();
                self.push_pair(s, y);
                let pairs = self.history.make_contiguous();
                self.direction = direction_with_scale(pairs, self.h_diag, grad);
            }
            match self.prev_grad.as_mut() {
                Some(pg) => pg.copy_from_slice(grad),
                None => self.prev_grad = Some(grad.to_vec()),
            }

            self.step_len = if self.total_iters == 1 {
                let l1: f64 = grad.iter().map(|g| g.abs()).sum();
                (1.0f64).min(1.0 / l1) * self.lr
            } else {
                self.lr
            };

            let gtd = dot(grad, &self.direction);
            if !(gtd < 0.0) {
                break LbfgsStop::NotDescent;
            }

            let mut grad_small = false;
            if p.line_search {
                let x0 = params.to_vec();
                let d = std::mem::take(&mut self.direction);
                let t0 = self.step_len;
                let ls = strong_wolfe(self, objective, &x0, t0, &d, loss, grad, gtd);
                self.direction = d;
                let (f, t, ls_evals) = ls?;
                loss = f;
                self.step_len = t;
                params.copy_from_slice(&x0);
                axpy(t, &self.direction, params);
                evals += ls_evals;
                grad_small = max_abs(grad) <= p.tolerance_grad;
            } else {
                axpy(self.step_len, &self.direction, params);
                if n_iter != p.max_iter {
                    loss = self.evaluate(objective, params, grad)?;
                    evals += 1;
                    grad_small = max_abs(grad) <= p.tolerance_grad;
                }
            }
            report.steps += 1;

            if n_iter == p.max_iter {
                break LbfgsStop::MaxIter;
            }
            if evals >= max_eval {
                break LbfgsStop::MaxEval;
            }
            if grad_small {
                break LbfgsStop::GradConverged;
            }
            if norm(&self.direction) * self.step_len.abs() <= p.tolerance_change {
                break LbfgsStop::StepConverged;
            }
        };
        report.evaluations = evals;
        report.lbfgs_stop = Some(stop);
        Ok(report)
    }
}

impl Optimizer for Lbfgs {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Lbfgs
    }

    fn epoch(&mut self, params: &mut [f64], objective: &mut dyn Objective) -> Result<EpochReport> {
        let mut grad = std::mem::take(&mut self.grad);
        let out = self.run_epoch(params, objective, &mut grad);
        self.grad = grad;
        out
    }
}

fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: Option<(f64, f64)>) -> f64 {
    let (lo, hi) = bounds.unwrap_or(if x1 <= x2 { (x1, x2) } else { (x2, x1) });
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 {
        let d2 = d2_sq.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        min_pos.max(lo).min(hi)
    } else {
        (lo + hi) / 2.0
    }
}

struct Probe {
    t: f64,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

/// Strong-Wolfe line search along `d` from `x0`. On return `grad` holds the
/// gradient at the accepted point; yields `(loss, step, evaluations)`.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe(
    opt: &mut Lbfgs,
    objective: &mut dyn Objective,
    x0: &[f64],
    t_init: f64,
    d: &[f64],
    f0: f64,
    grad: &mut [f64],
    gtd0: f64,
) -> Result<(f64, f64, usize)> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    const MAX_LS: usize = 25;
    let tol_change = opt.params.tolerance_change;
    let d_norm = max_abs(d);

    let mut trial = vec![0.0; x0.len()];
    let mut probe = |opt: &mut Lbfgs, objective: &mut dyn Objective, t: f64| -> Result<Probe> {
        trial.copy_from_slice(x0);
        axpy(t, d, &mut trial);
        let mut g = vec![0.0; x0.len()];
        let f = opt.evaluate(objective, &trial, &mut g)?;
        let gtd = dot(&g, d);
        Ok(Probe { t, f, g, gtd })
    };

    let mut evals = 1;
    let mut new = probe(opt, objective, t_init)?;
    let mut prev = Probe { t: 0.0, f: f0, g: grad.to_vec(), gtd: gtd0 };
    let mut ls_iter = 0;
    let mut done = false;

    // bracketing phase
    let mut bracket: Vec<Probe> = loop {
        if new.f > f0 + C1 * new.t * gtd0 || (ls_iter > 1 && new.f >= prev.f) {
            break vec![prev, new];
        }
        if new.gtd.abs() <= -C2 * gtd0 {
            done = true;
            break vec![new];
        }
        if new.gtd >= 0.0 {
            break vec![prev, new];
        }
        let min_step = new.t + 0.01 * (new.t - prev.t);
        let max_step = new.t * 10.0;
        let t = cubic_interpolate(prev.t, prev.f, prev.gtd, new.t, new.f, new.gtd, Some((min_step, max_step)));
        prev = new;
        new = probe(opt, objective, t)?;
        evals += 1;
        ls_iter += 1;
        if ls_iter == MAX_LS {
            let start = Probe { t: 0.0, f: f0, g: grad.to_vec(), gtd: gtd0 };
            break vec![start, new];
        }
    };

    // zoom phase
    let mut insuf_progress = false;
    let (mut low, mut high) = if bracket.len() == 2 && bracket[0].f > bracket[1].f { (1, 0) } else { (0, 1) };
    while !done && ls_iter < MAX_LS && bracket.len() == 2 {
        let (b_lo, b_hi) = (bracket[0].t.min(bracket[1].t), bracket[0].t.max(bracket[1].t));
        if (bracket[1].t - bracket[0].t).abs() * d_norm < tol_change {
            break;
        }
        let mut t = cubic_interpolate(
            bracket[0].t,
            bracket[0].f,
            bracket[0].gtd,
            bracket[1].t,
            bracket[1].f,
            bracket[1].gtd,
            None,
        );
        let eps = 0.1 * (b_hi - b_lo);
        if (b_hi - t).min(t - b_lo) < eps {
            if insuf_progress || t >= b_hi || t <= b_lo {
                t = if (t - b_hi).abs() < (t - b_lo).abs() { b_hi - eps } else { b_lo + eps };
                insuf_progress = false;
            } else {
                insuf_progress = true;
            }
        } else {
            insuf_progress = false;
        }

        let p = probe(opt, objective, t)?;
        evals += 1;
        ls_iter += 1;
        if p.f > f0 + C1 * t * gtd0 || p.f >= bracket[low].f {
            bracket[high] = p;
            (low, high) = if bracket[0].f <= bracket[1].f { (0, 1) } else { (1, 0) };
        } else {
            if p.gtd.abs() <= -C2 * gtd0 {
                done = true;
            } else if p.gtd * (bracket[high].t - bracket[low].t) >= 0.0 {
                bracket.swap(high, low);
            }
            bracket[low] = p;
        }
    }
    let best = if bracket.len() == 1 { bracket.swap_remove(0) } else { bracket.swap_remove(low) };
    grad.copy_from_slice(&best.g);
    Ok((best.f, best.t, evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnObjective;

    #[test]
    fn flat_pairs_are_skipped() {
        let mut opt = Lbfgs::new(1.0, LbfgsParams::default(), 2);
        opt.push_pair(vec![1e-6, 0.0], vec![1e-5, 0.0]);
        assert_eq!(opt.history_len(), 0);
        opt.push_pair(vec![1e-3, 0.0], vec![2e-3, 0.0]);
        assert_eq!(opt.history_len(), 1);
        assert_eq!(opt.h_diag, 0.5);
    }

    fn quadratic(diag: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) -> Result<f64> {
        move |x: &[f64], g: &mut [f64]| {
            let mut f = 0.0;
            for i in 0..x.len() {
                g[i] = diag[i] * x[i];
                f += 0.5 * diag[i] * x[i] * x[i];
            }
            Ok(f)
        }
    }

    #[test]
    fn empty_history_gives_steepest_descent() {
        let g = [1.0, -2.0, 0.5];
        assert_eq!(lbfgs_direction(&[], &g), vec![-1.0, 2.0, -0.5]);
    }

    #[test]
    fn single_pair_secant_condition() {
        // H·y = s must hold for the newest pair
        let s = vec![0.3, -0.1, 0.7];
        let y = vec![1.2, 0.4, 0.9];
        let pair = CurvaturePair { rho: 1.0 / dot(&s, &y), s: s.clone(), y: y.clone() };
        let d = lbfgs_direction(std::slice::from_ref(&pair), &y);
        for i in 0..3 {
            assert!((d[i] + s[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn line_search_minimises_quadratic() {
        let diag = vec![1.0, 3.0, 10.0, 0.5];
        let mut obj = FnObjective(quadratic(diag));
        let params = LbfgsParams { line_search: true, tolerance_grad: 1e-12, tolerance_change: 1e-20, ..Default::default() };
        let mut opt = Lbfgs::new(1.0, params, 4);
        let mut x = vec![1.0, -1.0, 0.5, 2.0];
        opt.epoch(&mut x, &mut obj).unwrap();
        assert!(max_abs(&x) < 1e-8, "{x:?}");
    }

    #[test]
    fn fixed_step_converges_on_quadratic() {
        let diag = vec![1.0, 2.0, 4.0];
        let mut obj = FnObjective(quadratic(diag));
        let mut opt = Lbfgs::new(1.0, LbfgsParams::default(), 3);
        let mut x = vec![1.0, 1.0, 1.0];
        for _ in 0..5 {
            opt.epoch(&mut x, &mut obj).unwrap();
        }
        assert!(max_abs(&x) < 1e-4, "{x:?}");
    }

    #[test]
    fn history_is_bounded() {
        let diag: Vec<f64> = (1..=30).map(|i| 1.0 + i as f64 * 0.7).collect();
        let mut obj = FnObjective(move |x: &[f64], g: &mut [f64]| {
            // quartic keeps curvature pairs accepted for a long time
            let mut f = 0.0;
            for i in 0..x.len() {
                g[i] = diag[i] * x[i] + x[i].powi(3);
                f += 0.5 * diag[i] * x[i] * x[i] + 0.25 * x[i].powi(4);
            }
            Ok(f)
        });
        let params = LbfgsParams { history_size: 3, tolerance_grad: 0.0, tolerance_change: 0.0, ..Default::default() };
        let mut opt = Lbfgs::new(0.05, params, 30);
        let mut x = vec![1.0; 30];
        for _ in 0..3 {
            opt.epoch(&mut x, &mut obj).unwrap();
            assert!(opt.history_len() <= 3);
        }
        assert_eq!(opt.history_len(), 3);
    }

    #[test]
    fn converged_start_takes_no_step() {
        let mut obj = FnObjective(quadratic(vec![1.0, 1.0]));
        let mut opt = Lbfgs::new(1.0, LbfgsParams::default(), 2);
        let mut x = vec![0.0, 0.0];
        let r = opt.epoch(&mut x, &mut obj).unwrap();
        assert!(r.converged());
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn default_epoch_uses_twenty_evaluations() {
        let mut obj = FnObjective(move |x: &[f64], g: &mut [f64]| {
            g[0] = x[0].cos() + 2.0;
            Ok(x[0].sin() + 2.0 * x[0])
        });
        let mut opt = Lbfgs::new(1e-3, LbfgsParams::default(), 1);
        let mut x = vec![0.0];
        let r = opt.epoch(&mut x, &mut obj).unwrap();
        assert_eq!((r.evaluations, r.steps, r.lbfgs_stop), (20, 20, Some(LbfgsStop::MaxIter)));
    }

    #[test]
    fn cubic_interpolation_finds_quadratic_minimum() {
        // f = (x - 0.3)², exact in the cubic model
        let f = |x: f64| (x - 0.3) * (x - 0.3);
        let g = |x: f64| 2.0 * (x - 0.3);
        let t = cubic_interpolate(0.0, f(0.0), g(0.0), 1.0, f(1.0), g(1.0), None);
        assert!((t - 0.3).abs() < 1e-12);
    }
}
