//! Property tests over the public API.

use proptest::prelude::*;

use pinn_curvature::analysis::EpochRecord;
use pinn_curvature::autodiff::{finite_diff_gradient, grad_params, DualScalar, Scalar, Tape, Var};
use pinn_curvature::geom::{cosine_similarity, kappa_omega, kappa_t};
use pinn_curvature::model::{
    init_params, pinn_loss_terms, sample_dataset, AdvectionProblem, BatchedEvaluator, LossBreakdown,
    MlpArchitecture, MseGrid, PointSet, SamplingConfig, UniformGrid,
};
use pinn_curvature::optim::{
    bbi_init, bbi_step, gd_step, lbfgs_direction, Adam, AdamParams, CurvaturePair, FnObjective, Lbfgs, LbfgsParams,
    Optimizer,
};
use pinn_curvature::runner::{format_run_csv, parse_run_csv};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vec_pair(max_dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max_dim).prop_flat_map(|d| (prop::collection::vec(-10.0..10.0f64, d), prop::collection::vec(-10.0..10.0f64, d)))
}

fn nonzero(v: &[f64]) -> bool {
    v.iter().any(|x| x.abs() > 1e-3)
}

/// A small architecture, parameters and a point set.
fn instance() -> impl Strategy<Value = (MlpArchitecture, Vec<f64>, f64, PointSet)> {
    (1usize..=6, 1usize..=6, any::<u64>(), 0.5..20.0f64, any::<u64>()).prop_map(|(w1, w2, seed, beta, data)| {
        let arch = MlpArchitecture::new(vec![2, w1, w2, 1]).unwrap();
        let mut params = init_params(&arch, seed).into_inner();
        // non-zero biases
        for (i, p) in params.iter_mut().enumerate() {
            *p += 0.1 * ((i as f64 + seed as f64 % 7.0) * 0.37).sin();
        }
        let cfg = SamplingConfig { grid: UniformGrid::new(16, 8).unwrap(), n_u: 4, n_f: 6, n_b: 3, train_fraction: 0.5 };
        let points = sample_dataset(&AdvectionProblem::new(beta).unwrap(), data, &cfg).unwrap().train;
        (arch, params, beta, points)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // ---- autodiff

    #[test]
    fn elementary_derivatives(x in -3.0..3.0f64, y in 0.5..3.0f64) {
        let closed = [
            (x.tanh(), 1.0 - x.tanh().powi(2)),
            (x.sin(), x.cos()),
            (x * x, 2.0 * x),
            (x * y + x, y + 1.0),
            (x / y - x, 1.0 / y - 1.0),
        ];
        let d = DualScalar::variable(x);
        let c = DualScalar::lift(y);
        let forward = [d.tanh(), d.sin(), d.square(), d * c + d, d / c - d];
        for (f, (v, dv)) in forward.iter().zip(closed) {
            prop_assert!(rel(f.value, v) < 1e-12);
            prop_assert!(rel(f.tangent, dv) < 1e-12 || (f.tangent - dv).abs() < 1e-15);
        }
        for (k, (_, dv)) in closed.iter().enumerate() {
            let g = grad_params(&[x], |p| {
                let (a, b) = (p[0], Var::constant(y));
                Ok(match k {
                    0 => a.tanh(),
                    1 => a.sin(),
                    2 => a.square(),
                    3 => a * b + a,
                    _ => a / b - a,
                })
            }).unwrap();
            prop_assert!(rel(g[0], *dv) < 1e-12 || (g[0] - dv).abs() < 1e-15);
        }
    }

    #[test]
    fn tape_gradient_matches_finite_differences((arch, params, beta, points) in instance()) {
        let problem = AdvectionProblem::new(beta).unwrap();
        let ad = grad_params(&params, |p| Ok(pinn_loss_terms(&arch, p, &problem, &points)?.total)).unwrap();
        let fd = finite_diff_gradient(|p| Ok(pinn_loss_terms(&arch, p, &problem, &points)?.total), &params, 1e-6).unwrap();
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = ad.iter().zip(&fd).fold(0.0f64, |m, (a, f)| m.max((a - f).abs()));
        prop_assert!(err <= 1e-5 * scale.max(1e-8), "err {err:e} scale {scale:e}");
    }

    #[test]
    fn gradient_is_linear((arch, params, beta, points) in instance(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let p1 = AdvectionProblem::new(beta).unwrap();
        let p2 = AdvectionProblem::new(beta + 1.0).unwrap();
        let g1 = grad_params(&params, |p| Ok(pinn_loss_terms(&arch, p, &p1, &points)?.total)).unwrap();
        let g2 = grad_params(&params, |p| Ok(pinn_loss_terms(&arch, p, &p2, &points)?.bulk)).unwrap();
        let combo = grad_params(&params, |p| {
            let x = pinn_loss_terms(&arch, p, &p1, &points)?.total;
            let y = pinn_loss_terms(&arch, p, &p2, &points)?.bulk;
            Ok(x * Scalar::constant(a) + y * Scalar::constant(b))
        }).unwrap();
        for i in 0..params.len() {
            let expect = a * g1[i] + b * g2[i];
            let scale = (a * g1[i]).abs() + (b * g2[i]).abs();
            prop_assert!((combo[i] - expect).abs() <= 1e-12 * scale.max(1e-300) + 1e-300);
        }
    }

    // ---- model

    #[test]
    fn loss_terms_are_ordered((arch, params, beta, points) in instance()) {
        let l = BatchedEvaluator::new(arch, AdvectionProblem::new(beta).unwrap()).loss(&params, &points).unwrap();
        for term in [l.ic, l.bulk, l.bc] {
            prop_assert!(term >= 0.0 && term <= l.total);
        }
    }

    #[test]
    fn zero_loss_has_zero_gradient((arch, mut params, beta, mut points) in instance()) {
        // zero output layer: the network is identically 0, which solves the
        // problem when the initial targets are 0
        let out = *arch.layers().last().unwrap();
        for p in &mut params[out.weights..] {
            *p = 0.0;
        }
        for ic in &mut points.ic {
            ic.1 = 0.0;
        }
        let problem = AdvectionProblem::new(beta).unwrap();
        let (loss, g) = {
            let mut g = vec![0.0; params.len()];
            let l = BatchedEvaluator::new(arch.clone(), problem).loss_and_grad(&params, &points, &mut g).unwrap();
            (l.total, g)
        };
        prop_assert_eq!(loss, 0.0);
        prop_assert!(g.iter().all(|&v| v == 0.0));
        let tape = grad_params(&params, |p| Ok(pinn_loss_terms(&arch, p, &problem, &points)?.total)).unwrap();
        prop_assert!(tape.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn only_bulk_depends_on_speed((arch, params, beta, points) in instance(), other in 0.5..30.0f64) {
        let a = BatchedEvaluator::new(arch.clone(), AdvectionProblem::new(beta).unwrap()).loss(&params, &points).unwrap();
        let b = BatchedEvaluator::new(arch, AdvectionProblem::new(other).unwrap()).loss(&params, &points).unwrap();
        prop_assert_eq!(a.ic, b.ic);
        prop_assert_eq!(a.bc, b.bc);
    }

    #[test]
    fn grid_mse_ignores_evaluation_order(seed in any::<u64>(), shift in 0usize..1000) {
        let problem = AdvectionProblem::new(3.0).unwrap();
        let grid = MseGrid::new(&problem, UniformGrid::new(20, 10).unwrap());
        let arch = MlpArchitecture::new(vec![2, 4, 1]).unwrap();
        let params = init_params(&arch, seed);
        let eval = BatchedEvaluator::new(arch, problem);
        let mse = grid.mse(&eval, &params).unwrap();
        // evaluate the points in a rotated order and reduce independently
        let n = grid.points().len();
        let order: Vec<usize> = (0..n).map(|k| (k + shift) % n).collect();
        let pts: Vec<(f64, f64)> = order.iter().map(|&k| grid.points()[k]).collect();
        let pred = eval.predict(&params, &pts).unwrap();
        let sum: f64 = order.iter().zip(&pred).map(|(&k, p)| (p - grid.exact()[k]).powi(2)).sum();
        prop_assert!(rel(mse, sum / n as f64) < 1e-12);
    }

    // ---- optim

    #[test]
    fn zero_gradient_is_a_fixed_point(x in prop::collection::vec(-5.0..5.0f64, 1..40), lr in 1e-4..1.0f64) {
        let zero = vec![0.0; x.len()];
        let mut gd = x.clone();
        gd_step(&mut gd, &zero, lr).unwrap();
        prop_assert_eq!(&gd, &x);
        let mut adam = Adam::new(lr, AdamParams::default(), x.len());
        let mut y = x.clone();
        for _ in 0..5 {
            adam.step(&mut y, &zero).unwrap();
        }
        prop_assert_eq!(&y, &x);
    }

    #[test]
    fn lbfgs_direction_descends(
        g in prop::collection::vec(-5.0..5.0f64, 6),
        pairs in prop::collection::vec((prop::collection::vec(-1.0..1.0f64, 6), prop::collection::vec(-1.0..1.0f64, 6)), 1..8),
    ) {
        prop_assume!(nonzero(&g));
        let stored: Vec<CurvaturePair> = pairs
            .into_iter()
            .filter_map(|(s, y)| {
                let ys = dot(&s, &y);
                (ys > 1e-6).then(|| CurvaturePair { s, y, rho: 1.0 / ys })
            })
            .collect();
        let d = lbfgs_direction(&stored, &g);
        prop_assert!(dot(&d, &g) < 0.0);
    }

    #[test]
    fn optimizers_keep_length_and_stay_finite(x0 in prop::collection::vec(-2.0..2.0f64, 1..20)) {
        let n = x0.len();
        let mut objective = FnObjective(|x: &[f64], g: &mut [f64]| {
            g.iter_mut().zip(x).for_each(|(g, x)| *g = *x);
            Ok(0.5 * dot(x, x) + 1.0)
        });
        let mut lbfgs = Lbfgs::new(0.5, LbfgsParams::default(), n);
        let mut x = x0.clone();
        lbfgs.epoch(&mut x, &mut objective).unwrap();
        prop_assert_eq!(x.len(), n);
        prop_assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn bbi_invariant_holds_after_rescaled_steps(
        x0 in prop::collection::vec(-2.0..2.0f64, 1..10),
        lr in 1e-3..0.05f64,
        delta_e in 0.5..4.0f64,
    ) {
        // V = |x|²/2 + 0.1 stays positive
        let v = |x: &[f64]| 0.5 * dot(x, x) + 0.1;
        let mut x = x0;
        let mut state = bbi_init(v(&x), &x.clone(), delta_e).unwrap();
        let e2 = state.energy * state.energy;
        prop_assert!(rel(state.invariant(v(&x)), e2) < 1e-12);
        for _ in 0..50 {
            let vi = v(&x);
            let g = x.clone();
            bbi_step(&mut state, &mut x, &g, vi, lr, true).unwrap();
            if vi < state.energy {
                prop_assert!(rel(state.invariant(vi), e2) < 1e-12);
            }
        }
    }

    // ---- geom

    #[test]
    fn kappa_matches_sin_angle((u, v) in vec_pair(40)) {
        prop_assume!(nonzero(&u) && nonzero(&v));
        let vv = dot(&v, &v);
        let mut w = u.clone();
        for _ in 0..2 {
            let p = dot(&w, &v) / vv;
            w.iter_mut().zip(&v).for_each(|(a, b)| *a -= p * b);
        }
        let oracle = dot(&w, &w).sqrt() / vv.sqrt();
        let scale = dot(&u, &u).sqrt() / vv.sqrt();
        let k = kappa_t(&u, &v).unwrap().unwrap();
        prop_assert!((k - oracle).abs() <= 1e-12 * scale);
    }

    #[test]
    fn kappa_rescaling((u, v) in vec_pair(40), s in 1e-3..1e3f64) {
        prop_assume!(nonzero(&u) && nonzero(&v));
        let su: Vec<f64> = u.iter().map(|x| x * s).collect();
        let sv: Vec<f64> = v.iter().map(|x| x * s).collect();
        let kt = kappa_t(&u, &v).unwrap().unwrap();
        let kw = kappa_omega(&u, &v).unwrap().unwrap();
        let kt_s = kappa_t(&su, &sv).unwrap().unwrap();
        let kw_s = kappa_omega(&su, &sv).unwrap().unwrap();
        prop_assert!((kt_s - kt).abs() <= 1e-10 * kt.max(1e-6));
        prop_assert!((kw_s * s - kw).abs() <= 1e-10 * kw.max(1e-6));
    }

    #[test]
    fn cosine_is_symmetric_and_scale_free((u, v) in vec_pair(40), s in 1e-3..1e3f64, r in 1e-3..1e3f64) {
        prop_assume!(nonzero(&u) && nonzero(&v));
        let c = cosine_similarity(&u, &v).unwrap().unwrap();
        prop_assert_eq!(c, cosine_similarity(&v, &u).unwrap().unwrap());
        let su: Vec<f64> = u.iter().map(|x| x * s).collect();
        let rv: Vec<f64> = v.iter().map(|x| x * r).collect();
        prop_assert!((cosine_similarity(&su, &rv).unwrap().unwrap() - c).abs() < 1e-12);
    }

    // ---- runner

    #[test]
    fn run_csv_round_trips(rows in prop::collection::vec(
        (prop::array::uniform8(any::<f64>().prop_filter("finite", |v| v.is_finite())),
         any::<f64>().prop_filter("finite", |v| v.is_finite()),
         prop::option::of(0.0..1e6f64), prop::option::of(-1.0..1.0f64)),
        1..6,
    )) {
        let epochs: Vec<EpochRecord> = rows
            .iter()
            .enumerate()
            .map(|(i, (l, mse, k, c))| EpochRecord {
                epoch: i,
                train: LossBreakdown { total: l[0], ic: l[1], bulk: l[2], bc: l[3] },
                test: LossBreakdown { total: l[4], ic: l[5], bulk: l[6], bc: l[7] },
                mse: *mse,
                kappa_t: *k,
                kappa_omega: k.map(|v| v * 0.5),
                cos_theta: *c,
            })
            .collect();
        let back = parse_run_csv(&format_run_csv(&epochs)).unwrap();
        prop_assert_eq!(back, epochs);
    }
}

#[test]
fn tape_records_only_parameter_dependent_nodes() {
    let tape = Tape::new();
    let x = tape.leaf(2.0);
    let c = Var::constant(3.0);
    let y = (x * c).sin();
    let adj = tape.adjoints(&y);
    assert!((adj[0] - 3.0 * 6f64.cos()).abs() < 1e-15);
    assert_eq!(tape.len(), 3);
}
