use super::*;
use crate::energy::Forcing;
use crate::grid::apply_laplacian;
use crate::nonlinearity::{Exponents, SystemParams};

fn exps() -> Exponents {
    Exponents::new(3.0, 2.0, 0.25, 0.5).unwrap()
}

fn dom() -> RectDomain {
    RectDomain::unit_square(15).unwrap()
}

fn two_solutions(lambda: f64, mu: f64) -> (BallGeometry, SolveResult, SolveResult) {
    let dom = dom();
    let opts = SolverOptions::default();
    let params = SystemParams::new(lambda, mu, exps()).unwrap();
    let geom = ball_geometry(&params, &dom, &opts).unwrap();
    let min = minimize_in_ball(&params, &dom, &geom, &opts).unwrap();
    let mp = mountain_pass(&params, &dom, &min.v, Some(&geom), &opts).unwrap();
    (geom, min, mp)
}

#[test]
fn options_validation() {
    assert!(SolverOptions::default().validate().is_ok());
    let bad = SolverOptions { path_nodes: 2, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = SolverOptions { armijo: 0.7, ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn geometry_relations() {
    let dom = dom();
    let opts = SolverOptions::default();
    let e = exps();
    let g0 = ball_geometry(&SystemParams::new(0.0, 0.0, e).unwrap(), &dom, &opts).unwrap();
    assert_eq!(g0.c1, e.q / (e.q + 1.0));
    let g = ball_geometry(&SystemParams::new(0.05, 0.05, e).unwrap(), &dom, &opts).unwrap();
    let (p, q) = (e.p, e.q);
    assert!((g.delta0 - (q * p - 1.0) / (3.0 * q * (p + 1.0))).abs() < 1e-15);
    let lhs = g.c1 * (q + 1.0) / q * g.big_r0.powf(1.0 / q);
    let rhs = g.c3 * (p + 1.0) * g.big_r0.powf(p);
    assert!((lhs - rhs).abs() <= 1e-10 * lhs);
    assert!((g.r0 - g.eta * g.big_r0).abs() <= 1e-15 * g.big_r0);
    assert!(g.c0 > 0.0 && g.mu0 > 0.0 && g.lambda0 > 0.0);
}

#[test]
fn two_solutions_are_separated_and_positive() {
    let dom = dom();
    let q = exps().q;
    let (geom, min, mp) = two_solutions(0.05, 0.05);
    assert_eq!(min.kind, SolveKind::BallMin);
    assert_eq!(mp.kind, SolveKind::MountainPass);
    assert!(min.energy < 0.0 && mp.energy > 0.0);
    assert!(min.w_norm(q, &dom) < geom.big_r0);
    assert!(mountain_pass::relative_w_distance(&dom, q, min.v.values(), mp.v.values()) >= 0.1);
    for res in [&min, &mp] {
        assert!(res.residuals.max() <= 1e-6);
        assert!(res.v.min() > 0.0 && res.u.min() > 0.0);
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let (_, a_min, a_mp) = two_solutions(0.05, 0.05);
    let (_, b_min, b_mp) = two_solutions(0.05, 0.05);
    assert_eq!(a_min, b_min);
    assert_eq!(a_mp, b_mp);
}

#[test]
fn zero_lambda_ball_minimum_is_trivial() {
    let dom = dom();
    let opts = SolverOptions::default();
    let params = SystemParams::new(0.0, 0.0, exps()).unwrap();
    let geom = ball_geometry(&params, &dom, &opts).unwrap();
    let min = minimize_in_ball(&params, &dom, &geom, &opts).unwrap();
    assert_eq!(min.energy, 0.0);
    assert_eq!(min.v.max_abs(), 0.0);
    let mp = mountain_pass(&params, &dom, &min.v, Some(&geom), &opts).unwrap();
    assert!(mp.energy > 0.0 && mp.v.min() > 0.0);
}

fn pair_residual(dom: &RectDomain, lambda: f64, u: &Field, v: &Field, e: &Exponents) -> f64 {
    let n = dom.len();
    let (mut lu, mut lv) = (vec![0.0; n], vec![0.0; n]);
    apply_laplacian(dom, u.values(), &mut lu);
    apply_laplacian(dom, v.values(), &mut lv);
    let f1: Vec<f64> = v.values().iter().map(|x| lambda * x.powf(e.r)).collect();
    let f2: Vec<f64> = u.values().iter().map(|x| x.powf(e.q)).collect();
    let r1: Vec<f64> = lu.iter().zip(&f1).map(|(a, b)| -a - b).collect();
    let r2: Vec<f64> = lv.iter().zip(&f2).map(|(a, b)| -a - b).collect();
    (l2_norm(dom, &r1) / l2_norm(dom, &f1).max(1.0)).max(l2_norm(dom, &r2) / l2_norm(dom, &f2).max(1.0))
}

#[test]
fn sublinear_solution_and_scaled_pairs() {
    let dom = dom();
    let e = exps();
    let omega = solve_sublinear(&dom, &e, &SolverOptions::default()).unwrap();
    assert!(omega.energy < 0.0);
    assert!(omega.v.min() > 0.0 && omega.u.min() > 0.0);
    assert!(omega.residuals.max() <= 1e-6);

    let (u0, v0) = subsolution_pair(0.0, &omega, &e).unwrap();
    assert_eq!((u0.max_abs(), v0.max_abs()), (0.0, 0.0));
    let mut prev: Option<(Field, Field)> = None;
    for &l in &[0.0125, 0.025, 0.05] {
        let (u, v) = subsolution_pair(l, &omega, &e).unwrap();
        assert!(pair_residual(&dom, l, &u, &v, &e) <= 1e-6);
        if let Some((pu, pv)) = &prev {
            assert!(u.values().iter().zip(pu.values()).all(|(a, b)| a > b));
            assert!(v.values().iter().zip(pv.values()).all(|(a, b)| a > b));
        }
        prev = Some((u, v));
    }
    assert!(subsolution_pair(-1.0, &omega, &e).is_err());
}

#[test]
fn solutions_dominate_smaller_subsolutions() {
    let dom = dom();
    let e = exps();
    let omega = solve_sublinear(&dom, &e, &SolverOptions::default()).unwrap();
    let (u_under, v_under) = subsolution_pair(0.025, &omega, &e).unwrap();
    let (_, min, mp) = two_solutions(0.05, 0.05);
    for res in [&min, &mp] {
        assert!(res.u.values().iter().zip(u_under.values()).all(|(a, b)| a > b));
        assert!(res.v.values().iter().zip(v_under.values()).all(|(a, b)| a > b));
    }
}

#[test]
fn truncated_minimum_is_trapped() {
    let dom = dom();
    let e = exps();
    let opts = SolverOptions::default();
    let omega = solve_sublinear(&dom, &e, &opts).unwrap();
    let (_, v_under) = subsolution_pair(0.0125, &omega, &e).unwrap();
    let (_, upper, _) = two_solutions(0.05, 0.05);
    let params = SystemParams::new(0.025, 0.05, e).unwrap();
    let res = minimize_truncated(&params, &dom, &v_under, &upper.v, &opts).unwrap();
    assert_eq!(res.kind, SolveKind::Truncated);
    assert!(res.residuals.max() <= 1e-6);
    let (lo, hi) = (v_under.values(), upper.v.values());
    let slack = 1e-9 * upper.v.max();
    for (k, &x) in res.v.values().iter().enumerate() {
        assert!(x >= lo[k] - slack && x <= hi[k] + slack);
    }

    let bar = Functional::with_forcing(
        params.mu,
        e,
        Forcing::Truncated { lambda: params.lambda, lower: lo.to_vec(), upper: hi.to_vec() },
        &dom,
    )
    .unwrap();
    assert!(bar.value(res.v.values()).unwrap() <= bar.value(lo).unwrap());
    let plain = Functional::new(&params, &dom).unwrap();
    let plain_value = plain.value(res.v.values()).unwrap();
    let gap = bar.value(res.v.values()).unwrap() - plain_value;
    let (l, r, p) = (params.lambda, e.r, e.p);
    let expected = -dom.cell_area()
        * lo.iter()
            .map(|v| l * r / (r + 1.0) * v.powf(r + 1.0) + p / (p + 1.0) * v.powf(p + 1.0))
            .sum::<f64>();
    // the gap is far below the energies themselves, so compare at their scale
    assert!((gap - expected).abs() <= 1e-12 * plain_value.abs(), "{gap} vs {expected}");
}

#[test]
fn unordered_trap_is_rejected() {
    let dom = dom();
    let params = SystemParams::new(0.1, 0.1, exps()).unwrap();
    let a = dom.sine_mode(1, 1);
    let b = a.scaled(0.5);
    let err = minimize_truncated(&params, &dom, &a, &b, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::OrderViolation { node: 0, .. }));
}

#[test]
fn probe_classification() {
    let dom = RectDomain::unit_square(11).unwrap();
    let e = exps();
    let ctx = ProbeContext::new(&e, &dom, &SolverOptions::default()).unwrap();
    assert_eq!(ctx.probe(0.05, 0.05).evidence, Evidence::TwoSolutions);
    assert_eq!(ctx.probe(0.0, 0.0).evidence, Evidence::OneSolution);
    let ub = ctx.lambda_upper_bound(0.8).unwrap();
    assert_eq!(ctx.probe(1.5 * ub, 0.8).evidence, Evidence::NotDetected);
    assert!(ctx.lambda_upper_bound(0.0).is_none());
}

#[test]
fn sweep_input_validation() {
    let dom = RectDomain::unit_square(7).unwrap();
    let opts = SolverOptions::default();
    assert!(trace_lambda_star(&[], &exps(), &dom, &opts, 1).is_err());
    assert!(trace_lambda_star(&[0.4, 0.2], &exps(), &dom, &opts, 1).is_err());
    assert!(trace_lambda_star(&[-0.1], &exps(), &dom, &opts, 1).is_err());
}
