use hamvar_core::solvers::{trace_lambda_star, ProbeContext, SolverOptions, LAMBDA_RESOLUTION};
use hamvar_core::{Exponents, RectDomain};

#[test]
fn estimates_are_bracketed_by_the_bisection() {
    let dom = RectDomain::unit_square(9).unwrap();
    let e = Exponents::new(3.0, 2.0, 0.25, 0.5).unwrap();
    let opts = SolverOptions::default();
    let curve = trace_lambda_star(&[0.0, 0.5], &e, &dom, &opts, 2).unwrap();
    assert!(curve.is_non_increasing());
    assert!(curve.respects_bound());
    let ctx = ProbeContext::new(&e, &dom, &opts).unwrap();
    for p in &curve.points {
        assert!(p.lambda_star > 0.0);
        assert!(ctx.probe(p.lambda_star, p.mu).evidence.detected());
        let fail = p.lambda_fail.expect("bisection closed");
        assert!(fail / p.lambda_star <= LAMBDA_RESOLUTION * (1.0 + 1e-12));
        assert!(!ctx.probe(fail, p.mu).evidence.detected());
    }
}
