//! Numerical membership test for the solvability region and tracing of `λ*(μ)`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::RectDomain;
use crate::nonlinearity::{nonexistence_bound, Exponents, SystemParams};

use super::{
    ball_geometry_with, check_positive, minimize_from, mountain_pass, solve_sublinear, subsolution_pair,
    SobolevConstants, SolveKind, SolveResult, SolverOptions,
};

/// Ratio between neighbouring λ values probed by the tracer.
pub const LAMBDA_RESOLUTION: f64 = 1.01;
/// Probe budget per μ.
pub const MAX_PROBES: usize = 20;
const RADIUS_GROWTH: f64 = 4.0;
const RADIUS_RETRIES: usize = 5;
/// Lattice steps of one decade-sized jump (1.01^231 ≈ 9.96).
const DECADE: i64 = 231;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evidence {
    TwoSolutions,
    OneSolution,
    /// Not a certificate of non-existence.
    NotDetected,
}

impl Evidence {
    pub fn detected(self) -> bool {
        self != Evidence::NotDetected
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub evidence: Evidence,
    pub minimum: Option<SolveResult>,
    pub mountain_pass: Option<SolveResult>,
}

/// Data shared by all probes at a fixed grid and exponent set.
#[derive(Debug, Clone)]
pub struct ProbeContext {
    pub exps: Exponents,
    pub dom: RectDomain,
    pub opts: SolverOptions,
    /// Solution of the sublinear problem; its scalings seed the minimizations.
    pub omega: SolveResult,
    pub sobolev: SobolevConstants,
    pub lambda1: f64,
}

impl ProbeContext {
    pub fn new(exps: &Exponents, dom: &RectDomain, opts: &SolverOptions) -> Result<Self> {
        exps.validate_for_solve()?;
        opts.validate()?;
        Ok(ProbeContext {
            exps: *exps,
            dom: *dom,
            opts: *opts,
            omega: solve_sublinear(dom, exps, opts)?,
            sobolev: SobolevConstants::estimate(dom, exps, opts.sobolev_starts, opts.seed)?,
            lambda1: dom.discrete_lambda1(),
        })
    }

    /// Upper bound on `λ*(μ)`, when the explicit non-existence region applies.
    pub fn lambda_upper_bound(&self, mu: f64) -> Option<f64> {
        if mu > 0.0 && self.exps.p > 1.0 && self.exps.q > 1.0 {
            nonexistence_bound(mu, &self.exps, self.lambda1).ok()
        } else {
            None
        }
    }

    /// Minimization seeded at the subsolution for `λ`, then mountain pass.
    pub fn probe(&self, lambda: f64, mu: f64) -> ProbeOutcome {
        let not_detected = ProbeOutcome {
            evidence: Evidence::NotDetected,
            minimum: None,
            mountain_pass: None,
        };
        let Ok(params) = SystemParams::new(lambda, mu, self.exps) else {
            return not_detected;
        };
        let Ok(geom) = ball_geometry_with(mu, &self.exps, &self.sobolev, self.opts.eta) else {
            return not_detected;
        };
        let minimum = if lambda == 0.0 {
            SolveResult::trivial(&self.dom, SolveKind::BallMin)
        } else {
            let Ok(func) = Functional::new(&params, &self.dom) else {
                return not_detected;
            };
            let Ok((_, v_under)) = subsolution_pair(lambda, &self.omega, &self.exps) else {
                return not_detected;
            };
            let mut radius = geom.big_r0;
            let mut found = None;
            for _ in 0..=RADIUS_RETRIES {
                match minimize_from(&func, v_under.values().to_vec(), Some(radius), SolveKind::BallMin, &self.opts) {
                    Ok(res) => {
                        found = Some(res);
                        break;
                    }
                    Err(Error::BoundaryStall { .. }) => radius *= RADIUS_GROWTH,
                    Err(_) => break,
                }
            }
            match found {
                Some(res) if check_positive(&res).is_ok() => res,
                _ => return not_detected,
            }
        };
        match mountain_pass(&params, &self.dom, &minimum.v, None, &self.opts) {
            Ok(mp) => ProbeOutcome {
                evidence: if lambda == 0.0 {
                    Evidence::OneSolution
                } else {
                    Evidence::TwoSolutions
                },
                minimum: Some(minimum),
                mountain_pass: Some(mp),
            },
            Err(_) if lambda > 0.0 => ProbeOutcome {
                evidence: Evidence::OneSolution,
                minimum: Some(minimum),
                mountain_pass: None,
            },
            Err(_) => not_detected,
        }
    }
}

/// One-shot probe; builds its own context.
pub fn solvability_probe(
    lambda: f64,
    mu: f64,
    exps: &Exponents,
    dom: &RectDomain,
    opts: &SolverOptions,
) -> Evidence {
    match ProbeContext::new(exps, dom, opts) {
        Ok(ctx) => ctx.probe(lambda, mu).evidence,
        Err(_) => Evidence::NotDetected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mu: f64,
    /// Largest probed λ with a detected solution; zero if none was found.
    pub lambda_star: f64,
    pub lambda_ub: Option<f64>,
    pub evidence: Evidence,
    /// Smallest probed λ above the estimate without detection, if any.
    pub lambda_fail: Option<f64>,
    pub probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCurve {
    pub exps: Exponents,
    pub lambda1: f64,
    pub points: Vec<CurvePoint>,
}

impl BifurcationCurve {
    pub fn is_non_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].lambda_star <= w[0].lambda_star)
    }

    pub fn respects_bound(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.lambda_ub.is_none_or(|ub| p.lambda_star <= ub))
    }
}

/// Bisection on the lattice `λ_k = 1.01^k` (capped at the bound) for one μ.
///
/// All μ share the lattice, so a detection pattern monotone in μ yields monotone estimates.
pub fn trace_point(ctx: &ProbeContext, mu: f64) -> CurvePoint {
    let ln_r = LAMBDA_RESOLUTION.ln();
    let ub = ctx.lambda_upper_bound(mu);
    let k_ub = ub.map(|u| (u.ln() / ln_r).ceil() as i64);
    let value = |k: i64| {
        let l = LAMBDA_RESOLUTION.powi(k as i32);
        ub.map_or(l, |u| l.min(u))
    };
    let probes = std::cell::Cell::new(0usize);
    let detect = |k: i64| {
        probes.set(probes.get() + 1);
        ctx.probe(value(k), mu).evidence
    };
    let mut lo: Option<(i64, Evidence)> = None;
    let mut hi: Option<i64> = None;

    if let Some(kub) = k_ub {
        let e = detect(kub);
        if e.detected() {
            lo = Some((kub, e));
        } else {
            hi = Some(kub);
        }
    }
    if lo.is_none() {
        let mut k = k_ub.map_or(0, |kub| kub - 3 * DECADE);
        loop {
            if probes.get() >= MAX_PROBES {
                break;
            }
            let e = detect(k);
            if e.detected() {
                lo = Some((k, e));
                if hi.is_some() {
                    break;
                }
                k += DECADE;
            } else {
                hi = Some(hi.map_or(k, |h| h.min(k)));
                if lo.is_some() {
                    break;
                }
                k -= DECADE;
            }
        }
    }
    if let (Some((mut l, mut le)), Some(mut h)) = (lo, hi) {
        while h - l > 1 && probes.get() < MAX_PROBES {
            let mid = l + (h - l) / 2;
            let e = detect(mid);
            if e.detected() {
                l = mid;
                le = e;
            } else {
                h = mid;
            }
        }
        lo = Some((l, le));
        hi = Some(h);
    }
    match lo {
        Some((k, e)) => CurvePoint {
            mu,
            lambda_star: value(k),
            lambda_ub: ub,
            evidence: e,
            lambda_fail: hi.map(value),
            probes: probes.get(),
        },
        None => CurvePoint {
            mu,
            lambda_star: 0.0,
            lambda_ub: ub,
            evidence: Evidence::NotDetected,
            lambda_fail: hi.map(value),
            probes: probes.get(),
        },
    }
}

/// Traces `λ*(μ)` at the given ascending μ samples using up to `jobs` threads.
///
/// Each μ is independent and deterministic, so the result does not depend on `jobs`.
pub fn trace_lambda_star(
    mu_samples: &[f64],
    exps: &Exponents,
    dom: &RectDomain,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<BifurcationCurve> {
    if mu_samples.is_empty() {
        return Err(Error::InvalidParameters("mu_samples must not be empty".into()));
    }
    if let Some(m) = mu_samples.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::InvalidParameters(format!("mu samples must be finite and non-negative, got {m}")));
    }
    if mu_samples.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameters("mu_samples must be sorted ascending".into()));
    }
    let ctx = ProbeContext::new(exps, dom, opts)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CurvePoint>>> = Mutex::new(vec![None; mu_samples.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, mu_samples.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= mu_samples.len() {
                    break;
                }
                let point = trace_point(&ctx, mu_samples[i]);
                results.lock().expect("result lock poisoned")[i] = Some(point);
            });
        }
    });
    let points = results
        .into_inner()
        .expect("result lock poisoned")
        .into_iter()
        .map(|p| p.expect("every sample is traced"))
        .collect();
    Ok(BifurcationCurve {
        exps: *exps,
        lambda1: ctx.lambda1,
        points,
    })
}
