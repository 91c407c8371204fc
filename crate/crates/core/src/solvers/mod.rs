//! Critical points of the reduced functional.
//!
//! Every solver follows the same two stages: a descent (or path deformation) preconditioned
//! by `Δ_h⁻²` brings the iterate near a critical point, then a damped Newton iteration on
//! the second-order system in `(u, v)` drives the residuals to round-off. The descent stage
//! decides which critical point is found; Newton only polishes it.

mod curve;
mod descent;
mod geometry;
mod mountain_pass;
mod newton;
mod sublinear;
mod truncated;

use serde::{Deserialize, Serialize};

use crate::energy::{Functional, ResidualReport};
use crate::error::{Error, Result};
use crate::grid::{l2_norm, w_norm_slice, Field, RectDomain};

pub use curve::{
    solvability_probe, trace_lambda_star, trace_point, BifurcationCurve, CurvePoint, Evidence, ProbeContext, LAMBDA_RESOLUTION,
    MAX_PROBES,
};
pub use geometry::{ball_geometry, ball_geometry_with, BallGeometry, SobolevConstants};
pub use mountain_pass::{mountain_pass, relative_w_distance};
pub use sublinear::{solve_sublinear, subsolution_pair};
pub use truncated::minimize_truncated;

pub(crate) use descent::descend;
pub(crate) use newton::polish;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the system residuals and the relative gradient norm.
    pub tol: f64,
    /// Iteration cap of the descent stage.
    pub max_iter: usize,
    pub armijo: f64,
    pub shrink: f64,
    /// Relative gradient at which the descent hands over to Newton.
    pub handover: f64,
    /// Relative residual at which Newton stops.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Nodes on the mountain-pass path, endpoints included.
    pub path_nodes: usize,
    pub mp_max_iter: usize,
    /// `r0 = eta · R0`
    pub eta: f64,
    pub sobolev_starts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 5000,
            armijo: 1e-4,
            shrink: 0.5,
            handover: 1e-3,
            newton_tol: 1e-11,
            newton_max_iter: 60,
            path_nodes: 31,
            mp_max_iter: 3000,
            eta: 0.1,
            sobolev_starts: 4,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameters(m.to_string()));
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad("tol must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo parameter must lie in (0, 0.5)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(self.handover > 0.0 && self.handover < 1.0) {
            return bad("handover must lie in (0, 1)");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if self.path_nodes < 3 {
            return bad("path needs at least 3 nodes");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0, 1)");
        }
        if self.max_iter == 0 || self.newton_max_iter == 0 || self.mp_max_iter == 0 {
            return bad("iteration caps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveKind {
    BallMin,
    MountainPass,
    Truncated,
    Sublinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub v: Field,
    pub u: Field,
    pub energy: f64,
    pub kind: SolveKind,
    /// discrete `L²` norm of the reduced gradient
    pub grad_norm: f64,
    pub residuals: ResidualReport,
    pub iterations: usize,
}

impl SolveResult {
    pub fn w_norm(&self, q: f64, dom: &RectDomain) -> f64 {
        w_norm_slice(dom, self.v.values(), q)
    }

    fn trivial(dom: &RectDomain, kind: SolveKind) -> Self {
        SolveResult {
            v: Field::zeros(dom),
            u: Field::zeros(dom),
            energy: 0.0,
            kind,
            grad_norm: 0.0,
            residuals: ResidualReport { r1: 0.0, r2: 0.0 },
            iterations: 0,
        }
    }
}

/// Sets tiny negative undershoot to zero; "tiny" is relative to the field's own scale.
fn clip_undershoot(w: &mut [f64]) {
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * scale;
    for v in w.iter_mut() {
        if *v < 0.0 && *v >= -floor {
            *v = 0.0;
        }
    }
}

/// Builds the final result from a polished `v`: clipping, `u = −ψ(μ, Δ_h v)`, energy,
/// gradient and residuals.
fn finish(func: &Functional, mut v: Vec<f64>, kind: SolveKind, iterations: usize) -> Result<SolveResult> {
    clip_undershoot(&mut v);
    let ev = func.evaluate(&v)?;
    let mut u: Vec<f64> = ev.psi.iter().map(|z| -z).collect();
    clip_undershoot(&mut u);
    let residuals = func.residual(&u, &v)?;
    let dom = &func.dom;
    Ok(SolveResult {
        grad_norm: l2_norm(dom, &ev.gradient),
        energy: ev.value,
        v: Field::from_values(dom, v)?,
        u: Field::from_values(dom, u)?,
        kind,
        residuals,
        iterations,
    })
}

/// Relative gradient size `‖∇J‖ / (‖Δψ‖ + ‖f‖)` used by every stopping test.
fn relative_gradient(func: &Functional, w: &[f64], grad: &[f64]) -> f64 {
    let dom = &func.dom;
    let f: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, &z)| func.forcing.value(k, z, &func.exps))
        .collect();
    let fnorm = l2_norm(dom, &f);
    let gnorm = l2_norm(dom, grad);
    // ‖Δψ‖ = ‖g + f‖ ≤ ‖g‖ + ‖f‖
    let scale = fnorm + l2_norm(
        dom,
        &grad.iter().zip(&f).map(|(a, b)| a + b).collect::<Vec<f64>>(),
    );
    if scale == 0.0 {
        0.0
    } else {
        gnorm / scale
    }
}

/// Descent from `seed` (optionally inside `‖w‖_W ≤ radius`) followed by Newton.
///
/// Fails with [`Error::BoundaryStall`] if the descent ends on the sphere.
pub(crate) fn minimize_from(
    func: &Functional,
    seed: Vec<f64>,
    radius: Option<f64>,
    kind: SolveKind,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let out = descend(func, seed, radius, opts.handover, opts)?;
    if out.pinned {
        return Err(Error::BoundaryStall {
            radius: radius.unwrap_or(f64::INFINITY),
        });
    }
    let (v, newton_its) = polish(func, &out.w, opts)?;
    let res = finish(func, v, kind, out.iterations + newton_its)?;
    check_converged(&res, opts)?;
    Ok(res)
}

fn check_converged(res: &SolveResult, opts: &SolverOptions) -> Result<()> {
    if !(res.residuals.max() <= opts.tol) || !res.energy.is_finite() {
        return Err(Error::no_convergence(
            format!(
                "{:?} solve (residuals r1={:.3e}, r2={:.3e})",
                res.kind, res.residuals.r1, res.residuals.r2
            ),
            res.iterations,
        ));
    }
    Ok(())
}

/// `λ^σ φ₁ / ‖φ₁‖_W` with `σ = q/(1 − qr) + 1/2`.
pub fn negative_energy_seed(lambda: f64, q: f64, r: f64, dom: &RectDomain) -> Vec<f64> {
    let sigma = q / (1.0 - q * r) + 0.5;
    let phi = dom.sine_mode(1, 1).into_values();
    let norm = w_norm_slice(dom, &phi, q);
    let scale = lambda.powf(sigma) / norm;
    phi.into_iter().map(|v| scale * v).collect()
}

/// Ball minimization from the negative-energy seed.
///
/// The returned minimum has negative energy, lies strictly inside `‖w‖_W < R0` and is
/// positive at every interior node.
pub fn minimize_in_ball(
    params: &crate::nonlinearity::SystemParams,
    dom: &RectDomain,
    geom: &BallGeometry,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    params.validate()?;
    params.exps.validate_for_solve()?;
    opts.validate()?;
    let func = Functional::new(params, dom)?;
    if params.lambda == 0.0 {
        return Ok(SolveResult::trivial(dom, SolveKind::BallMin));
    }
    let seed = negative_energy_seed(params.lambda, params.exps.q, params.exps.r, dom);
    minimize_in_ball_from(&func, seed, geom.big_r0, opts)
}

/// Ball minimization from an explicit seed; shared by the probe.
pub fn minimize_in_ball_from(
    func: &Functional,
    seed: Vec<f64>,
    radius: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    let res = minimize_from(func, seed, Some(radius), SolveKind::BallMin, opts)?;
    let norm = res.w_norm(func.exps.q, &func.dom);
    if !(res.energy < 0.0) {
        return Err(Error::no_convergence(
            format!("ball minimization (energy {:.3e} is not negative)", res.energy),
            res.iterations,
        ));
    }
    if !(norm < radius) {
        return Err(Error::BoundaryStall { radius });
    }
    check_positive(&res)?;
    Ok(res)
}

fn check_positive(res: &SolveResult) -> Result<()> {
    for (name, f) in [("v", &res.v), ("u", &res.u)] {
        if let Some(k) = f.values().iter().position(|&x| !(x > 0.0)) {
            return Err(Error::no_convergence(
                format!("{:?} solve ({name} not positive at node {k})", res.kind),
                res.iterations,
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
