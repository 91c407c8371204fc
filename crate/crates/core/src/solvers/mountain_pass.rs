//! Path-deformation mountain pass.
//!
//! A polygonal path joins the local minimum to a far point of lower energy. Each sweep
//! pushes the highest node downhill, perpendicular to the path, and the nodes are
//! periodically redistributed to equal `W`-arc length. Once the top of the path is nearly
//! stationary it is refined along its ray and handed to Newton.

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, inner, w_norm_slice, Field, RectDomain};
use crate::nonlinearity::SystemParams;
use crate::poisson::SpectralPoisson;

use super::{check_converged, check_positive, finish, polish, relative_gradient, BallGeometry, SolveKind, SolveResult, SolverOptions};

const REDISTRIBUTE_EVERY: usize = 10;
const ENDPOINT_DOUBLINGS: usize = 80;
/// Relative gradient of the path maximum at which Newton takes over.
const MP_HANDOVER: f64 = 2e-3;
/// The top of a discrete path keeps a tangential gradient component, so the sweep also
/// stops once the path maximum has stagnated over a window of iterations.
const STAGNATION_WINDOW: usize = 50;
const STAGNATION_TOL: f64 = 1e-6;
const MIN_SEPARATION: f64 = 0.1;

fn w_inner(dom: &RectDomain, a: &[f64], b: &[f64]) -> f64 {
    let mut la = vec![0.0; a.len()];
    let mut lb = vec![0.0; b.len()];
    apply_laplacian(dom, a, &mut la);
    apply_laplacian(dom, b, &mut lb);
    inner(dom, &la, &lb)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Relative `W`-distance `‖a − b‖_W / max(‖a‖_W, ‖b‖_W)`.
pub fn relative_w_distance(dom: &RectDomain, q: f64, a: &[f64], b: &[f64]) -> f64 {
    let d = w_norm_slice(dom, &diff(a, b), q);
    let s = w_norm_slice(dom, a, q).max(w_norm_slice(dom, b, q));
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}

fn redistribute(func: &Functional, path: &mut [Vec<f64>]) {
    let dom = &func.dom;
    let q = func.exps.q;
    let m = path.len();
    let mut cum = vec![0.0; m];
    for k in 1..m {
        cum[k] = cum[k - 1] + w_norm_slice(dom, &diff(&path[k], &path[k - 1]), q);
    }
    let total = cum[m - 1];
    if !(total > 0.0) {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (k, node) in path.iter_mut().enumerate().take(m - 1).skip(1) {
        let target = total * k as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        *node = lerp(&old[seg], &old[seg + 1], t.clamp(0.0, 1.0));
    }
}

/// Golden-section maximization of `J(t w)` for `t ∈ [0.5, 2]`.
fn refine_on_ray(func: &Functional, w: &[f64]) -> Result<Vec<f64>> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.5f64, 2.0f64);
    let val = |t: f64| func.value(&w.iter().map(|x| t * x).collect::<Vec<f64>>());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (val(c)?, val(d)?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = val(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = val(d)?;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let t = 0.5 * (a + b);
    Ok(w.iter().map(|x| t * x).collect())
}

/// Mountain-pass critical point above the local minimum `w_min`.
///
/// Fails with [`Error::Collapse`] when the top of the path falls back into the basin of
/// `w_min`; with `geom` given and `(λ, μ)` inside its box, the level must also reach `c0`.
pub fn mountain_pass(
    params: &SystemParams,
    dom: &RectDomain,
    w_min: &Field,
    geom: Option<&BallGeometry>,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    params.validate()?;
    params.exps.validate_for_solve()?;
    opts.validate()?;
    w_min.check(dom)?;
    let func = Functional::new(params, dom)?;
    let q = params.exps.q;
    let start = w_min.values().to_vec();
    let e_min = func.value(&start)?;

    let phi = dom.sine_mode(1, 1).into_values();
    let mut t = 1.0f64.max(2.0 * w_min.max_abs());
    let mut far = None;
    for _ in 0..ENDPOINT_DOUBLINGS {
        let cand: Vec<f64> = phi.iter().map(|x| t * x).collect();
        if func.value(&cand)? < e_min - 1.0 {
            far = Some(cand);
            break;
        }
        t *= 2.0;
    }
    let far = far.ok_or_else(|| Error::no_convergence("mountain-pass endpoint search", ENDPOINT_DOUBLINGS))?;

    let m = opts.path_nodes;
    let mut path: Vec<Vec<f64>> = (0..m).map(|k| lerp(&start, &far, k as f64 / (m - 1) as f64)).collect();
    let mut energies = path.iter().map(|w| func.value(w)).collect::<Result<Vec<f64>>>()?;
    let poisson = SpectralPoisson::new(dom);
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut top;
    let mut history: Vec<f64> = Vec::new();
    loop {
        top = (1..m - 1)
            .max_by(|&a, &b| energies[a].total_cmp(&energies[b]))
            .unwrap_or(1);
        if energies[top] <= e_min || energies[top] <= energies[0].max(energies[m - 1]) {
            return Err(Error::Collapse);
        }
        history.push(energies[top]);
        if history.len() > STAGNATION_WINDOW {
            let old = history[history.len() - 1 - STAGNATION_WINDOW];
            if old - energies[top] <= STAGNATION_TOL * energies[top].abs() {
                break;
            }
        }
        let ev = func.evaluate(&path[top])?;
        if relative_gradient(&func, &path[top], &ev.gradient) <= MP_HANDOVER || iterations >= opts.mp_max_iter {
            break;
        }
        let mut dir: Vec<f64> = poisson.biharmonic_inverse(&ev.gradient).into_iter().map(|x| -x).collect();
        let tau = diff(&path[top + 1], &path[top - 1]);
        let tt = w_inner(dom, &tau, &tau);
        if tt > 0.0 {
            let c = w_inner(dom, &dir, &tau) / tt;
            dir.iter_mut().zip(&tau).for_each(|(d, x)| *d -= c * x);
        }
        let slope = inner(dom, &ev.gradient, &dir);
        let mut s = step;
        let mut moved = false;
        if slope < 0.0 {
            for attempt in 0..40 {
                let trial: Vec<f64> = path[top].iter().zip(&dir).map(|(a, d)| a + s * d).collect();
                let tv = func.value(&trial)?;
                if tv <= ev.value + opts.armijo * s * slope {
                    path[top] = trial;
                    energies[top] = tv;
                    step = if attempt == 0 { 2.0 * s } else { s };
                    moved = true;
                    break;
                }
                s *= opts.shrink;
            }
        }
        iterations += 1;
        if !moved || iterations % REDISTRIBUTE_EVERY == 0 {
            redistribute(&func, &mut path);
            energies = path.iter().map(|w| func.value(w)).collect::<Result<Vec<f64>>>()?;
            if !moved {
                step = step.max(1e-300) * 0.5;
            }
        }
    }

    let seed = refine_on_ray(&func, &path[top])?;
    let (v, newton_its) = polish(&func, &seed, opts)?;
    let res = finish(&func, v, SolveKind::MountainPass, iterations + newton_its)?;
    check_converged(&res, opts)?;
    if !(res.energy > 0.0) || !(res.energy > e_min) {
        return Err(Error::Collapse);
    }
    if relative_w_distance(dom, q, res.v.values(), &start) < MIN_SEPARATION {
        return Err(Error::Collapse);
    }
    if let Some(g) = geom {
        if params.lambda <= g.lambda0 && params.mu <= g.mu0 && res.energy < g.c0 {
            return Err(Error::no_convergence(
                format!("mountain pass (level {:.3e} below c0 = {:.3e})", res.energy, g.c0),
                res.iterations,
            ));
        }
    }
    check_positive(&res)?;
    Ok(res)
}
