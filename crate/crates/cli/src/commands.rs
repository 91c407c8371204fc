use std::fs;
use std::path::Path;

use hamvar_core::grid::principal_eigenvalue;
use hamvar_core::io::{save_field, write_curve_csv, write_json};
use hamvar_core::nonlinearity::{big_psi_from, eval_psi, PSI_TOL};
use hamvar_core::solvers::{
    ball_geometry, minimize_in_ball, mountain_pass, trace_lambda_star, BallGeometry, SolveResult,
};
use hamvar_core::verify::{check_energy_geometry, scalar_suites, GeometryBox, PropertyReport};
use hamvar_core::{Error, RectDomain};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    /// exit 1
    Config(String),
    /// exit 2
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidExponents(_) | Error::InvalidParameters(_) | Error::DimensionMismatch { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn config_err(m: String) -> Failure {
    Failure::Config(m)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Solver(format!("cannot create {}: {e}", dir.display())))
}

fn save_result(cfg: &RunConfig, dom: &RectDomain, geom: &BallGeometry, name: &str, res: &SolveResult) -> Result<(), Failure> {
    let dir = &cfg.out_dir;
    write_json(&dir.join(format!("{name}.json")), &json!({ "config": cfg, "geometry": geom, "result": res }))?;
    save_field(&dir.join(format!("{name}_v.csv")), &res.v, dom)?;
    save_field(&dir.join(format!("{name}_u.csv")), &res.u, dom)?;
    Ok(())
}

fn print_result(name: &str, res: &SolveResult, q: f64, dom: &RectDomain) {
    println!(
        "{name:<15} {:>14.6e} {:>12.6e} {:>12.6e} {:>10.3e} {:>10.3e} {:>7}",
        res.energy,
        res.w_norm(q, dom),
        res.v.max(),
        res.residuals.r1,
        res.residuals.r2,
        res.iterations
    );
}

pub fn solve(cfg: &RunConfig) -> Result<(), Failure> {
    let params = cfg.params().map_err(config_err)?;
    let dom = cfg.domain().map_err(config_err)?;
    let opts = cfg.solver_options().map_err(config_err)?;
    prepare_out(&cfg.out_dir)?;
    let q = params.exps.q;

    let geom = ball_geometry(&params, &dom, &opts)?;
    println!(
        "geometry: R0 = {:.6e}, r0 = {:.6e}, c0 = {:.6e}, lambda0 = {:.6e}, mu0 = {:.6e}",
        geom.big_r0, geom.r0, geom.c0, geom.lambda0, geom.mu0
    );
    println!(
        "{:<15} {:>14} {:>12} {:>12} {:>10} {:>10} {:>7}",
        "solution", "energy", "||v||_W", "max v", "r1", "r2", "iters"
    );
    let min = minimize_in_ball(&params, &dom, &geom, &opts)?;
    print_result("ball minimum", &min, q, &dom);
    save_result(cfg, &dom, &geom, "ball_min", &min)?;

    let mp = mountain_pass(&params, &dom, &min.v, Some(&geom), &opts)?;
    print_result("mountain pass", &mp, q, &dom);
    save_result(cfg, &dom, &geom, "mountain_pass", &mp)?;
    let dist = hamvar_core::solvers::relative_w_distance(&dom, q, min.v.values(), mp.v.values());
    println!("relative W-distance: {dist:.6e}");
    Ok(())
}

pub fn sweep(cfg: &RunConfig, jobs: usize) -> Result<(), Failure> {
    let exps = cfg.solve_exponents().map_err(config_err)?;
    let dom = cfg.domain().map_err(config_err)?;
    let opts = cfg.solver_options().map_err(config_err)?;
    if cfg.mu_samples.is_empty() {
        return Err(Failure::Config("mu_samples must not be empty".into()));
    }
    if jobs == 0 {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    prepare_out(&cfg.out_dir)?;
    let curve = trace_lambda_star(&cfg.mu_samples, &exps, &dom, &opts, jobs)?;
    write_json(&cfg.out_dir.join("curve.json"), &json!({ "config": cfg, "curve": curve }))?;
    let file = fs::File::create(cfg.out_dir.join("curve.csv")).map_err(Error::from)?;
    write_curve_csv(std::io::BufWriter::new(file), &curve)?;

    println!("{:>10} {:>14} {:>14} {:>14}  evidence", "mu", "lambda_star", "lambda_ub", "probes");
    for p in &curve.points {
        let ub = p.lambda_ub.map_or("-".to_string(), |u| format!("{u:.6e}"));
        println!("{:>10.4} {:>14.6e} {:>14} {:>14}  {:?}", p.mu, p.lambda_star, ub, p.probes, p.evidence);
    }
    let yes = |b: bool| if b { "yes" } else { "NO" };
    println!("non-increasing in mu: {}", yes(curve.is_non_increasing()));
    println!("within analytic bound: {}", yes(curve.respects_bound()));
    Ok(())
}

fn print_report(r: &PropertyReport) {
    let c = r.empirical_constant.map_or(String::new(), |c| format!("  constant {c:.6e}"));
    println!(
        "{:<22} {:>8} samples {:>6} violations  worst margin {:.3e}{c}",
        r.property_id, r.samples, r.violations, r.worst_margin
    );
}

/// Returns whether every suite passed.
pub fn verify(cfg: &RunConfig) -> Result<bool, Failure> {
    let exps = cfg.exponents().map_err(config_err)?;
    let mut reports = scalar_suites(&exps, cfg.sample_count, cfg.seed)?;
    if exps.validate_for_solve().is_ok() && cfg.geometry_samples > 0 {
        let params = cfg.params().map_err(config_err)?;
        let dom = cfg.domain().map_err(config_err)?;
        let opts = cfg.solver_options().map_err(config_err)?;
        if cfg.lambda == 0.0 {
            return Err(Failure::Config("the seed ladder needs lambda > 0".into()));
        }
        let geom = ball_geometry(&params, &dom, &opts)?;
        let gb = GeometryBox {
            exps,
            geom,
            ladder: vec![cfg.lambda, cfg.lambda / 2.0, cfg.lambda / 4.0],
            ladder_mu: cfg.mu,
        };
        reports.push(check_energy_geometry(&gb, &dom, cfg.geometry_samples, cfg.seed)?);
    } else {
        println!("energy geometry skipped: exponents do not admit the two-solution geometry");
    }
    for r in &reports {
        print_report(r);
    }
    let passed = reports.iter().all(PropertyReport::passed);
    prepare_out(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("verify.json"), &json!({ "config": cfg, "passed": passed, "reports": reports }))?;
    println!("{}", if passed { "all suites passed" } else { "VIOLATIONS FOUND" });
    Ok(passed)
}

#[derive(Serialize)]
struct EigenLevel {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    lambda1_h: f64,
    closed_form: f64,
    continuum_error: f64,
    order: Option<f64>,
    iterations: usize,
}

/// `λ₁ʰ` on the configured grid and the two grids with doubled spacing.
pub fn eigen(cfg: &RunConfig) -> Result<(), Failure> {
    let dom = cfg.domain().map_err(config_err)?;
    let mut doms = vec![dom];
    for _ in 0..2 {
        let d = doms.last().unwrap();
        // cell counts halve; interior node counts are one less
        let (nx, ny) = (d.nx.div_ceil(2), d.ny.div_ceil(2));
        if nx < 2 || ny < 2 {
            break;
        }
        doms.push(RectDomain::new(d.width, d.height, nx - 1, ny - 1)?);
    }
    doms.reverse();
    let exact = dom.continuum_lambda1();
    let mut levels: Vec<EigenLevel> = Vec::new();
    for d in &doms {
        let pair = principal_eigenvalue(d)?;
        let err = (pair.lambda1 - exact).abs();
        let order = levels.last().map(|prev| (prev.continuum_error / err).ln() / (prev.hx / d.hx()).ln());
        levels.push(EigenLevel {
            nx: d.nx,
            ny: d.ny,
            hx: d.hx(),
            hy: d.hy(),
            lambda1_h: pair.lambda1,
            closed_form: d.discrete_lambda1(),
            continuum_error: err,
            order,
            iterations: pair.iterations,
        });
    }
    let fine = levels.last().expect("at least one level");
    println!("lambda1_h = {:.12} (closed form {:.12}, continuum {:.12})", fine.lambda1_h, fine.closed_form, exact);
    println!("{:>6} {:>6} {:>12} {:>20} {:>12} {:>8}", "nx", "ny", "hx", "lambda1_h", "error", "order");
    for l in &levels {
        let o = l.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!("{:>6} {:>6} {:>12.6e} {:>20.12} {:>12.4e} {:>8}", l.nx, l.ny, l.hx, l.lambda1_h, l.continuum_error, o);
    }
    prepare_out(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("eigen.json"), &json!({ "config": cfg, "continuum": exact, "levels": levels }))?;
    Ok(())
}

/// Table of `(θ, ψ(μ, θ), Ψ(μ, θ))`; writes nothing.
pub fn psi(cfg: &RunConfig) -> Result<(), Failure> {
    let exps = cfg.exponents().map_err(config_err)?;
    if !(cfg.mu.is_finite() && cfg.mu >= 0.0) {
        return Err(Failure::Config(format!("mu must be finite and non-negative, got {}", cfg.mu)));
    }
    if cfg.thetas.is_empty() || cfg.thetas.iter().any(|t| !t.is_finite()) {
        return Err(Failure::Config("thetas must be a non-empty list of finite numbers".into()));
    }
    println!("{:>24} {:>24} {:>24}", "theta", "psi", "Psi");
    for &theta in &cfg.thetas {
        let z = eval_psi(cfg.mu, theta, &exps, PSI_TOL)?;
        println!("{theta:>24.16e} {z:>24.16e} {:>24.16e}", big_psi_from(cfg.mu, theta, z, &exps));
    }
    Ok(())
}
