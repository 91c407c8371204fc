use std::path::{Path, PathBuf};

use clap::Args;
use hamvar_core::solvers::SolverOptions;
use hamvar_core::{Exponents, RectDomain, SystemParams};
use serde::{Deserialize, Serialize};

/// Everything a run depends on. Files use these flat keys; flags of the same name win.
///
/// `nx`, `ny` count interior nodes, so `nx = 63` means `h = a/64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub path_nodes: usize,
    pub mp_max_iter: usize,
    pub eta: f64,
    pub sobolev_starts: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub mu_samples: Vec<f64>,
    pub sample_count: usize,
    pub geometry_samples: usize,
    pub thetas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        RunConfig {
            p: 3.0,
            q: 2.0,
            r: 0.25,
            s: 0.5,
            lambda: 0.05,
            mu: 0.05,
            width: 1.0,
            height: 1.0,
            nx: 63,
            ny: 63,
            tol: o.tol,
            max_iter: o.max_iter,
            newton_tol: o.newton_tol,
            path_nodes: o.path_nodes,
            mp_max_iter: o.mp_max_iter,
            eta: o.eta,
            sobolev_starts: o.sobolev_starts,
            seed: o.seed,
            out_dir: PathBuf::from("out"),
            mu_samples: vec![0.0, 0.2, 0.4, 0.8],
            sample_count: 100_000,
            geometry_samples: 200,
            thetas: vec![-8.0, -1.0, 0.01, 0.5, 1.0, 2.0, 8.0, 1e3],
        }
    }
}

/// Command-line overrides; every field left out keeps the file (or default) value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config with flat keys, or an output file carrying a `config` object
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub width: Option<f64>,
    #[arg(long, global = true)]
    pub height: Option<f64>,
    /// Interior nodes along x
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Interior nodes along y
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub newton_tol: Option<f64>,
    #[arg(long, global = true)]
    pub path_nodes: Option<usize>,
    #[arg(long, global = true)]
    pub mp_max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub sobolev_starts: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated, ascending
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    pub mu_samples: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub sample_count: Option<usize>,
    #[arg(long, global = true)]
    pub geometry_samples: Option<usize>,
    /// Comma-separated θ values for `psi`
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub thetas: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct Echoed {
    config: RunConfig,
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))?;
    let parsed = if value.get("config").is_some() {
        serde_json::from_value::<Echoed>(value).map(|e| e.config)
    } else {
        serde_json::from_value::<RunConfig>(value)
    };
    parsed.map_err(|e| format!("bad config in {}: {e}", path.display()))
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, String> {
        let mut c = match &o.config {
            Some(path) => load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &o.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        take!(
            p, q, r, s, lambda, mu, width, height, nx, ny, tol, max_iter, newton_tol, path_nodes, mp_max_iter, eta,
            sobolev_starts, seed, out_dir, mu_samples, sample_count, geometry_samples, thetas
        );
        Ok(c)
    }

    pub fn exponents(&self) -> Result<Exponents, String> {
        Exponents::new(self.p, self.q, self.r, self.s).map_err(|e| e.to_string())
    }

    /// Exponents that admit the two-solution pipeline, with a hint when `qp ≤ 1`.
    pub fn solve_exponents(&self) -> Result<Exponents, String> {
        let e = self.exponents()?;
        if self.q * self.p <= 1.0 {
            return Err(format!(
                "q·p = {} must exceed 1 for the superlinear part to dominate; raise p or q",
                self.q * self.p
            ));
        }
        e.validate_for_solve().map_err(|e| e.to_string())?;
        Ok(e)
    }

    pub fn params(&self) -> Result<SystemParams, String> {
        SystemParams::new(self.lambda, self.mu, self.solve_exponents()?).map_err(|e| e.to_string())
    }

    pub fn domain(&self) -> Result<RectDomain, String> {
        RectDomain::new(self.width, self.height, self.nx, self.ny).map_err(|e| e.to_string())
    }

    pub fn solver_options(&self) -> Result<SolverOptions, String> {
        let o = SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            newton_tol: self.newton_tol,
            path_nodes: self.path_nodes,
            mp_max_iter: self.mp_max_iter,
            eta: self.eta,
            sobolev_starts: self.sobolev_starts,
            seed: self.seed,
            ..SolverOptions::default()
        };
        o.validate().map_err(|e| e.to_string())?;
        Ok(o)
    }
}
