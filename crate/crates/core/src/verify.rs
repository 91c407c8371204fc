//! Sampling suites for the pointwise inequalities of `ψ`, `Ψ` and for the energy geometry
//! around the origin.
//!
//! Every suite is deterministic in its seed. A report's `worst_margin` is the smallest
//! normalized slack seen; a sample counts as a violation when that slack is below the
//! suite's tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::{w_norm_slice, RectDomain};
use crate::nonlinearity::{
    big_psi_from, eval_g, eval_psi, growth_constants, threshold_theta_mu, Exponents, SystemParams, PSI_TOL,
};
use crate::solvers::{negative_energy_seed, BallGeometry};

/// Relative slack allowed for the inequality suites.
pub const SLACK: f64 = 1e-12;
/// Roundtrip tolerance `|g(μ, ψ(μ, θ)) − θ| ≤ ROUNDTRIP_TOL · max(1, |θ|)`.
pub const ROUNDTRIP_TOL: f64 = 1e-10;
const MAX_RECORDED: usize = 32;
/// One sample in this many is drawn at `μ = 0`.
const MU_ZERO_EVERY: usize = 16;
const LOG_LO: f64 = -6.0 * std::f64::consts::LN_10;
const LOG_HI: f64 = 6.0 * std::f64::consts::LN_10;
const RANDOM_MODES: usize = 4;

/// Where a violation occurred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Locus {
    Scalar { mu: f64, theta: f64 },
    Pair { mu: f64, theta1: f64, theta2: f64 },
    /// `hash` is FNV-1a over the bit patterns of the field values.
    Field { hash: String, lambda: f64, mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub locus: Locus,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property_id: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub empirical_constant: Option<f64>,
    /// The first few violations.
    pub failures: Vec<Failure>,
}

impl PropertyReport {
    fn new(id: &str) -> Self {
        PropertyReport {
            property_id: id.to_string(),
            samples: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            empirical_constant: None,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records one check; `tol` is the most negative margin still accepted.
    fn record(&mut self, margin: f64, tol: f64, locus: impl FnOnce() -> Locus, detail: &str) {
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        self.worst_margin = self.worst_margin.min(margin);
        if margin < tol {
            self.violations += 1;
            if self.failures.len() < MAX_RECORDED {
                self.failures.push(Failure {
                    locus: locus(),
                    margin,
                    detail: detail.to_string(),
                });
            }
        }
    }
}

fn check_count(sample_count: usize) -> Result<()> {
    if sample_count == 0 {
        return Err(Error::InvalidParameters("sample_count must be at least 1".into()));
    }
    Ok(())
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(LOG_LO..LOG_HI).exp()
}

fn signed(rng: &mut ChaCha8Rng) -> f64 {
    let t = log_uniform(rng);
    if rng.gen_bool(0.5) {
        t
    } else {
        -t
    }
}

fn sample_mu(rng: &mut ChaCha8Rng, i: usize) -> f64 {
    let mu = log_uniform(rng);
    if i.is_multiple_of(MU_ZERO_EVERY) {
        0.0
    } else {
        mu
    }
}

/// `|g(μ, ψ(μ, θ)) − θ| ≤ 1e−10 · max(1, |θ|)` over log-uniform `(μ, θ)`.
pub fn check_psi_roundtrip(exps: &Exponents, sample_count: usize, seed: u64) -> Result<PropertyReport> {
    check_count(sample_count)?;
    exps.check_positive()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertyReport::new("psi-roundtrip");
    for i in 0..sample_count {
        let mu = sample_mu(&mut rng, i);
        let theta = signed(&mut rng);
        let margin = match eval_psi(mu, theta, exps, PSI_TOL) {
            Ok(z) => ROUNDTRIP_TOL - (eval_g(mu, z, exps) - theta).abs() / theta.abs().max(1.0),
            Err(_) => f64::NEG_INFINITY,
        };
        rep.samples += 1;
        rep.record(margin, 0.0, || Locus::Scalar { mu, theta }, "roundtrip");
    }
    Ok(rep)
}

/// `q/(q+1) ψθ ≥ Ψ ≥ s/(s+1) ψθ`, with equality on the left at `μ = 0`.
pub fn check_comparison(exps: &Exponents, sample_count: usize, seed: u64) -> Result<PropertyReport> {
    check_count(sample_count)?;
    exps.check_positive()?;
    let (q, s) = (exps.q, exps.s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertyReport::new("comparison");
    rep.samples += 1;
    let zero = eval_psi(0.5, 0.0, exps, PSI_TOL).map_or(f64::NAN, |z| big_psi_from(0.5, 0.0, z, exps));
    rep.record(-zero.abs(), 0.0, || Locus::Scalar { mu: 0.5, theta: 0.0 }, "theta = 0");
    for i in 0..sample_count {
        let mu = sample_mu(&mut rng, i);
        let theta = signed(&mut rng);
        rep.samples += 1;
        let Ok(z) = eval_psi(mu, theta, exps, PSI_TOL) else {
            rep.record(f64::NAN, 0.0, || Locus::Scalar { mu, theta }, "psi failed");
            continue;
        };
        let pt = z * theta;
        let big = big_psi_from(mu, theta, z, exps);
        let upper = (q / (q + 1.0) * pt - big) / pt;
        let lower = (big - s / (s + 1.0) * pt) / pt;
        rep.record(upper, -SLACK, || Locus::Scalar { mu, theta }, "upper comparison");
        rep.record(lower, -SLACK, || Locus::Scalar { mu, theta }, "lower comparison");
        if mu == 0.0 {
            rep.record(-upper.abs(), -SLACK, || Locus::Scalar { mu, theta }, "equality at mu = 0");
        }
    }
    Ok(rep)
}

/// `|θ|^{(q+1)/q} ≥ ψθ` everywhere, equality at `μ = 0`, and for `q > 1`, `μ > 0` the
/// piecewise lower bounds split at `θ_μ`.
pub fn check_growth(exps: &Exponents, sample_count: usize, seed: u64) -> Result<PropertyReport> {
    check_count(sample_count)?;
    exps.check_positive()?;
    let consts = growth_constants(exps)?;
    let (q, s) = (exps.q, exps.s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertyReport::new("growth");
    for i in 0..sample_count {
        let mu = sample_mu(&mut rng, i);
        let theta = signed(&mut rng);
        rep.samples += 1;
        let Ok(z) = eval_psi(mu, theta, exps, PSI_TOL) else {
            rep.record(f64::NAN, 0.0, || Locus::Scalar { mu, theta }, "psi failed");
            continue;
        };
        let pt = z * theta;
        let t = theta.abs();
        let top = t.powf((q + 1.0) / q);
        rep.record((top - pt) / top, -SLACK, || Locus::Scalar { mu, theta }, "upper growth");
        if mu == 0.0 {
            rep.record(-((top - pt) / top).abs(), -SLACK, || Locus::Scalar { mu, theta }, "equality at mu = 0");
        } else if q > 1.0 {
            let theta_mu = threshold_theta_mu(mu, exps)?.theta_mu;
            let (bound, what) = if t >= theta_mu {
                (consts.c_hat_big * top, "lower growth above theta_mu")
            } else {
                (mu.powf(-1.0 / s) * consts.c_hat_small * t.powf((s + 1.0) / s), "lower growth below theta_mu")
            };
            rep.record((pt - bound) / pt, -SLACK, || Locus::Scalar { mu, theta }, what);
        }
    }
    Ok(rep)
}

/// Positivity of `(ψ₁ − ψ₂)(θ₁ − θ₂)(μ^{1/s} + |ψ₁|^{(q−s)/s} + |ψ₂|^{(q−s)/s}) / |θ₁ − θ₂|^{(s+1)/s}`.
///
/// The smallest ratio seen is reported as `empirical_constant`; every fourth pair is
/// antisymmetric, `θ₂ = −θ₁`.
pub fn check_strong_monotonicity(exps: &Exponents, sample_count: usize, seed: u64) -> Result<PropertyReport> {
    check_count(sample_count)?;
    exps.check_positive()?;
    let (q, s) = (exps.q, exps.s);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertyReport::new("strong-monotonicity");
    let mut inf = f64::INFINITY;
    for i in 0..sample_count {
        let mu = sample_mu(&mut rng, i);
        let theta1 = signed(&mut rng);
        let theta2 = if i % 4 == 1 { -theta1 } else { signed(&mut rng) };
        if theta1 == theta2 {
            continue;
        }
        rep.samples += 1;
        let locus = || Locus::Pair { mu, theta1, theta2 };
        let (Ok(z1), Ok(z2)) = (eval_psi(mu, theta1, exps, PSI_TOL), eval_psi(mu, theta2, exps, PSI_TOL)) else {
            rep.record(f64::NAN, 0.0, locus, "psi failed");
            continue;
        };
        let e = (q - s) / s;
        let den = mu.powf(1.0 / s) + z1.abs().powf(e) + z2.abs().powf(e);
        let d = theta1 - theta2;
        let ratio = (z1 - z2) * d * den / d.abs().powf((s + 1.0) / s);
        if ratio.is_finite() {
            inf = inf.min(ratio);
        }
        // positivity is the property; a zero or non-finite ratio fails
        let margin = if ratio.is_finite() && ratio > 0.0 { ratio } else { f64::NEG_INFINITY };
        rep.record(margin, f64::MIN_POSITIVE, locus, "ratio not positive");
    }
    rep.empirical_constant = inf.is_finite().then_some(inf);
    Ok(rep)
}

/// Parameters of the energy-geometry suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryBox {
    pub exps: Exponents,
    /// Constants fixing the annulus `r0 ≤ ‖w‖_W ≤ R0` and the box `[0, λ0] × [0, μ0]`.
    pub geom: BallGeometry,
    /// Decreasing λ values for the negative-energy seed.
    pub ladder: Vec<f64>,
    pub ladder_mu: f64,
}

fn field_hash(w: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in w {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// `J > 0` for random fields in the annulus with `(λ, μ)` in the box, and `J < 0` with
/// decreasing `W`-norms along the seed ladder.
///
/// The annulus margin is `J / |convex part|`; the ladder margins are `−J / |convex part|`
/// and the relative norm decrease.
pub fn check_energy_geometry(
    cfg: &GeometryBox,
    dom: &RectDomain,
    sample_count: usize,
    seed: u64,
) -> Result<PropertyReport> {
    check_count(sample_count)?;
    cfg.exps.validate_for_solve()?;
    dom.validate()?;
    let g = &cfg.geom;
    if !(g.r0 > 0.0 && g.r0 < g.big_r0 && g.lambda0 > 0.0 && g.mu0 > 0.0) {
        return Err(Error::InvalidParameters("geometry needs 0 < r0 < R0 and a non-empty box".into()));
    }
    if cfg.ladder.windows(2).any(|w| !(w[1] < w[0])) || cfg.ladder.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameters("ladder must be positive and strictly decreasing".into()));
    }
    let q = cfg.exps.q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PropertyReport::new("energy-geometry");
    let modes: Vec<Vec<f64>> = (1..=RANDOM_MODES)
        .flat_map(|kx| (1..=RANDOM_MODES).map(move |ky| (kx, ky)))
        .map(|(kx, ky)| dom.sine_mode(kx, ky).into_values())
        .collect();
    for _ in 0..sample_count {
        let mut w = vec![0.0; dom.len()];
        for m in &modes {
            let c: f64 = rng.gen_range(-1.0..1.0);
            w.iter_mut().zip(m).for_each(|(a, b)| *a += c * b);
        }
        let radius = rng.gen_range(g.r0..=g.big_r0);
        let lambda = rng.gen_range(0.0..=g.lambda0);
        let mu = rng.gen_range(0.0..=g.mu0);
        let n = w_norm_slice(dom, &w, q);
        w.iter_mut().for_each(|a| *a *= radius / n);
        let func = Functional::new(&SystemParams::new(lambda, mu, cfg.exps)?, dom)?;
        let rpt = func.report(&w)?;
        rep.samples += 1;
        rep.record(
            rpt.value / rpt.convex_part.abs().max(f64::MIN_POSITIVE),
            f64::MIN_POSITIVE,
            || Locus::Field { hash: field_hash(&w), lambda, mu },
            "energy not positive on the annulus",
        );
    }
    let mut prev_norm = f64::INFINITY;
    for &lambda in &cfg.ladder {
        let w = negative_energy_seed(lambda, q, cfg.exps.r, dom);
        let func = Functional::new(&SystemParams::new(lambda, cfg.ladder_mu, cfg.exps)?, dom)?;
        let rpt = func.report(&w)?;
        let norm = w_norm_slice(dom, &w, q);
        let locus = || Locus::Field { hash: field_hash(&w), lambda, mu: cfg.ladder_mu };
        rep.samples += 1;
        rep.record(
            -rpt.value / rpt.convex_part.abs().max(f64::MIN_POSITIVE),
            f64::MIN_POSITIVE,
            locus,
            "seed energy not negative",
        );
        if prev_norm.is_finite() {
            rep.record((prev_norm - norm) / prev_norm, f64::MIN_POSITIVE, locus, "seed norm not decreasing");
        }
        prev_norm = norm;
    }
    Ok(rep)
}

/// The scalar suites for one exponent set, in a fixed order.
pub fn scalar_suites(exps: &Exponents, sample_count: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    let mut out = vec![
        check_psi_roundtrip(exps, sample_count, seed)?,
        check_comparison(exps, sample_count, seed)?,
    ];
    if exps.q > exps.s && exps.s < 1.0 {
        out.push(check_growth(exps, sample_count, seed)?);
    }
    out.push(check_strong_monotonicity(exps, sample_count, seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{ball_geometry_with, SobolevConstants};

    fn exps(q: f64, s: f64) -> Exponents {
        Exponents::new(3.0, q, 0.25, s).unwrap()
    }

    #[test]
    fn suites_pass_and_are_deterministic() {
        for (q, s) in [(2.0, 0.5), (3.0, 0.25), (0.8, 0.3)] {
            let e = exps(q, s);
            let a = scalar_suites(&e, 2000, 7).unwrap();
            let b = scalar_suites(&e, 2000, 7).unwrap();
            assert_eq!(a, b);
            for rep in &a {
                assert!(rep.passed(), "{rep:?}");
                assert!(rep.samples >= 2000);
            }
        }
    }

    #[test]
    fn growth_constants_for_q2_s_half() {
        let g = growth_constants(&exps(2.0, 0.5)).unwrap();
        assert!((g.c_tilde_big - 13.0).abs() < 1e-14);
        assert!((g.c_hat_big - 13f64.powf(-0.5)).abs() < 1e-14);
        assert!((g.c_hat_small - (13.0f64 / 12.0).powi(-2)).abs() < 1e-14);
    }

    #[test]
    fn antisymmetric_pairs_give_positive_ratio() {
        let e = exps(2.0, 0.5);
        let rep = check_strong_monotonicity(&e, 400, 3).unwrap();
        assert!(rep.passed());
        assert!(rep.empirical_constant.unwrap() > 0.0);
    }

    #[test]
    fn wrong_inequality_is_caught() {
        let mut rep = PropertyReport::new("x");
        rep.record(-1.0, 0.0, || Locus::Scalar { mu: 1.0, theta: 2.0 }, "forced");
        rep.record(f64::NAN, 0.0, || Locus::Scalar { mu: 1.0, theta: 3.0 }, "nan");
        assert_eq!(rep.violations, 2);
        assert_eq!(rep.worst_margin, f64::NEG_INFINITY);
        assert_eq!(rep.failures.len(), 2);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(check_comparison(&exps(2.0, 0.5), 0, 1).is_err());
    }

    #[test]
    fn energy_geometry_small_grid() {
        let dom = RectDomain::unit_square(11).unwrap();
        let e = exps(2.0, 0.5);
        let sob = SobolevConstants::estimate(&dom, &e, 2, 0).unwrap();
        let geom = ball_geometry_with(0.05, &e, &sob, 0.1).unwrap();
        let cfg = GeometryBox { exps: e, geom, ladder: vec![0.05, 0.025, 0.0125], ladder_mu: 0.05 };
        let rep = check_energy_geometry(&cfg, &dom, 50, 1).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.samples, 53);
        let bad = GeometryBox { ladder: vec![0.01, 0.02], ..cfg };
        assert!(check_energy_geometry(&bad, &dom, 5, 1).is_err());
    }
}
