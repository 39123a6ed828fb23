//! Limiting profiles of the perturbed amplitude losses and sampled audits of
//! their landscape: sign of the radial derivative far from and close to the
//! origin, curvature at the origin, localization of critical points along
//! rays, the saddle ring on the equator and strong convexity near `+-x`.
//!
//! All probes use `x = e1` and real Gaussian measurements.

pub mod quadrature;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objectives::{
    gradient, hessian_quadratic_form, origin_directional_derivative, radial_derivative, EvalContext, LossModel,
};
use crate::rng::{derive_seed, stream, Purpose};
use crate::signal_models::{random_unit, sample_gaussian_real, MeasurementEnsemble, ScalarKind, Signal};

pub use quadrature::{gauss_hermite, gauss_legendre, periodic_trapezoid, Quadrature};

/// The two perturbed amplitude models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileModel {
    Pam1,
    Pam2,
}

impl ProfileModel {
    pub fn loss(self, beta: f64) -> LossModel {
        match self {
            ProfileModel::Pam1 => LossModel::Pam1 { beta },
            ProfileModel::Pam2 => LossModel::Pam2 { beta },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileModel::Pam1 => "pam1",
            ProfileModel::Pam2 => "pam2",
        }
    }
}

impl fmt::Display for ProfileModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProfileModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pam1" => Ok(ProfileModel::Pam1),
            "pam2" => Ok(ProfileModel::Pam2),
            _ => Err(invalid(format!("landscape model must be pam1 or pam2 (got {s})"))),
        }
    }
}

/// A point `(rho, t)` of the limiting profile, `t` the cosine between `u` and `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileQuery {
    pub model: ProfileModel,
    pub beta: f64,
    pub rho: f64,
    pub t: f64,
}

impl ProfileQuery {
    pub fn new(model: ProfileModel, beta: f64, rho: f64, t: f64) -> Result<Self> {
        let q = ProfileQuery { model, beta, rho, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be positive"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho must be positive"));
        }
        if !(self.t.abs() < 1.0) {
            return Err(invalid("t must lie in (-1, 1)"));
        }
        Ok(())
    }
}

/// Profile value for `|t| <= 1`, with `X_t = t X + sqrt(1 - t^2) Y`.
fn profile_value(model: ProfileModel, beta: f64, rho: f64, t: f64, quad: &Quadrature) -> f64 {
    let st = (1.0 - t * t).max(0.0).sqrt();
    let phi = st.atan2(t);
    let kinks = [FRAC_PI_2, 3.0 * FRAC_PI_2, phi + FRAC_PI_2, phi + 3.0 * FRAC_PI_2];
    let r2 = rho * rho;
    match model {
        ProfileModel::Pam1 => quad.expect_2d(
            |x, y| {
                let xt = t * x + st * y;
                (beta + xt * xt).sqrt() * (beta * r2 + x * x).sqrt()
            },
            &kinks,
        ),
        ProfileModel::Pam2 => quad.expect_2d(
            |x, y| {
                let xt = t * x + st * y;
                (beta * r2 + r2 * xt * xt + x * x).sqrt() * (beta * r2 + 2.0 * x * x).sqrt()
            },
            &kinks,
        ),
    }
}

/// `E sqrt(b + X_t^2) sqrt(b rho^2 + X^2)` for pam1 and
/// `E sqrt(b rho^2 + rho^2 X_t^2 + X^2) sqrt(b rho^2 + 2 X^2)` for pam2.
pub fn limiting_profile(q: &ProfileQuery) -> Result<f64> {
    limiting_profile_with(q, &Quadrature::default())
}

pub fn limiting_profile_with(q: &ProfileQuery, quad: &Quadrature) -> Result<f64> {
    q.validate()?;
    Ok(profile_value(q.model, q.beta, q.rho, q.t, quad))
}

/// `E|X_t||X|` in closed form.
pub fn closed_form_abs_correlation(t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return Err(invalid("closed form needs |t| <= 1"));
    }
    let a = t.abs();
    Ok(2.0 / PI * ((FRAC_PI_2 - a.acos()) * a + (1.0 - a * a).sqrt()))
}

/// Central first and second differences, extrapolated once.
fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let f0 = f(x);
    let d = |h: f64| {
        let (p, m) = (f(x + h), f(x - h));
        ((p - m) / (2.0 * h), (p - 2.0 * f0 + m) / (h * h))
    };
    let (d1, s1) = d(h);
    let (d2, s2) = d(0.5 * h);
    ((4.0 * d2 - d1) / 3.0, (4.0 * s2 - s1) / 3.0)
}

/// `(d/dt, d^2/dt^2)` of the limiting profile.
pub fn profile_derivatives(q: &ProfileQuery) -> Result<(f64, f64)> {
    q.validate()?;
    if q.t.abs() > 1.0 - 1e-3 {
        return Err(invalid("profile derivatives need |t| <= 1 - 1e-3"));
    }
    let quad = Quadrature::default();
    Ok(richardson(|t| profile_value(q.model, q.beta, q.rho, t, &quad), q.t, 1e-4))
}

/// Second-order coefficients of the limiting loss at the minimizer, in the
/// radial (`rr`), tangential (`ss`) and mixed (`rs`) directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianLimit {
    pub g_rr: f64,
    pub g_rs: f64,
    pub g_ss: f64,
    /// The same coefficients by finite differences of the profile.
    pub g_rr_profile: f64,
    pub g_ss_profile: f64,
    /// pam2 only: `-E[X^4/(b + 2X^2)]`, the negative value the published
    /// derivation arrives at for `g_rr`.
    pub g_rr_proof_text: Option<f64>,
    /// True when that value and the computed `g_rr` disagree in sign.
    pub sign_mismatch: bool,
}

impl HessianLimit {
    /// Largest disagreement between the direct and profile routes.
    pub fn dual_gap(&self) -> f64 {
        (self.g_rr - self.g_rr_profile).abs().max((self.g_ss - self.g_ss_profile).abs())
    }
}

pub fn hessian_limit_coeffs(model: ProfileModel, beta: f64) -> Result<HessianLimit> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta must be positive"));
    }
    let quad = Quadrature::default();
    let axes = [FRAC_PI_2, 3.0 * FRAC_PI_2];
    let h_rho = |rho: f64| profile_value(model, beta, rho, 1.0, &quad);
    let h_s = |s: f64| profile_value(model, beta, 1.0, (1.0 - s * s).sqrt(), &quad);
    let (_, hss) = richardson(h_s, 0.0, 2e-3);
    let lin = 1.0 + 2.0 * beta;
    let (g_rr, g_rs, g_ss, g_rr_profile, proof) = match model {
        ProfileModel::Pam1 => {
            let g_rr = quad.expect_1d(|x| 1.0 - beta * x * x / (beta + x * x));
            let g_ss = quad.expect_1d(|x| x * x / (beta + x * x));
            let g_rs = -quad.expect_2d(|x, y| x * y + beta * x * y / (beta + x * x), &axes);
            let (_, d2) = richardson(|r| r * h_rho(r), 1.0, 1e-3);
            (g_rr, g_rs, g_ss, lin - d2, None)
        }
        ProfileModel::Pam2 => {
            let g_rr = lin
                - quad.expect_1d(|x| {
                    let x2 = x * x;
                    (2.0 * beta * beta + 5.0 * beta * x2 + x2 * x2) / (beta + 2.0 * x2)
                });
            let g_ss = quad.expect_1d(|x| x * x / (beta + 2.0 * x * x));
            let g_rs = -quad.expect_2d(|x, y| 2.0 * x * y - x * y * x * x / (beta + 2.0 * x * x), &axes);
            let (_, d2) = richardson(h_rho, 1.0, 1e-3);
            let proof = -quad.expect_1d(|x| x.powi(4) / (beta + 2.0 * x * x));
            (g_rr, g_rs, g_ss, lin - d2, Some(proof))
        }
    };
    let sign_mismatch = proof.is_some_and(|p| p.signum() != g_rr.signum());
    Ok(HessianLimit { g_rr, g_rs, g_ss, g_rr_profile, g_ss_profile: -hss, g_rr_proof_text: proof, sign_mismatch })
}

const POLAR_NODES: usize = 4096;

/// `g(theta0) = int_0^pi sqrt(g1 + g2 cos^2(th - theta0) + g3 sin^2 th) sqrt(g1 + 2 g3 sin^2 th) dth`.
pub fn polar_integral(g1: f64, g2: f64, g3: f64, theta0: f64) -> f64 {
    periodic_trapezoid(
        |th| {
            let (s, c) = ((th).sin(), (th - theta0).cos());
            (g1 + g2 * c * c + g3 * s * s).sqrt() * (g1 + 2.0 * g3 * s * s).sqrt()
        },
        0.0,
        PI,
        POLAR_NODES,
    )
}

/// One grid point of the polar monotonicity audit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub gamma3: f64,
    pub theta0: f64,
    pub g_prime: f64,
    /// `0.01 sin(2 theta0) / (1 + gamma3)`
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarReport {
    pub beta: f64,
    pub points: Vec<PolarPoint>,
    /// `g' >= -1e-8` at every point.
    pub nonnegative: bool,
    /// `g' >= bound` at every point.
    pub lower_bound: bool,
}

/// `g'(theta0)` for `gamma1 = beta`, `gamma2 = 1`, differentiated under the integral.
pub fn polar_derivative(beta: f64, gamma3: f64, theta0: f64) -> f64 {
    periodic_trapezoid(
        |th| {
            let s = th.sin();
            let c = (th - theta0).cos();
            (2.0 * (th - theta0)).sin() * (beta + 2.0 * gamma3 * s * s).sqrt()
                / (2.0 * (beta + c * c + gamma3 * s * s).sqrt())
        },
        0.0,
        PI,
        POLAR_NODES,
    )
}

/// Checks `g' >= 0` and `g' >= 0.01 sin(2 theta0) / (1 + gamma3)` on the grid.
pub fn polar_monotonicity_check(beta: f64, gamma3_grid: &[f64], theta0_grid: &[f64]) -> Result<PolarReport> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta must be positive"));
    }
    if gamma3_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(invalid("gamma3 values must be finite and nonnegative"));
    }
    if theta0_grid.iter().any(|t| !(*t >= 0.0 && *t < FRAC_PI_2)) {
        return Err(invalid("theta0 values must lie in [0, pi/2)"));
    }
    let mut points = Vec::with_capacity(gamma3_grid.len() * theta0_grid.len());
    for &g3 in gamma3_grid {
        for &th in theta0_grid {
            let g_prime = polar_derivative(beta, g3, th);
            points.push(PolarPoint { gamma3: g3, theta0: th, g_prime, bound: 0.01 * (2.0 * th).sin() / (1.0 + g3) });
        }
    }
    let nonnegative = points.iter().all(|p| p.g_prime >= -1e-8);
    let lower_bound = points.iter().all(|p| p.g_prime >= p.bound - 1e-8);
    Ok(PolarReport { beta, points, nonnegative, lower_bound })
}

/// `d/ds` of `int_0^pi sqrt(1 + b cos^2(th - s) + 2 sin^2 th) sqrt(1 + sin^2 th) dth`,
/// a variant with unbalanced coefficients whose slope can be negative.
pub fn counterexample_slope(s: f64, b: f64) -> f64 {
    periodic_trapezoid(
        |th| {
            let sn = th.sin();
            let c = (th - s).cos();
            let outer = (1.0 + sn * sn).sqrt();
            b * (2.0 * (th - s)).sin() * outer / (2.0 * (1.0 + b * c * c + 2.0 * sn * sn).sqrt())
        },
        0.0,
        PI,
        POLAR_NODES,
    )
}

/// Named regions of the landscape audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inner,
    Outer,
    Origin,
    Equator,
    RayLocalization,
    Minimizer,
    OriginHessian,
    Quadrature,
}

impl Region {
    pub const SAMPLED: [Region; 7] = [
        Region::Inner,
        Region::Outer,
        Region::Origin,
        Region::Equator,
        Region::RayLocalization,
        Region::Minimizer,
        Region::OriginHessian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Inner => "inner",
            Region::Outer => "outer",
            Region::Origin => "origin",
            Region::Equator => "equator",
            Region::RayLocalization => "ray_localization",
            Region::Minimizer => "minimizer",
            Region::OriginHessian => "origin_hessian",
            Region::Quadrature => "quadrature",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sizes and thresholds of the sampled audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub model: ProfileModel,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Random directions for the radial and origin probes.
    pub directions: usize,
    /// Random directions per point for Hessian forms.
    pub hessian_directions: usize,
    pub minimizer_points: usize,
    pub minimizer_radius: f64,
    /// pam2 radii; pam1 uses its explicit thresholds.
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub eps0: f64,
    pub eta0: f64,
    pub delta: f64,
    pub rays: usize,
    pub equator_grid: Vec<f64>,
    pub curvature_directions: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            model: ProfileModel::Pam1,
            beta: 1.0,
            n: 64,
            m: 3200,
            seed: 1,
            directions: 100,
            hessian_directions: 200,
            minimizer_points: 20,
            minimizer_radius: 0.05,
            inner_radius: 0.1,
            outer_radius: 10.0,
            eps0: 0.1,
            eta0: 1e-4,
            delta: 1e-3,
            rays: 4,
            equator_grid: (0..=10).map(|i| 0.5 + 0.1 * i as f64).collect(),
            curvature_directions: 20,
        }
    }
}

impl ProbeConfig {
    pub fn new(model: ProfileModel, beta: f64, n: usize, m: usize, seed: u64) -> Self {
        ProbeConfig { model, beta, n, m, seed, ..ProbeConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta must be positive"));
        }
        if self.n < 2 {
            return Err(invalid("landscape probes need n >= 2"));
        }
        if self.m < self.n {
            return Err(invalid(format!("landscape probes need m >= n (got m={}, n={})", self.m, self.n)));
        }
        if self.directions == 0 || self.hessian_directions == 0 || self.rays == 0 || self.minimizer_points == 0 {
            return Err(invalid("probe sample counts must be positive"));
        }
        if !(self.inner_radius > 0.0 && self.outer_radius > self.inner_radius) {
            return Err(invalid("need 0 < inner_radius < outer_radius"));
        }
        if !(self.eps0 > 0.0 && self.eta0 > 0.0 && self.eta0 < 1.0 && self.delta >= 0.0) {
            return Err(invalid("need eps0 > 0, 0 < eta0 < 1, delta >= 0"));
        }
        if !(self.minimizer_radius > 0.0) || self.equator_grid.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("radii must be positive"));
        }
        Ok(())
    }

    /// Radii below and above which the radial derivative has a fixed sign.
    pub fn radii(&self) -> (f64, f64) {
        match self.model {
            ProfileModel::Pam1 => (self.beta.sqrt() / (4.0 * (1.0 + self.beta)), 3.0 * (1.0 + self.beta).sqrt()),
            ProfileModel::Pam2 => (self.inner_radius, self.outer_radius),
        }
    }
}

/// Observed minimum and maximum of one probe's values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub name: String,
    pub region: Region,
    pub samples: usize,
    #[serde(rename = "min")]
    pub min_value: f64,
    #[serde(rename = "max")]
    pub max_value: f64,
    pub pass: bool,
}

impl ProbeEntry {
    fn from_values(name: &str, region: Region, values: &[f64], pass: impl Fn(f64, f64) -> bool) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ok = !values.is_empty() && values.iter().all(|v| !v.is_nan()) && pass(min, max);
        ProbeEntry { name: name.to_string(), region, samples: values.len(), min_value: min, max_value: max, pass: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub model: ProfileModel,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub probes: Vec<ProbeEntry>,
    pub quadrature: BTreeMap<String, f64>,
}

impl LandscapeReport {
    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|p| p.pass)
    }
}

/// Real Gaussian ensemble observing `x = e1`.
pub fn probe_ensemble(n: usize, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    sample_gaussian_real(n, m, seed)?.observe(&Signal::basis(n, 0, ScalarKind::Real))
}

fn unit_vectors(cfg: &ProbeConfig, region: Region, salt: u64, count: usize) -> Vec<Signal> {
    let mut rng = stream(derive_seed(cfg.seed, region.tag() * 1000 + salt), Purpose::Probe);
    (0..count).map(|_| random_unit(&mut rng, cfg.n, ScalarKind::Real)).collect()
}

/// Random unit vector orthogonal to `e1`.
fn equatorial(v: &Signal) -> Signal {
    let mut c = v.as_real().expect("real").to_vec();
    c[0] = 0.0;
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    Signal::Real(c.into_iter().map(|x| x / norm).collect())
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = f(lo)?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign changes of the radial derivative on a geometric grid of `[lo, hi]`,
/// each refined by bisection.
fn radial_roots(ctx: &EvalContext<'_>, uhat: &Signal, lo: f64, hi: f64) -> Result<Vec<f64>> {
    const GRID: usize = 240;
    let ratio = (hi / lo).powf(1.0 / GRID as f64);
    let rhos: Vec<f64> = (0..=GRID).map(|i| lo * ratio.powi(i as i32)).collect();
    let vals: Vec<f64> = rhos.iter().map(|&r| radial_derivative(ctx, r, uhat)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..GRID {
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
            roots.push(bisect(|r| radial_derivative(ctx, r, uhat), rhos[i], rhos[i + 1])?);
        }
    }
    Ok(roots)
}

fn min_curvature(ctx: &EvalContext<'_>, u: &Signal, dirs: &[Signal]) -> Result<f64> {
    dirs.iter().map(|xi| hessian_quadratic_form(ctx, u, xi)).try_fold(f64::INFINITY, |acc, v| Ok(acc.min(v?)))
}

/// Runs the named region of the audit against a fresh ensemble.
pub fn regime_probe(cfg: &ProbeConfig, region: Region) -> Result<Vec<ProbeEntry>> {
    cfg.validate()?;
    let ens = probe_ensemble(cfg.n, cfg.m, cfg.seed)?;
    regime_probe_on(cfg, &ens, region)
}

fn regime_probe_on(cfg: &ProbeConfig, ens: &MeasurementEnsemble, region: Region) -> Result<Vec<ProbeEntry>> {
    let ctx = EvalContext::new(cfg.model.loss(cfg.beta), ens)?;
    let (c1, c2) = cfg.radii();
    let n = cfg.n;
    let e1 = Signal::basis(n, 0, ScalarKind::Real);
    let collect = |f: &(dyn Fn(&Signal) -> Result<f64> + Sync), dirs: &[Signal]| -> Result<Vec<f64>> {
        dirs.par_iter().map(f).collect()
    };
    let entries = match region {
        Region::Inner | Region::Outer => {
            let dirs = unit_vectors(cfg, region, 0, cfg.directions);
            let rho = if region == Region::Inner { c1 } else { c2 };
            let vals = collect(&|u| radial_derivative(&ctx, rho, u), &dirs)?;
            let name = format!("radial_derivative_at_{}", region.name());
            if region == Region::Inner {
                vec![ProbeEntry::from_values(&name, region, &vals, |_, max| max < 0.0)]
            } else {
                vec![ProbeEntry::from_values(&name, region, &vals, |min, _| min > 0.0)]
            }
        }
        Region::Origin => match cfg.model {
            ProfileModel::Pam1 => {
                let dirs = unit_vectors(cfg, region, 0, cfg.directions);
                let vals = collect(&|xi| origin_directional_derivative(&ctx, xi), &dirs)?;
                let bound = -cfg.beta.sqrt();
                vec![ProbeEntry::from_values("origin_directional_derivative", region, &vals, |_, max| max < bound)]
            }
            ProfileModel::Pam2 => origin_hessian(cfg, &ctx, region)?,
        },
        Region::OriginHessian => match cfg.model {
            ProfileModel::Pam1 => {
                return Err(Error::Unsupported("pam1 has no Hessian at the origin".into()));
            }
            ProfileModel::Pam2 => origin_hessian(cfg, &ctx, region)?,
        },
        Region::Equator => {
            let rays: Vec<Signal> = unit_vectors(cfg, region, 0, cfg.rays).iter().map(equatorial).collect();
            let mut probe_dirs = vec![e1.clone()];
            probe_dirs.extend(unit_vectors(cfg, region, 1, cfg.curvature_directions));
            let mut points = Vec::new();
            for v in &rays {
                for &rho in &cfg.equator_grid {
                    points.push(v.scaled(rho));
                }
                for r in radial_roots(&ctx, v, c1, c2)? {
                    points.push(v.scaled(r));
                }
            }
            let delta = cfg.delta;
            let margin = |u: &Signal| -> Result<f64> {
                let g = gradient(&ctx, u)?.norm();
                let c = min_curvature(&ctx, u, &probe_dirs)?;
                Ok((g - delta).max(-c - delta))
            };
            let vals = collect(&margin, &points)?;
            vec![ProbeEntry::from_values("gradient_or_negative_curvature", region, &vals, |min, _| min > 0.0)]
        }
        Region::RayLocalization => {
            let t = 1.0 - cfg.eta0;
            let st = (1.0 - t * t).sqrt();
            let rays: Vec<Signal> = unit_vectors(cfg, region, 0, cfg.rays)
                .iter()
                .map(|v| {
                    let mut u = equatorial(v).scaled(st);
                    u.axpy(t, &e1).expect("same length");
                    u
                })
                .collect();
            let vals = collect(
                &|u| {
                    let roots = radial_roots(&ctx, u, c1, c2)?;
                    Ok(if roots.len() == 1 { (roots[0] - 1.0).abs() } else { f64::INFINITY })
                },
                &rays,
            )?;
            let eps0 = cfg.eps0;
            vec![ProbeEntry::from_values("critical_radius_offset", region, &vals, |_, max| max <= eps0)]
        }
        Region::Minimizer => {
            let mut rng = stream(derive_seed(cfg.seed, region.tag() * 1000 + 2), Purpose::Probe);
            let offsets = unit_vectors(cfg, region, 0, cfg.minimizer_points);
            let dirs = unit_vectors(cfg, region, 1, cfg.hessian_directions);
            let mut points = Vec::with_capacity(offsets.len());
            for (k, v) in offsets.iter().enumerate() {
                let r = cfg.minimizer_radius * rng.random::<f64>();
                let mut u = v.scaled(r);
                u.axpy(if k % 2 == 0 { 1.0 } else { -1.0 }, &e1).expect("same length");
                points.push(u);
            }
            let vals = collect(&|u| min_curvature(&ctx, u, &dirs), &points)?;
            vec![ProbeEntry::from_values("hessian_form_near_minimizer", region, &vals, |min, _| min > 0.0)]
        }
        Region::Quadrature => quadrature_probes(cfg)?.0,
    };
    Ok(entries)
}

fn origin_hessian(cfg: &ProbeConfig, ctx: &EvalContext<'_>, region: Region) -> Result<Vec<ProbeEntry>> {
    let zero = Signal::zeros(cfg.n, ScalarKind::Real);
    let dirs = unit_vectors(cfg, region, 0, cfg.hessian_directions);
    let vals: Vec<f64> = dirs.par_iter().map(|xi| hessian_quadratic_form(ctx, &zero, xi)).collect::<Result<_>>()?;
    Ok(vec![ProbeEntry::from_values("hessian_form_at_origin", region, &vals, |_, max| max < 0.0)])
}

pub const CLOSED_FORM_T: [f64; 9] = [0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 0.95, -0.95];
pub const POLAR_GAMMA3: [f64; 6] = [0.5, 1.0, 2.0, 5.0, 10.0, 50.0];

fn polar_theta_grid() -> Vec<f64> {
    (0..8).map(|i| i as f64 * PI / 16.0).collect()
}

/// Quadrature oracles for the configured model, as probes plus named values.
fn quadrature_probes(cfg: &ProbeConfig) -> Result<(Vec<ProbeEntry>, BTreeMap<String, f64>)> {
    let region = Region::Quadrature;
    let mut probes = Vec::new();
    let mut values = BTreeMap::new();
    let (model, beta) = (cfg.model, cfg.beta);

    let errs: Vec<f64> = CLOSED_FORM_T
        .iter()
        .map(|&t| {
            let q = ProfileQuery::new(ProfileModel::Pam1, 1e-12, 1.0, t)?;
            Ok((limiting_profile(&q)? - closed_form_abs_correlation(t)?).abs())
        })
        .collect::<Result<_>>()?;
    probes.push(ProbeEntry::from_values("profile_closed_form_error", region, &errs, |_, max| max <= 1e-4));

    let h = hessian_limit_coeffs(model, beta)?;
    values.insert("g_rr".into(), h.g_rr);
    values.insert("g_rs".into(), h.g_rs);
    values.insert("g_ss".into(), h.g_ss);
    values.insert("g_rr_profile".into(), h.g_rr_profile);
    values.insert("g_ss_profile".into(), h.g_ss_profile);
    if let Some(p) = h.g_rr_proof_text {
        values.insert("g_rr_proof_text".into(), p);
        values.insert("g_rr_sign_mismatch".into(), if h.sign_mismatch { 1.0 } else { 0.0 });
    }
    probes.push(ProbeEntry::from_values("hessian_limit_positive", region, &[h.g_rr, h.g_ss], |min, _| min > 0.0));
    probes.push(ProbeEntry::from_values("hessian_limit_mixed", region, &[h.g_rs.abs()], |_, max| max <= 1e-10));
    probes.push(ProbeEntry::from_values("hessian_limit_dual_gap", region, &[h.dual_gap()], |_, max| max <= 1e-5));

    let mut slopes = Vec::new();
    for t in [0.2, 0.5, 0.8, -0.2, -0.5, -0.8] {
        let (d1, _) = profile_derivatives(&ProfileQuery::new(model, beta, 1.0, t)?)?;
        slopes.push(d1 * t.signum());
    }
    let (d1, d2) = profile_derivatives(&ProfileQuery::new(model, beta, 1.0, 0.0)?)?;
    values.insert("profile_dt_at_0".into(), d1);
    values.insert("profile_dtt_at_0".into(), d2);
    values.insert("profile_at_rho1_t0".into(), limiting_profile(&ProfileQuery::new(model, beta, 1.0, 0.0)?)?);
    probes.push(ProbeEntry::from_values("profile_slope_sign", region, &slopes, |min, _| min > 0.0));
    probes.push(ProbeEntry::from_values("profile_curvature_at_0", region, &[d2], |min, _| min > 0.0));

    if model == ProfileModel::Pam2 {
        let rep = polar_monotonicity_check(beta, &POLAR_GAMMA3, &polar_theta_grid())?;
        let ratios: Vec<f64> = rep.points.iter().filter(|p| p.bound > 0.0).map(|p| p.g_prime / p.bound).collect();
        let min_gp = rep.points.iter().map(|p| p.g_prime).fold(f64::INFINITY, f64::min);
        probes.push(ProbeEntry::from_values("polar_lower_bound_ratio", region, &ratios, |min, _| min >= 1.0));
        probes.push(ProbeEntry::from_values("polar_derivative", region, &[min_gp], |min, _| min >= -1e-8));
        let flat = polar_monotonicity_check(beta, &[0.0], &polar_theta_grid())?;
        let flat_max = flat.points.iter().map(|p| p.g_prime.abs()).fold(0.0, f64::max);
        values.insert("polar_gprime_max_abs_gamma3_zero".into(), flat_max);
        values.insert("counterexample_slope_s0.3_b1".into(), counterexample_slope(0.3, 1.0));
    }
    Ok((probes, values))
}

/// Every sampled region applicable to the model, plus the quadrature oracles.
pub fn run_audit(cfg: &ProbeConfig) -> Result<LandscapeReport> {
    cfg.validate()?;
    let ens = probe_ensemble(cfg.n, cfg.m, cfg.seed)?;
    let mut probes = Vec::new();
    for region in Region::SAMPLED {
        if region == Region::OriginHessian && cfg.model == ProfileModel::Pam1 {
            continue;
        }
        probes.extend(regime_probe_on(cfg, &ens, region)?);
    }
    let (qp, quadrature) = quadrature_probes(cfg)?;
    probes.extend(qp);
    Ok(LandscapeReport { model: cfg.model, beta: cfg.beta, n: cfg.n, m: cfg.m, seed: cfg.seed, probes, quadrature })
}
