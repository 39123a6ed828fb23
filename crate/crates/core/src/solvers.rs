//! Gradient descent from a random start, spectral initialization, and the
//! baseline step rules.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::objectives::{loss_and_gradient, EvalContext, LossModel, TafParams, TwfParams};
use crate::rng::{stream, Purpose};
use crate::signal_models::{distance, random_unit, MeasurementEnsemble, ScalarKind, Signal};

/// Loss values above this count as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// i.i.d. standard Gaussian entries (N(0,1/2)+iN(0,1/2) when complex).
    RandomGaussian { seed: u64 },
    /// Scaled leading eigenvector of `(1/m) sum y_j^2 a_j a_j^H`.
    Spectral { power_iters: usize },
    /// A caller-supplied starting point.
    Given(Signal),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Step size in the method's own convention (see [`Method::step_rule`]).
    pub step_mu: f64,
    pub max_iters: usize,
    /// Stop once `||grad f(u_k)|| < grad_tol`.
    pub grad_tol: f64,
    pub init: InitMode,
    pub record_trace: bool,
    /// Also stop once the relative error reaches this value (needs the truth).
    pub rel_tol_stop: Option<f64>,
    /// Relative-error levels whose first hitting iteration and time are recorded.
    pub milestones: Vec<f64>,
}

impl SolverConfig {
    pub fn new(step_mu: f64, max_iters: usize, init: InitMode) -> SolverConfig {
        SolverConfig {
            step_mu,
            max_iters,
            grad_tol: 1e-12,
            init,
            record_trace: false,
            rel_tol_stop: None,
            milestones: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_mu > 0.0 && self.step_mu.is_finite()) {
            return Err(invalid("step_mu must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid("grad_tol must be positive"));
        }
        if let InitMode::Spectral { power_iters: 0 } = self.init {
            return Err(invalid("power_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Converged,
    MaxIters,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub rel_error: Option<f64>,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Milestone {
    pub tol: f64,
    pub iter: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub iterations_run: usize,
    /// `dist(u, x)/||x||` at the last iterate; NaN without a ground truth.
    pub final_rel_error: f64,
    pub converged: bool,
    pub status: TrialStatus,
    pub trace: Option<Vec<TracePoint>>,
    pub wall_time_s: f64,
    pub seed: u64,
    pub milestones: Vec<Milestone>,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub estimate: Signal,
}

/// Step size as a function of the iteration counter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `min(1 - exp(-(k+1)/tau0), mu_max) * scale`.
    Ramp {
        mu_max: f64,
        tau0: f64,
        scale: f64,
    },
}

impl StepRule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            StepRule::Constant(mu) => mu,
            StepRule::Ramp { mu_max, tau0, scale } => (1.0 - (-((k + 1) as f64) / tau0).exp()).min(mu_max) * scale,
        }
    }
}

/// i.i.d. Gaussian starting point.
pub fn random_init(n: usize, kind: ScalarKind, seed: u64) -> Signal {
    let mut rng = stream(seed, Purpose::Init);
    crate::signal_models::signal::gaussian_vector(&mut rng, n, kind, false)
}

/// Power iteration on `(1/m) sum y_j^2 a_j a_j^H` from a seeded start, scaled
/// by `sqrt(mean y^2)`.
pub fn spectral_init(ensemble: &MeasurementEnsemble, power_iters: usize) -> Result<Signal> {
    if power_iters == 0 {
        return Err(invalid("power_iters must be at least 1"));
    }
    let y = ensemble.observations().ok_or(Error::MissingObservations)?;
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mean_y2 = y2.iter().sum::<f64>() / y2.len() as f64;
    if mean_y2 == 0.0 {
        return Err(invalid("spectral initialization needs nonzero observations"));
    }
    let mut rng = stream(ensemble.seed(), Purpose::Power);
    let mut v = random_unit(&mut rng, ensemble.n(), ensemble.scalar_kind());
    for _ in 0..power_iters {
        let mut z = ensemble.forward(&v)?;
        z.mul_weights(&y2);
        v = ensemble.adjoint(&z)?.normalized()?;
    }
    Ok(v.scaled(mean_y2.sqrt()))
}

fn initial_point(ctx: &EvalContext<'_>, init: &InitMode) -> Result<(Signal, u64)> {
    let ens = ctx.ensemble;
    match init {
        InitMode::RandomGaussian { seed } => Ok((random_init(ens.n(), ens.scalar_kind(), *seed), *seed)),
        InitMode::Spectral { power_iters } => Ok((spectral_init(ens, *power_iters)?, ens.seed())),
        InitMode::Given(u) => Ok((u.clone(), 0)),
    }
}

/// Gradient descent with an arbitrary step rule.
pub fn descend(
    ctx: &EvalContext<'_>,
    rule: impl Fn(&Signal) -> StepRule,
    config: &SolverConfig,
    x_truth: Option<&Signal>,
) -> Result<TrialRecord> {
    config.validate()?;
    let start = Instant::now();
    let (mut u, seed) = initial_point(ctx, &config.init)?;
    let rule = rule(&u);
    let truth_norm = match x_truth {
        Some(x) => {
            let nx = x.norm();
            if nx == 0.0 {
                return Err(invalid("ground truth must be nonzero"));
            }
            Some(nx)
        }
        None => None,
    };
    let mut milestones: Vec<Milestone> = Vec::new();
    let mut pending: Vec<f64> = config.milestones.clone();
    let mut trace = config.record_trace.then(Vec::new);
    let mut k = 0usize;
    loop {
        let (f, g) = loss_and_gradient(ctx, &u)?;
        let gn = g.norm();
        let rel = match (x_truth, truth_norm) {
            (Some(x), Some(nx)) => Some(distance(&u, x)? / nx),
            _ => None,
        };
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint { iter: k, rel_error: rel, loss: f, grad_norm: gn });
        }
        if let Some(r) = rel {
            pending.retain(|&tol| {
                if r <= tol {
                    milestones.push(Milestone { tol, iter: k, elapsed_s: start.elapsed().as_secs_f64() });
                    false
                } else {
                    true
                }
            });
        }
        let diverged = !f.is_finite() || f > DIVERGENCE_LOSS || !gn.is_finite();
        let status = if diverged {
            Some(TrialStatus::Diverged)
        } else if gn < config.grad_tol || matches!((rel, config.rel_tol_stop), (Some(r), Some(t)) if r <= t) {
            Some(TrialStatus::Converged)
        } else if k >= config.max_iters {
            Some(TrialStatus::MaxIters)
        } else {
            None
        };
        if let Some(status) = status {
            milestones.sort_by(|a, b| b.tol.total_cmp(&a.tol));
            return Ok(TrialRecord {
                iterations_run: k,
                final_rel_error: rel.unwrap_or(f64::NAN),
                converged: status == TrialStatus::Converged,
                status,
                trace,
                wall_time_s: start.elapsed().as_secs_f64(),
                seed,
                milestones,
                final_loss: f,
                final_grad_norm: gn,
                estimate: u,
            });
        }
        u.axpy(-rule.at(k), &g)?;
        k += 1;
    }
}

/// Plain gradient descent `u <- u - mu grad f(u)` with a constant step.
pub fn vanilla_gd(ctx: &EvalContext<'_>, config: &SolverConfig, x_truth: Option<&Signal>) -> Result<TrialRecord> {
    let mu = config.step_mu;
    descend(ctx, |_| StepRule::Constant(mu), config, x_truth)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pam1,
    Pam2,
    Saf,
    Wf,
    Twf,
    Taf,
}

/// Power iterations used by the spectral methods.
pub const POWER_ITERS: usize = 50;

impl Method {
    pub const ALL: [Method; 6] = [Method::Pam1, Method::Pam2, Method::Saf, Method::Wf, Method::Twf, Method::Taf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pam1 => "pam1",
            Method::Pam2 => "pam2",
            Method::Saf => "saf",
            Method::Wf => "wf",
            Method::Twf => "twf",
            Method::Taf => "taf",
        }
    }

    /// Loss with the default parameters; `beta` overrides the smoothing
    /// parameter where the method has one.
    pub fn model(self, beta: Option<f64>) -> LossModel {
        match self {
            Method::Pam1 => LossModel::Pam1 { beta: beta.unwrap_or(1.0) },
            Method::Pam2 => LossModel::Pam2 { beta: beta.unwrap_or(1.0) },
            Method::Saf => LossModel::Saf { beta: beta.unwrap_or(0.5) },
            Method::Wf => LossModel::WfIntensity,
            Method::Twf => LossModel::Twf(TwfParams::default()),
            Method::Taf => LossModel::Taf(TafParams::default()),
        }
    }

    /// Default step parameter.
    pub fn default_mu(self) -> f64 {
        match self {
            Method::Pam1 => 0.6,
            Method::Pam2 => 2.5,
            Method::Saf => 1.0,
            Method::Wf => 0.2,
            Method::Twf => 0.2,
            Method::Taf => 0.6,
        }
    }

    pub fn uses_spectral_init(self) -> bool {
        matches!(self, Method::Wf | Method::Twf | Method::Taf)
    }

    /// Default configuration; random starts are keyed by `init_seed`.
    pub fn default_config(self, max_iters: usize, init_seed: u64) -> SolverConfig {
        let init = if self.uses_spectral_init() {
            InitMode::Spectral { power_iters: POWER_ITERS }
        } else {
            InitMode::RandomGaussian { seed: init_seed }
        };
        SolverConfig::new(self.default_mu(), max_iters, init)
    }

    /// Step rule for gradients in this crate's convention, where the
    /// conjugate derivative of a complex loss is half the real gradient.
    /// Configured steps act on the gradient over real coordinates.
    ///
    /// * pam1, saf: `mu`;
    /// * pam2: `mu / 2`, as `mu` itself exceeds the stability limit `2 / L`
    ///   of the Hessian at the minimizer for the step sizes in use;
    /// * wf: `min(1 - exp(-k/330), mu) / (kappa ||u0||^2)`;
    /// * twf: `4 mu / kappa`, taf: `2 mu / kappa`.
    pub fn step_rule(self, mu: f64, kind: ScalarKind, u0: &Signal) -> StepRule {
        let kappa = match kind {
            ScalarKind::Real => 2.0,
            ScalarKind::Complex => 1.0,
        };
        match self {
            Method::Pam1 | Method::Saf => StepRule::Constant(2.0 * mu / kappa),
            Method::Pam2 => StepRule::Constant(mu / kappa),
            Method::Wf => {
                StepRule::Ramp { mu_max: mu, tau0: 330.0, scale: 1.0 / (kappa * u0.norm_sqr().max(f64::MIN_POSITIVE)) }
            }
            Method::Twf => StepRule::Constant(4.0 * mu / kappa),
            Method::Taf => StepRule::Constant(2.0 * mu / kappa),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Run `method` with an explicit loss model (for parameter overrides).
pub fn run_method(
    method: Method,
    model: LossModel,
    ensemble: &MeasurementEnsemble,
    config: &SolverConfig,
    x_truth: Option<&Signal>,
) -> Result<TrialRecord> {
    let ctx = EvalContext::new(model, ensemble)?;
    let kind = ensemble.scalar_kind();
    let mu = config.step_mu;
    descend(&ctx, |u0| method.step_rule(mu, kind, u0), config, x_truth)
}

/// Run `method` with its default loss parameters.
pub fn run_solver(
    method: Method,
    ensemble: &MeasurementEnsemble,
    config: &SolverConfig,
    x_truth: Option<&Signal>,
) -> Result<TrialRecord> {
    run_method(method, method.model(None), ensemble, config, x_truth)
}
