//! Loss functions and their derivatives.
//!
//! Every loss has the form `f(u) = (1/m) sum_j phi(s, q_j, y_j)` with
//! `s = ||u||^2` and `q_j = |<a_j, u>|^2`, so the gradient is
//!
//! ```text
//! grad f(u) = kappa * ( S u + (1/m) A^H (w .* A u) ),   S = mean_j d_s phi,  w_j = d_q phi
//! ```
//!
//! with `kappa = 2` for the true gradient of a real signal and `kappa = 1` for
//! the conjugate (Wirtinger) derivative `df/d(conj u)` of a complex one.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::signal_models::{MeasurementEnsemble, ScalarKind, Signal};

/// Truncation constants of truncated Wirtinger flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwfParams {
    pub alpha_lb: f64,
    pub alpha_ub: f64,
    pub alpha_h: f64,
}

impl Default for TwfParams {
    fn default() -> Self {
        TwfParams { alpha_lb: 0.3, alpha_ub: 5.0, alpha_h: 5.0 }
    }
}

impl TwfParams {
    /// Thresholds that keep every term.
    pub fn untruncated() -> Self {
        TwfParams { alpha_lb: 0.0, alpha_ub: f64::INFINITY, alpha_h: f64::INFINITY }
    }
}

/// Truncation constant of truncated amplitude flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TafParams {
    pub gamma: f64,
}

impl Default for TafParams {
    fn default() -> Self {
        TafParams { gamma: 0.7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LossModel {
    /// `(sqrt(b|u|^2 + |a.u|^2) - sqrt(b|u|^2 + y^2))^2`
    Pam1 { beta: f64 },
    /// `(sqrt(b|u|^2 + |a.u|^2 + y^2) - sqrt(b|u|^2 + 2y^2))^2`
    Pam2 { beta: f64 },
    /// Smoothed amplitude loss `y^2 (gamma(|a.u|/y) - 1)^2 / 2`.
    Saf { beta: f64 },
    /// `(|a.u|^2 - y^2)^2 / 2`
    WfIntensity,
    /// `(|a.u| - y)^2 / 2`
    Amplitude,
    /// Poisson loss `(|a.u|^2 - y^2 log |a.u|^2) / 2` with truncated gradient.
    Twf(TwfParams),
    /// Amplitude loss with truncated gradient.
    Taf(TafParams),
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        let pos = |b: f64| b > 0.0 && b.is_finite();
        match *self {
            LossModel::Pam1 { beta } | LossModel::Pam2 { beta } if !pos(beta) => {
                Err(invalid(format!("{} needs 0 < beta < inf (got {beta})", self.name())))
            }
            LossModel::Saf { beta } if !(pos(beta) && beta <= 0.5) => {
                Err(invalid(format!("saf needs 0 < beta <= 1/2 (got {beta})")))
            }
            LossModel::Twf(p) if !(p.alpha_lb >= 0.0 && p.alpha_ub > p.alpha_lb && p.alpha_h > 0.0) => {
                Err(invalid("twf needs 0 <= alpha_lb < alpha_ub and alpha_h > 0"))
            }
            LossModel::Taf(p) if !(p.gamma > 0.0) => Err(invalid("taf needs gamma > 0")),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossModel::Pam1 { .. } => "pam1",
            LossModel::Pam2 { .. } => "pam2",
            LossModel::Saf { .. } => "saf",
            LossModel::WfIntensity => "wf_intensity",
            LossModel::Amplitude => "amplitude",
            LossModel::Twf(_) => "twf",
            LossModel::Taf(_) => "taf",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            LossModel::Pam1 { beta } | LossModel::Pam2 { beta } | LossModel::Saf { beta } => Some(beta),
            _ => None,
        }
    }
}

/// A loss bound to an observed ensemble.
#[derive(Clone, Copy, Debug)]
pub struct EvalContext<'a> {
    pub model: LossModel,
    pub ensemble: &'a MeasurementEnsemble,
    y: &'a [f64],
}

impl<'a> EvalContext<'a> {
    pub fn new(model: LossModel, ensemble: &'a MeasurementEnsemble) -> Result<Self> {
        model.validate()?;
        let y = ensemble.observations().ok_or(Error::MissingObservations)?;
        Ok(EvalContext { model, ensemble, y })
    }

    pub fn y(&self) -> &[f64] {
        self.y
    }

    fn check(&self, u: &Signal) -> Result<()> {
        check_dim(self.ensemble.n(), u.len())?;
        if u.kind() != self.ensemble.scalar_kind() {
            return Err(Error::KindMismatch(format!("{} signal on a {} ensemble", u.kind(), self.ensemble.kind())));
        }
        if !u.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

fn kappa(kind: ScalarKind) -> f64 {
    match kind {
        ScalarKind::Real => 2.0,
        ScalarKind::Complex => 1.0,
    }
}

/// Sum of the loss terms, sum of `d_s phi`, and the weights `d_q phi`.
struct Terms {
    loss_sum: f64,
    ds_sum: f64,
    w: Vec<f64>,
}

/// `(P - Q)^2` and its partial derivatives, shared by both perturbed models.
#[inline]
fn pam_term(beta: f64, p2: f64, q2: f64) -> (f64, f64, f64) {
    let (p, q) = (p2.sqrt(), q2.sqrt());
    let d = p - q;
    if p == 0.0 || q == 0.0 {
        return (d * d, 0.0, 0.0);
    }
    (d * d, -beta * d * d / (p * q), d / p)
}

fn terms(model: &LossModel, s: f64, q: &[f64], y: &[f64]) -> Terms {
    let m = q.len();
    let mut loss_sum = 0.0;
    let mut ds_sum = 0.0;
    let mut w = vec![0.0; m];
    match *model {
        LossModel::Pam1 { beta } => {
            for j in 0..m {
                let (phi, ds, dq) = pam_term(beta, beta * s + q[j], beta * s + y[j] * y[j]);
                loss_sum += phi;
                ds_sum += ds;
                w[j] = dq;
            }
        }
        LossModel::Pam2 { beta } => {
            for j in 0..m {
                let y2 = y[j] * y[j];
                let (phi, ds, dq) = pam_term(beta, beta * s + q[j] + y2, beta * s + 2.0 * y2);
                loss_sum += phi;
                ds_sum += ds;
                w[j] = dq;
            }
        }
        LossModel::Saf { beta } => {
            for j in 0..m {
                let ya = y[j].abs();
                let r = q[j].sqrt();
                if ya == 0.0 {
                    loss_sum += 0.5 * q[j];
                    w[j] = 0.5;
                } else if r > beta * ya {
                    loss_sum += 0.5 * (r - ya) * (r - ya);
                    w[j] = 0.5 * (r - ya) / r;
                } else {
                    let g = q[j] / (2.0 * beta * ya * ya) + 0.5 * beta;
                    loss_sum += 0.5 * ya * ya * (g - 1.0) * (g - 1.0);
                    w[j] = (g - 1.0) / (2.0 * beta);
                }
            }
        }
        LossModel::WfIntensity => {
            for j in 0..m {
                let d = q[j] - y[j] * y[j];
                loss_sum += 0.5 * d * d;
                w[j] = d;
            }
        }
        LossModel::Amplitude | LossModel::Taf(_) => {
            let keep_ratio = match *model {
                LossModel::Taf(p) => 1.0 / (1.0 + p.gamma),
                _ => 0.0,
            };
            for j in 0..m {
                let r = q[j].sqrt();
                loss_sum += 0.5 * (r - y[j]) * (r - y[j]);
                if r > 0.0 && r >= keep_ratio * y[j] {
                    w[j] = 0.5 * (r - y[j]) / r;
                }
            }
        }
        LossModel::Twf(p) => {
            let norm_u = s.sqrt();
            let resid_mean = q.iter().zip(y).map(|(qj, yj)| (yj * yj - qj).abs()).sum::<f64>() / m as f64;
            for j in 0..m {
                let y2 = y[j] * y[j];
                loss_sum += if q[j] > 0.0 {
                    0.5 * (q[j] - y2 * q[j].ln())
                } else if y2 == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                if q[j] == 0.0 || norm_u == 0.0 {
                    continue;
                }
                let r = q[j].sqrt();
                let ratio = r / norm_u;
                let e1 = p.alpha_lb <= ratio && ratio <= p.alpha_ub;
                let e2 = (y2 - q[j]).abs() <= p.alpha_h * resid_mean * ratio;
                if e1 && e2 {
                    w[j] = 0.5 * (1.0 - y2 / q[j]);
                }
            }
        }
    }
    Terms { loss_sum, ds_sum, w }
}

fn evaluate(ctx: &EvalContext<'_>, u: &Signal, want_grad: bool) -> Result<(f64, Option<Signal>)> {
    ctx.check(u)?;
    let s = u.norm_sqr();
    if want_grad && s == 0.0 && matches!(ctx.model, LossModel::Pam1 { .. }) {
        return Err(Error::Nondifferentiable("pam1 is only Lipschitz at u = 0".into()));
    }
    let mut z = ctx.ensemble.forward(u)?;
    let q = z.abs_sqr();
    let t = terms(&ctx.model, s, &q, ctx.y);
    let m = q.len() as f64;
    let f = t.loss_sum / m;
    if !want_grad {
        return Ok((f, None));
    }
    z.mul_weights(&t.w);
    let mut g = ctx.ensemble.adjoint(&z)?;
    g.scale(1.0 / m);
    if t.ds_sum != 0.0 {
        g.axpy(t.ds_sum / m, u)?;
    }
    g.scale(kappa(u.kind()));
    Ok((f, Some(g)))
}

/// Loss value.
pub fn loss(ctx: &EvalContext<'_>, u: &Signal) -> Result<f64> {
    Ok(evaluate(ctx, u, false)?.0)
}

/// Gradient (real signals) or conjugate Wirtinger derivative (complex).
pub fn gradient(ctx: &EvalContext<'_>, u: &Signal) -> Result<Signal> {
    Ok(evaluate(ctx, u, true)?.1.expect("requested"))
}

/// Loss and gradient from one pass over the measurements.
pub fn loss_and_gradient(ctx: &EvalContext<'_>, u: &Signal) -> Result<(f64, Signal)> {
    let (f, g) = evaluate(ctx, u, true)?;
    Ok((f, g.expect("requested")))
}

/// Gradient of a truncated flow (`twf` or `taf`) for the given ensemble.
pub fn truncated_gradient(model: LossModel, ensemble: &MeasurementEnsemble, u: &Signal) -> Result<Signal> {
    if !matches!(model, LossModel::Twf(_) | LossModel::Taf(_)) {
        return Err(invalid("truncated_gradient expects a twf or taf model"));
    }
    gradient(&EvalContext::new(model, ensemble)?, u)
}

fn check_unit(v: &Signal) -> Result<()> {
    if (v.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid("direction must have unit norm"));
    }
    Ok(())
}

/// Derivative of `rho -> f(rho * uhat)`, summed term by term in closed form.
pub fn radial_derivative(ctx: &EvalContext<'_>, rho: f64, uhat: &Signal) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(invalid("rho must be positive"));
    }
    ctx.check(uhat)?;
    check_unit(uhat)?;
    let zz = ctx.ensemble.forward(uhat)?.abs_sqr();
    let y = ctx.y;
    let m = zz.len() as f64;
    let sum: f64 = match ctx.model {
        LossModel::Pam1 { beta } => zz
            .iter()
            .zip(y)
            .map(|(&z2, &yj)| {
                let a = (beta + z2).sqrt();
                let b = (beta * rho * rho + yj * yj).sqrt();
                2.0 * rho * (z2 + 2.0 * beta) - 2.0 * a * b - 2.0 * beta * rho * rho * a / b
            })
            .sum(),
        LossModel::Pam2 { beta } => zz
            .iter()
            .zip(y)
            .map(|(&z2, &yj)| {
                let y2 = yj * yj;
                let p = (beta * rho * rho + rho * rho * z2 + y2).sqrt();
                let q = (beta * rho * rho + 2.0 * y2).sqrt();
                2.0 * rho * ((z2 + 2.0 * beta) - (beta + z2) * q / p - beta * p / q)
            })
            .sum(),
        _ => return Err(Error::Unsupported(format!("closed-form radial derivative for {}", ctx.model.name()))),
    };
    Ok(sum / m)
}

/// One-sided directional derivative of pam1 at the origin.
pub fn origin_directional_derivative(ctx: &EvalContext<'_>, xi: &Signal) -> Result<f64> {
    let LossModel::Pam1 { beta } = ctx.model else {
        return Err(Error::Unsupported("origin directional derivative is defined for pam1 only".into()));
    };
    ctx.check(xi)?;
    check_unit(xi)?;
    let zz = ctx.ensemble.forward(xi)?.abs_sqr();
    let m = zz.len() as f64;
    Ok(-2.0 / m * zz.iter().zip(ctx.y).map(|(z2, yj)| (beta + z2).sqrt() * yj.abs()).sum::<f64>())
}

/// `xi^T (Hessian of f at u) xi` for real signals.
pub fn hessian_quadratic_form(ctx: &EvalContext<'_>, u: &Signal, xi: &Signal) -> Result<f64> {
    if ctx.ensemble.scalar_kind() != ScalarKind::Real {
        return Err(Error::Unsupported("Hessian forms are implemented for real signals only".into()));
    }
    ctx.check(u)?;
    ctx.check(xi)?;
    let s = u.norm_sqr();
    let xx = xi.norm_sqr();
    let xu = xi.dot_re(u)?;
    let au = ctx.ensemble.forward(u)?;
    let ax = ctx.ensemble.forward(xi)?;
    let (c, d) = (au.as_real().expect("real"), ax.as_real().expect("real"));
    let y = ctx.y;
    let m = c.len() as f64;
    let sum: f64 = match ctx.model {
        LossModel::Pam1 { beta } | LossModel::Pam2 { beta } => {
            let pam1 = matches!(ctx.model, LossModel::Pam1 { .. });
            if pam1 && s == 0.0 {
                return Err(Error::Nondifferentiable("pam1 is only Lipschitz at u = 0".into()));
            }
            let mut acc = 0.0;
            for j in 0..c.len() {
                let y2 = y[j] * y[j];
                let (a, b) = if pam1 {
                    (beta * s + c[j] * c[j], beta * s + y2)
                } else {
                    (beta * s + c[j] * c[j] + y2, beta * s + 2.0 * y2)
                };
                let quad = 2.0 * d[j] * d[j] + 4.0 * beta * xx;
                if a <= 0.0 || b <= 0.0 {
                    acc += quad;
                    continue;
                }
                let (ra, rb) = (a.sqrt(), b.sqrt());
                let da = 2.0 * beta * xu + 2.0 * c[j] * d[j];
                let dda = 2.0 * beta * xx + 2.0 * d[j] * d[j];
                let db = 2.0 * beta * xu;
                let ddb = 2.0 * beta * xx;
                // second directional derivative of sqrt(A) sqrt(B)
                let cross = -0.25 * da * da * rb / (a * ra) + 0.5 * dda * rb / ra + 0.5 * da * db / (ra * rb)
                    - 0.25 * db * db * ra / (b * rb)
                    + 0.5 * ddb * ra / rb;
                acc += quad - 2.0 * cross;
            }
            acc
        }
        LossModel::WfIntensity => (0..c.len()).map(|j| (6.0 * c[j] * c[j] - 2.0 * y[j] * y[j]) * d[j] * d[j]).sum(),
        LossModel::Amplitude => d.iter().map(|v| v * v).sum(),
        LossModel::Saf { beta } => (0..c.len())
            .map(|j| {
                let ya = y[j].abs();
                let d2 = d[j] * d[j];
                if ya == 0.0 || c[j].abs() > beta * ya {
                    d2
                } else {
                    let g = c[j] * c[j] / (2.0 * beta * ya * ya) + 0.5 * beta;
                    c[j] * c[j] * d2 / (beta * beta * ya * ya) + (g - 1.0) * d2 / beta
                }
            })
            .sum(),
        LossModel::Twf(_) | LossModel::Taf(_) => {
            return Err(Error::Unsupported(format!("Hessian form for {}", ctx.model.name())))
        }
    };
    Ok(sum / m)
}
