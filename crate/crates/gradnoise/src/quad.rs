//! Closed-form rate and robustness of GD and AG on quadratic objectives.
//!
//! On a quadratic with Hessian eigenvalues `lambda_i` everything decouples
//! per eigenvalue. The convergence rate is the closed-loop spectral radius;
//! the robustness index `J` (steady-state noise-to-suboptimality gain) and
//! its iterate counterpart `J'` are sums of per-eigenvalue rational terms:
//!
//! ```text
//! GD:  rho(alpha)       = max{|1 - alpha mu|, |1 - alpha L|}
//!      J(alpha)         = alpha * sum_i 1 / (2 (2 - alpha lambda_i))
//!      J'(alpha)        = alpha * sum_i 1 / (lambda_i (2 - alpha lambda_i))
//!
//! AG:  J(alpha, beta)   = sum_i u(lambda_i),
//!      u(lambda) = alpha (1 + beta (1 - alpha lambda))
//!                  / (2 (1 - beta (1 - alpha lambda)) (2 + 2 beta - alpha lambda (1 + 2 beta)))
//! ```
//!
//! and `u = (lambda / 2) u'`. AG is stable exactly on the region `S` whose
//! closure splits into three pieces `S1, S2, S3` depending on which
//! inequality binds; [`in_stability_region`] reports membership, the matched
//! piece and a signed margin. Everything here is validated elsewhere against
//! the state-space H2 computations in [`crate::linsys`].

use serde::{Deserialize, Serialize};

use crate::linsys::{AlgorithmSpec, QuadraticSpectrum};
use crate::{Error, Result};

/// Denominator magnitudes below this are treated as a diverging index.
const DENOM_GUARD: f64 = 1e-14;

/// A `(rho, J)` pair (optionally with `J'`) achieved by a parameter choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRobustnessPoint {
    /// Convergence rate, `< 1` by construction.
    pub rho: f64,
    /// Function-value robustness index.
    pub j: f64,
    /// Iterate robustness index, when the caller computed it.
    pub jprime: Option<f64>,
    /// Parameters achieving the point.
    pub params: AlgorithmSpec,
}

/// Which piece of the AG stability region a parameter pair falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionLabel {
    S1,
    S2,
    S3,
    Outside,
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionLabel::S1 => write!(f, "S1"),
            RegionLabel::S2 => write!(f, "S2"),
            RegionLabel::S3 => write!(f, "S3"),
            RegionLabel::Outside => write!(f, "OUTSIDE"),
        }
    }
}

/// Result of the AG stability-region membership test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    /// Strict interior membership; boundary points report `false`.
    pub inside: bool,
    pub region_label: RegionLabel,
    /// Signed distance in the binding inequality: positive inside, zero on
    /// the closure boundary, negative outside.
    pub margin: f64,
}

fn assert_mu_l(mu: f64, l: f64) {
    assert!(
        mu.is_finite() && l.is_finite() && 0.0 < mu && mu <= l,
        "require 0 < mu <= L, got mu = {mu}, L = {l}"
    );
}

/// GD convergence rate `max{|1 - alpha mu|, |1 - alpha L|}`.
///
/// Values `>= 1` signal instability; the caller interprets them.
///
/// # Panics
/// If `mu, L` do not satisfy `0 < mu <= L` or `alpha <= 0`.
pub fn gd_rate(alpha: f64, mu: f64, l: f64) -> f64 {
    assert_mu_l(mu, l);
    assert!(alpha.is_finite() && alpha > 0.0, "require alpha > 0, got {alpha}");
    (1.0 - alpha * mu).abs().max((1.0 - alpha * l).abs())
}

/// The rate-optimal GD stepsize `2 / (mu + L)` and its rate `(kappa-1)/(kappa+1)`.
pub fn gd_rate_optimal(mu: f64, l: f64) -> (f64, f64) {
    assert_mu_l(mu, l);
    let alpha = 2.0 / (mu + l);
    let kappa = l / mu;
    (alpha, (kappa - 1.0) / (kappa + 1.0))
}

/// The standard AG tuning `alpha = 1/L`, `beta = (sqrt(kappa)-1)/(sqrt(kappa)+1)`
/// and its rate `sqrt(1 - 1/sqrt(kappa))`.
pub fn ag_rate_optimal(mu: f64, l: f64) -> (f64, f64, f64) {
    assert_mu_l(mu, l);
    let kappa = l / mu;
    let sk = kappa.sqrt();
    let alpha = 1.0 / l;
    let beta = (sk - 1.0) / (sk + 1.0);
    (alpha, beta, (1.0 - 1.0 / sk).sqrt())
}

fn check_gd_alpha(alpha: f64, l: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 2.0 / l {
        return Err(Error::OutOfRange {
            param: "alpha",
            value: alpha,
            range: "(0, 2/L)",
        });
    }
    Ok(())
}

/// GD robustness `J(alpha) = alpha * sum_i 1/(2 (2 - alpha lambda_i))`.
pub fn gd_robustness(alpha: f64, spectrum: &QuadraticSpectrum) -> Result<f64> {
    check_gd_alpha(alpha, spectrum.l())?;
    let mut sum = 0.0;
    for &lam in spectrum.eigenvalues() {
        let denom = 2.0 - alpha * lam;
        if denom <= DENOM_GUARD {
            return Err(Error::Divergent { lambda: lam });
        }
        sum += 1.0 / (2.0 * denom);
    }
    Ok(alpha * sum)
}

/// GD iterate robustness `J'(alpha) = alpha * sum_i 1/(lambda_i (2 - alpha lambda_i))`.
pub fn gd_robustness_iterates(alpha: f64, spectrum: &QuadraticSpectrum) -> Result<f64> {
    check_gd_alpha(alpha, spectrum.l())?;
    let mut sum = 0.0;
    for &lam in spectrum.eigenvalues() {
        let denom = 2.0 - alpha * lam;
        if denom <= DENOM_GUARD {
            return Err(Error::Divergent { lambda: lam });
        }
        sum += 1.0 / (lam * denom);
    }
    Ok(alpha * sum)
}

/// Lower bound `(1 - rho(alpha)^2) * sum_i 1/(8 lambda_i) <= J(alpha)`.
///
/// Useful as a floor when sweeping the trade-off: no stepsize in `(0, 2/L)`
/// can push `J` below this at the same rate.
pub fn gd_lower_bound(alpha: f64, spectrum: &QuadraticSpectrum) -> Result<f64> {
    check_gd_alpha(alpha, spectrum.l())?;
    let rho = gd_rate(alpha, spectrum.mu(), spectrum.l());
    let sum: f64 = spectrum.eigenvalues().iter().map(|&lam| 1.0 / (8.0 * lam)).sum();
    Ok((1.0 - rho * rho) * sum)
}

/// Discriminant `Delta_lambda = (1+beta)^2 (1-alpha lambda)^2 - 4 beta (1-alpha lambda)`
/// deciding whether the per-eigenvalue AG block has real or complex modes.
pub fn ag_delta(alpha: f64, beta: f64, lambda: f64) -> f64 {
    let e = 1.0 - alpha * lambda;
    let opb = 1.0 + beta;
    opb * opb * e * e - 4.0 * beta * e
}

/// Per-eigenvalue AG rate: spectral radius of the 2x2 block at `lambda`.
pub fn ag_rate_lambda(alpha: f64, beta: f64, lambda: f64) -> f64 {
    let e = 1.0 - alpha * lambda;
    let delta = ag_delta(alpha, beta, lambda);
    if delta >= 0.0 {
        0.5 * ((1.0 + beta) * e).abs() + 0.5 * delta.sqrt()
    } else {
        // Complex pair: modulus^2 equals the block determinant beta (1 - alpha lambda).
        (beta * e).sqrt()
    }
}

/// AG convergence rate `max{rho_mu, rho_L}`.
///
/// The per-eigenvalue rate is quasiconvex in `lambda`, so the maximum over a
/// spectrum in `[mu, L]` is attained at an endpoint. Values `>= 1` signal
/// instability.
///
/// # Panics
/// If `mu, L` do not satisfy `0 < mu <= L`, or `alpha <= 0`, or `beta < 0`.
pub fn ag_rate(alpha: f64, beta: f64, mu: f64, l: f64) -> f64 {
    assert_mu_l(mu, l);
    assert!(alpha.is_finite() && alpha > 0.0, "require alpha > 0, got {alpha}");
    assert!(beta.is_finite() && beta >= 0.0, "require beta >= 0, got {beta}");
    ag_rate_lambda(alpha, beta, mu).max(ag_rate_lambda(alpha, beta, l))
}

/// Membership of `(alpha, beta)` in the AG stability region for `[mu, L]`.
///
/// The interior of the region is characterized by the strict inequalities
///
/// ```text
/// alpha > 0,    alpha L - 1 < 1 / (1 + 2 beta),    beta (1 - alpha mu) < 1,
/// ```
///
/// (the first bound binds at `lambda = L`, the second at `lambda = mu`).
/// `margin` is the smallest slack among them; points on the closure boundary
/// get `margin = 0` and are reported as outside, matching the strict rate
/// condition `rho < 1`. Inside points are labelled `S1` when
/// `alpha <= 1/L`, `S2` when `1/L < alpha <= 1/mu`, `S3` otherwise (the last
/// occurs only when `mu >= L/2`).
///
/// # Panics
/// If `mu, L` do not satisfy `0 < mu <= L`, or `alpha < 0`, or `beta < 0`.
pub fn in_stability_region(alpha: f64, beta: f64, mu: f64, l: f64) -> StabilityVerdict {
    assert_mu_l(mu, l);
    assert!(alpha.is_finite() && alpha >= 0.0, "require alpha >= 0, got {alpha}");
    assert!(beta.is_finite() && beta >= 0.0, "require beta >= 0, got {beta}");
    let slack_l = 1.0 / (1.0 + 2.0 * beta) - (alpha * l - 1.0);
    let slack_mu = 1.0 - beta * (1.0 - alpha * mu);
    let margin = alpha.min(slack_l).min(slack_mu);
    let inside = margin > 0.0;
    let region_label = if !inside {
        RegionLabel::Outside
    } else if alpha <= 1.0 / l {
        RegionLabel::S1
    } else if alpha <= 1.0 / mu {
        RegionLabel::S2
    } else {
        RegionLabel::S3
    };
    StabilityVerdict {
        inside,
        region_label,
        margin,
    }
}

/// Per-eigenvalue AG robustness term `u(lambda)` (function-value measure).
///
/// Requires both denominator factors positive, which holds strictly inside
/// the stability region; returns `Divergent` when either drops below
/// `1e-14`.
pub fn ag_u(alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    let e = 1.0 - alpha * lambda;
    let f1 = 1.0 - beta * e;
    let f2 = 2.0 + 2.0 * beta - alpha * lambda * (1.0 + 2.0 * beta);
    if f1 <= DENOM_GUARD || f2 <= DENOM_GUARD {
        return Err(Error::Divergent { lambda });
    }
    Ok(alpha * (1.0 + beta * e) / (2.0 * f1 * f2))
}

/// Per-eigenvalue AG iterate-robustness term `u'(lambda) = (2 / lambda) u(lambda)`.
pub fn ag_u_iterates(alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::InvalidArgument {
            arg: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    let e = 1.0 - alpha * lambda;
    let f1 = 1.0 - beta * e;
    let f2 = 2.0 + 2.0 * beta - alpha * lambda * (1.0 + 2.0 * beta);
    if f1 <= DENOM_GUARD || f2 <= DENOM_GUARD {
        return Err(Error::Divergent { lambda });
    }
    Ok(alpha * (1.0 + beta * e) / (lambda * f1 * f2))
}

fn require_inside(alpha: f64, beta: f64, mu: f64, l: f64) -> Result<()> {
    let verdict = in_stability_region(alpha, beta, mu, l);
    if !verdict.inside {
        return Err(Error::NotStable { alpha, beta });
    }
    Ok(())
}

/// AG robustness `J(alpha, beta) = sum_i u(lambda_i)`.
pub fn ag_robustness(alpha: f64, beta: f64, spectrum: &QuadraticSpectrum) -> Result<f64> {
    require_inside(alpha, beta, spectrum.mu(), spectrum.l())?;
    let mut sum = 0.0;
    for &lam in spectrum.eigenvalues() {
        sum += ag_u(alpha, beta, lam)?;
    }
    Ok(sum)
}

/// AG iterate robustness `J'(alpha, beta) = sum_i u'(lambda_i)`.
pub fn ag_robustness_iterates(alpha: f64, beta: f64, spectrum: &QuadraticSpectrum) -> Result<f64> {
    require_inside(alpha, beta, spectrum.mu(), spectrum.l())?;
    let mut sum = 0.0;
    for &lam in spectrum.eigenvalues() {
        sum += ag_u_iterates(alpha, beta, lam)?;
    }
    Ok(sum)
}

/// Spectrum-free upper bound `d * max{u(mu), u(L)}` on the AG robustness.
///
/// Valid for every spectrum inside `[mu, L]` because `u` is convex there, so
/// its maximum over the interval sits at an endpoint.
pub fn ag_robustness_upper(alpha: f64, beta: f64, mu: f64, l: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be positive".into(),
        });
    }
    require_inside(alpha, beta, mu, l)?;
    let u_mu = ag_u(alpha, beta, mu)?;
    let u_l = ag_u(alpha, beta, l)?;
    Ok(d as f64 * u_mu.max(u_l))
}

/// Sharper worst-case bound `(d-1) * max{u(mu), u(L)} + min{u(mu), u(L)}`.
///
/// Any admissible spectrum must contain both endpoints, so one term is
/// pinned at the smaller endpoint value. Lies between the exact `J` and
/// [`ag_robustness_upper`].
pub fn ag_robustness_upper_worst(alpha: f64, beta: f64, mu: f64, l: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be positive".into(),
        });
    }
    require_inside(alpha, beta, mu, l)?;
    let u_mu = ag_u(alpha, beta, mu)?;
    let u_l = ag_u(alpha, beta, l)?;
    Ok((d as f64 - 1.0) * u_mu.max(u_l) + u_mu.min(u_l))
}
