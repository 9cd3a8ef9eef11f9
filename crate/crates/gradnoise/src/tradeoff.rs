//! Tuning the rate/robustness trade-off.
//!
//! Two formulations are supported. The penalized problem
//!
//! ```text
//! minimize  F_tau(params) = J(params) + tau / (1 - rho(params)^2)
//! ```
//!
//! scalarizes the conflict between noise amplification `J` and convergence
//! rate `rho`; sweeping `tau` traces a rate-robustness curve. For GD the
//! stationarity condition clears into a polynomial in `alpha`, so the exact
//! optimum is found by root isolation; for AG the optimizer is a stability
//! region grid with deterministic coordinate-descent refinement.
//!
//! The constrained formulation fixes a rate budget `rho = (1 + eps) rho_bar`
//! relative to the best achievable rate `rho_bar` of each method and picks
//! the parameters with the best robustness guarantee at that budget, using
//! the closed-form stepsize families `alpha_eps` (and `beta_eps` for AG).
//!
//! [`pareto_curve`] packages either sweep into a dominance-filtered curve.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linsys::{AlgorithmSpec, Method, QuadraticSpectrum};
use crate::quad::{self, RateRobustnessPoint};
use crate::{Error, Result};

/// Update tolerance for the Aberth root iteration.
const ABERTH_TOL: f64 = 1e-12;
/// Iteration cap for the Aberth root iteration.
const ABERTH_MAX_ITER: usize = 1000;
/// Roots with imaginary part below this (relative to |root|+1) count as real.
const REAL_ROOT_IM_TOL: f64 = 1e-9;
/// Largest spectrum size for the exact polynomial trade-off path.
const EXACT_PATH_MAX_D: usize = 8;
/// Relative objective change below which grid refinement stops.
const REFINE_REL_TOL: f64 = 1e-10;
/// Momentum values are never pushed beyond this during refinement.
const BETA_CAP: f64 = 10.0;

/// Which trade-off formulation a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TradeoffMode {
    TauPenalized,
    EpsConstrained,
}

/// One trade-off instance as configured by a caller (one tau or one eps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffConfig {
    pub mode: TradeoffMode,
    /// Penalty weight, used when `mode == TauPenalized`.
    pub tau: f64,
    /// Rate offset, used when `mode == EpsConstrained`.
    pub eps: f64,
    /// Grid counts for the AG optimizers.
    pub grid_alpha: usize,
    pub grid_beta: usize,
}

/// How the `J` values of a curve were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Exact closed forms on a fully known quadratic spectrum.
    ExactQuad,
    /// Dimension-scaled endpoint bound `d * max{u(mu), u(L)}`.
    UpperBound,
    /// Certified bound from the matrix-inequality SDP.
    SdpCert,
}

/// A rate-robustness curve, sorted by rate and Pareto-filtered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoCurve {
    pub points: Vec<RateRobustnessPoint>,
    pub method: Method,
    pub provenance: Provenance,
}

/// Spectrum knowledge available to a sweep: the full eigenvalue list, or
/// just its envelope `(mu, L, d)`.
#[derive(Debug, Clone)]
pub enum SpectrumInput<'a> {
    Full(&'a QuadraticSpectrum),
    Summary { mu: f64, l: f64, d: usize },
}

impl SpectrumInput<'_> {
    fn mu(&self) -> f64 {
        match self {
            SpectrumInput::Full(s) => s.mu(),
            SpectrumInput::Summary { mu, .. } => *mu,
        }
    }

    fn l(&self) -> f64 {
        match self {
            SpectrumInput::Full(s) => s.l(),
            SpectrumInput::Summary { l, .. } => *l,
        }
    }

    fn d(&self) -> usize {
        match self {
            SpectrumInput::Full(s) => s.d(),
            SpectrumInput::Summary { d, .. } => *d,
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomial arithmetic (coefficients lowest degree first).

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Vec<f64>, p: &[f64], scale: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (i, &pi) in p.iter().enumerate() {
        acc[i] += scale * pi;
    }
}

fn poly_eval_complex(coeffs_highest_first: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs_highest_first {
        acc = acc * z + c;
    }
    acc
}

fn poly_eval_derivative_complex(coeffs_highest_first: &[f64], z: Complex64) -> Complex64 {
    let n = coeffs_highest_first.len() - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs_highest_first.iter().take(n).enumerate() {
        acc = acc * z + (n - k) as f64 * c;
    }
    acc
}

/// All complex roots of a real polynomial, coefficients highest degree
/// first.
///
/// Degree 1 and 2 are closed-form; higher degrees use the Aberth-Ehrlich
/// simultaneous iteration started on a circle between the root-modulus
/// bounds, with a deterministic perturbation to break symmetry. Multiple
/// roots come back as repeated (clustered) values.
///
/// Errors: `DegreeZero` when fewer than two coefficients or a vanishing
/// leading coefficient leave nothing to solve; `NoConvergence` if the
/// iteration cap (1000) is hit.
pub fn poly_roots(coefficients: &[f64]) -> Result<Vec<Complex64>> {
    if coefficients.len() < 2 || coefficients[0].abs() <= 1e-300 {
        return Err(Error::DegreeZero);
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument {
            arg: "coefficients",
            reason: "must be finite".into(),
        });
    }
    // Monic normalization.
    let lead = coefficients[0];
    let mut monic: Vec<f64> = coefficients.iter().map(|c| c / lead).collect();
    // Deflate roots at zero (exact trailing zeros from symbolic construction).
    let mut roots = Vec::new();
    while monic.len() > 1 && *monic.last().expect("nonempty") == 0.0 {
        roots.push(Complex64::new(0.0, 0.0));
        monic.pop();
    }
    let n = monic.len() - 1;
    match n {
        0 => {}
        1 => roots.push(Complex64::new(-monic[1], 0.0)),
        2 => {
            let (b, c) = (monic[1], monic[2]);
            let disc = Complex64::new(b * b - 4.0 * c, 0.0).sqrt();
            // Pick the sign that avoids cancellation in the larger root.
            let q = if b >= 0.0 { -0.5 * (b + disc.re) } else { -0.5 * (b - disc.re) };
            if disc.im == 0.0 && q != 0.0 {
                roots.push(Complex64::new(q, 0.0));
                roots.push(Complex64::new(c / q, 0.0));
            } else {
                roots.push((-b + disc) / 2.0);
                roots.push((-b - disc) / 2.0);
            }
        }
        _ => roots.extend(aberth(&monic)?),
    }
    Ok(roots)
}

/// Aberth-Ehrlich iteration on a monic polynomial of degree >= 3 with
/// nonzero constant term.
/// Forward-error bound for Horner evaluation at radius `r`, a small multiple
/// of `eps * sum_i |c_i| r^(deg-i)`.
fn noise_floor(monic: &[f64], r: f64) -> f64 {
    let s = monic.iter().fold(0.0_f64, |acc, &c| acc * r + c.abs());
    4.0 * (monic.len() - 1) as f64 * f64::EPSILON * s
}

fn aberth(monic: &[f64]) -> Result<Vec<Complex64>> {
    let n = monic.len() - 1;
    let max_tail = monic[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let upper = 1.0 + max_tail;
    let a_n = monic[n].abs();
    let max_head = monic[..n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let lower = (a_n / (1.0 + max_head)).max(1e-12 * upper);
    let radius = (upper * lower).sqrt();

    // Deterministic start: evenly spread angles with a small per-index
    // perturbation so symmetric configurations cannot stall.
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let jitter = ((k as u64).wrapping_mul(2654435769) >> 56) as f64 / 256.0;
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / n as f64 + 0.01 * jitter;
            let r = radius * (1.0 + 0.05 * (jitter - 0.5));
            Complex64::from_polar(r, theta)
        })
        .collect();

    let mut settled = vec![false; n];
    for _iter in 0..ABERTH_MAX_ITER {
        let mut max_step = 0.0_f64;
        for k in 0..n {
            if settled[k] {
                continue;
            }
            let p = poly_eval_complex(monic, z[k]);
            // Accept a point whose residual sits at the evaluation noise
            // floor: it is then an exact root of a coefficient perturbation
            // a few ulps wide, the best any further update can deliver.
            // Without this, clustered or near-multiple roots jiggle at the
            // floor forever and the update criterion below never fires.
            if p.norm() <= noise_floor(monic, z[k].norm()) {
                settled[k] = true;
                continue;
            }
            let mut dp = poly_eval_derivative_complex(monic, z[k]);
            if dp.norm() == 0.0 {
                // Nudge off the critical point; next pass recovers.
                dp = Complex64::new(f64::EPSILON, f64::EPSILON);
            }
            let w = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        s += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * s;
            let correction = if denom.norm() < 1e-30 { w } else { w / denom };
            z[k] -= correction;
            let rel = correction.norm() / (1.0 + z[k].norm());
            max_step = max_step.max(rel);
        }
        if max_step <= ABERTH_TOL {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence {
        what: "aberth root finder",
        iterations: ABERTH_MAX_ITER,
    })
}

// ---------------------------------------------------------------------------
// GD penalized trade-off: exact polynomial path.

/// Collapses a sorted eigenvalue list into distinct (value, multiplicity)
/// pairs, merging values within 1e-9 relative of their group head. Repeated
/// factors in the cleared-denominator polynomial would otherwise plant
/// multiple roots the root finder cannot pin down to tolerance.
fn distinct_weighted(eigs: &[f64]) -> Vec<(f64, f64)> {
    let tol = 1e-9 * eigs.last().copied().unwrap_or(0.0);
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for &lam in eigs {
        match groups.last_mut() {
            Some((head, weight)) if lam - *head <= tol => *weight += 1.0,
            _ => groups.push((lam, 1.0)),
        }
    }
    groups
}

/// Builds one stationarity polynomial for the penalized GD problem
/// (coefficients lowest degree first), over distinct weighted eigenvalues.
///
/// The condition `F_tau'(alpha) = 0` on the branch where the rate binds at
/// `lambda_bind` reads
///
/// ```text
/// sum_i w_i/(2 - alpha lambda_i)^2
///   + 2 tau (alpha lambda_bind - 1) / (lambda_bind alpha^2 (2 - alpha lambda_bind)^2) = 0
/// ```
///
/// and multiplying through by `lambda_bind alpha^2 / 2 * prod_j (2 - alpha lambda_j)^2`
/// clears every denominator (the binding factor cancels one square in the
/// product).
fn gd_branch_polynomial(tau: f64, groups: &[(f64, f64)], bind_index: usize) -> Vec<f64> {
    let squares: Vec<Vec<f64>> = groups
        .iter()
        .map(|&(lam, _)| {
            let q = [2.0, -lam];
            poly_mul(&q, &q)
        })
        .collect();
    let lambda_bind = groups[bind_index].0;

    let mut poly = vec![0.0];
    // (lambda_bind alpha^2 / 2) * sum_i w_i prod_{j != i} (2 - alpha lambda_j)^2
    for (i, &(_, weight)) in groups.iter().enumerate() {
        let mut prod = vec![1.0];
        for (j, sq) in squares.iter().enumerate() {
            if j != i {
                prod = poly_mul(&prod, sq);
            }
        }
        // Multiply by alpha^2: shift degree by two.
        let mut shifted = vec![0.0, 0.0];
        shifted.extend_from_slice(&prod);
        poly_add_scaled(&mut poly, &shifted, 0.5 * lambda_bind * weight);
    }
    // tau (alpha lambda_bind - 1) * prod_{j != bind} (2 - alpha lambda_j)^2
    let mut prod = vec![1.0];
    for (j, sq) in squares.iter().enumerate() {
        if j != bind_index {
            prod = poly_mul(&prod, sq);
        }
    }
    let linear = poly_mul(&[-1.0, lambda_bind], &prod);
    poly_add_scaled(&mut poly, &linear, tau);
    poly
}

fn penalized_gd_objective(tau: f64, alpha: f64, spectrum: &QuadraticSpectrum) -> Option<f64> {
    let j = quad::gd_robustness(alpha, spectrum).ok()?;
    let rho = quad::gd_rate(alpha, spectrum.mu(), spectrum.l());
    if rho >= 1.0 {
        return None;
    }
    Some(j + tau / (1.0 - rho * rho))
}

/// Exact minimizer of `F_tau(alpha) = J(alpha) + tau/(1 - rho(alpha)^2)` for
/// GD over `alpha in (0, 2/L)`.
///
/// Candidates are the rate-optimal stepsize `2/(mu+L)` plus the real roots
/// of the two branch stationarity polynomials that satisfy their branch's
/// side condition (which of `|1 - alpha mu|`, `|1 - alpha L|` binds). Ties
/// break toward the smaller stepsize.
///
/// Errors: `ExactPathUnsupported` for spectra with more than 8 eigenvalues
/// (use the grid optimizers instead), `NoInteriorCandidate` if no candidate
/// admits a finite objective (cannot happen for valid inputs; kept as a
/// defensive check).
pub fn gd_optimal_stepsize_tau(tau: f64, spectrum: &QuadraticSpectrum) -> Result<RateRobustnessPoint> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "tau",
            reason: format!("must be finite and nonnegative, got {tau}"),
        });
    }
    let d = spectrum.d();
    if d > EXACT_PATH_MAX_D {
        return Err(Error::ExactPathUnsupported {
            max: EXACT_PATH_MAX_D,
            got: d,
        });
    }
    let (mu, l) = (spectrum.mu(), spectrum.l());
    let (alpha_bar, _) = quad::gd_rate_optimal(mu, l);
    let hi = 2.0 / l;

    let groups = distinct_weighted(spectrum.eigenvalues());
    let mut candidates = vec![alpha_bar];
    // Branch 1 binds at mu (alpha <= alpha_bar), branch 2 at L.
    for (bind_index, keep) in [
        (0usize, Box::new(|a: f64| a <= alpha_bar) as Box<dyn Fn(f64) -> bool>),
        (groups.len() - 1, Box::new(|a: f64| a >= alpha_bar)),
    ] {
        let poly_low_first = gd_branch_polynomial(tau, &groups, bind_index);
        let mut coeffs: Vec<f64> = poly_low_first.into_iter().rev().collect();
        // Strip (exactly) vanishing leading coefficients before root finding.
        while coeffs.len() > 1 && coeffs[0] == 0.0 {
            coeffs.remove(0);
        }
        if coeffs.len() < 2 {
            continue;
        }
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            continue;
        }
        for root in poly_roots(&coeffs)? {
            let im_ok = root.im.abs() <= REAL_ROOT_IM_TOL * (1.0 + root.norm());
            let a = root.re;
            if im_ok && a > 0.0 && a < hi * (1.0 - 1e-12) && keep(a) {
                candidates.push(a);
            }
        }
    }

    candidates.sort_by(|x, y| x.partial_cmp(y).expect("finite candidates"));
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    let mut best: Option<(f64, f64)> = None; // (alpha, objective)
    for &a in &candidates {
        if let Some(f) = penalized_gd_objective(tau, a, spectrum) {
            match best {
                Some((_, fb)) if f >= fb => {}
                _ => best = Some((a, f)),
            }
        }
    }
    let (alpha_star, _) = best.ok_or(Error::NoInteriorCandidate)?;
    let rho = quad::gd_rate(alpha_star, mu, l);
    let j = quad::gd_robustness(alpha_star, spectrum)?;
    Ok(RateRobustnessPoint {
        rho,
        j,
        jprime: Some(quad::gd_robustness_iterates(alpha_star, spectrum)?),
        params: AlgorithmSpec::gd(alpha_star)?,
    })
}

// ---------------------------------------------------------------------------
// Rate-offset (eps) parameterizations.

fn check_kappa(mu: f64, l: f64) -> Result<f64> {
    if !(mu.is_finite() && l.is_finite() && 0.0 < mu && mu <= l) {
        return Err(Error::InvalidArgument {
            arg: "mu",
            reason: format!("require 0 < mu <= L, got mu = {mu}, L = {l}"),
        });
    }
    let kappa = l / mu;
    if kappa <= 1.0 + 1e-12 {
        return Err(Error::KappaOne);
    }
    Ok(kappa)
}

/// Largest admissible rate offset for GD: `eps < 2/(kappa - 1)`.
pub fn gd_eps_max(mu: f64, l: f64) -> Result<f64> {
    let kappa = check_kappa(mu, l)?;
    Ok(2.0 / (kappa - 1.0))
}

/// Largest admissible rate offset for AG: `eps < sqrt(sqrt(k)/(sqrt(k)-1)) - 1`.
pub fn ag_eps_max(mu: f64, l: f64) -> Result<f64> {
    let kappa = check_kappa(mu, l)?;
    let sk = kappa.sqrt();
    Ok((sk / (sk - 1.0)).sqrt() - 1.0)
}

/// The smaller GD stepsize achieving rate `(1 + eps)` times the optimal
/// rate: `alpha_eps = (2 - eps (kappa - 1)) / (L + mu)`.
///
/// The smaller of the two crossings is returned because robustness grows
/// with the stepsize.
pub fn gd_alpha_for_eps(eps: f64, mu: f64, l: f64) -> Result<f64> {
    let kappa = check_kappa(mu, l)?;
    let eps_max = 2.0 / (kappa - 1.0);
    if !eps.is_finite() || eps < 0.0 || eps >= eps_max {
        return Err(Error::EpsOutOfRange { eps, max: eps_max });
    }
    Ok((2.0 - eps * (kappa - 1.0)) / (l + mu))
}

/// The AG pair achieving rate `(1 + eps)` times the optimal AG rate:
///
/// ```text
/// alpha_eps = [1 - (1+eps)^2 (1 - 1/sqrt(kappa))]^2 / mu,
/// beta_eps  = (1 - sqrt(alpha_eps mu)) / (1 + sqrt(alpha_eps mu)),
/// ```
///
/// which stays on the `alpha <= 1/L` curve where the certified AG bounds
/// apply, with `rho = sqrt(1 - sqrt(alpha_eps mu))`.
pub fn ag_alpha_for_eps(eps: f64, mu: f64, l: f64) -> Result<(f64, f64)> {
    let kappa = check_kappa(mu, l)?;
    let sk = kappa.sqrt();
    let eps_max = (sk / (sk - 1.0)).sqrt() - 1.0;
    if !eps.is_finite() || eps < 0.0 || eps >= eps_max {
        return Err(Error::EpsOutOfRange { eps, max: eps_max });
    }
    let opb = 1.0 + eps;
    let bracket = 1.0 - opb * opb * (1.0 - 1.0 / sk);
    let alpha = bracket * bracket / mu;
    let root = (alpha * mu).sqrt();
    let beta = (1.0 - root) / (1.0 + root);
    Ok((alpha, beta))
}

// ---------------------------------------------------------------------------
// AG optimizers: stability-region grid plus deterministic refinement.

/// Grid search followed by coordinate descent with shrinking steps.
///
/// `objective` returns `None` outside its admissible set. Evaluation order
/// never affects the result: grid points are reduced by index and the
/// refinement path is a deterministic function of the incumbent.
fn optimize_on_grid<F>(
    objective: &F,
    alpha_hi: f64,
    grid_alpha: usize,
    grid_beta: usize,
    seeds: &[(f64, f64)],
) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Option<f64> + Sync,
{
    if grid_alpha < 8 || grid_beta < 8 {
        return Err(Error::InvalidArgument {
            arg: "grid",
            reason: format!("grid counts must be >= 8 each, got {grid_alpha}x{grid_beta}"),
        });
    }
    let betas: Vec<f64> = (0..grid_beta)
        .map(|j| j as f64 / (grid_beta - 1) as f64)
        .collect();
    let alphas: Vec<f64> = (1..=grid_alpha)
        .map(|i| alpha_hi * i as f64 / (grid_alpha + 1) as f64)
        .collect();
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(grid_alpha * grid_beta + seeds.len());
    for &a in &alphas {
        for &b in &betas {
            points.push((a, b));
        }
    }
    points.extend_from_slice(seeds);

    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|&(a, b)| if a > 0.0 && b >= 0.0 { objective(a, b) } else { None })
        .collect();

    let mut best: Option<(f64, f64, f64)> = None;
    for (&(a, b), &v) in points.iter().zip(values.iter()) {
        if let Some(f) = v {
            match best {
                Some((_, _, fb)) if f >= fb => {}
                _ => best = Some((a, b, f)),
            }
        }
    }
    let (mut a, mut b, mut f) = best.ok_or(Error::EmptyGrid)?;

    let mut ha = alpha_hi / (grid_alpha + 1) as f64;
    let mut hb = 1.0 / (grid_beta - 1) as f64;
    for _ in 0..2000 {
        let moves = [
            (a + ha, b),
            (a - ha, b),
            (a, b + hb),
            (a, (b - hb).max(0.0)),
        ];
        let mut improved = false;
        let mut cand = (a, b, f);
        for &(na, nb) in &moves {
            if na <= 0.0 || !(0.0..=BETA_CAP).contains(&nb) {
                continue;
            }
            if let Some(nf) = objective(na, nb) {
                if nf < cand.2 {
                    cand = (na, nb, nf);
                    improved = true;
                }
            }
        }
        if improved && (f - cand.2) > REFINE_REL_TOL * (1.0 + f.abs()) {
            (a, b, f) = cand;
        } else {
            if improved {
                // Take the marginal improvement but treat the step as stalled.
                (a, b, f) = cand;
            }
            ha *= 0.5;
            hb *= 0.5;
            if ha <= 1e-14 * alpha_hi && hb <= 1e-14 {
                break;
            }
        }
    }
    Ok((a, b, f))
}

fn penalized_ag_value(tau: f64, alpha: f64, beta: f64, mu: f64, l: f64, j: f64) -> Option<f64> {
    let rho = quad::ag_rate(alpha, beta, mu, l);
    if rho >= 1.0 {
        return None;
    }
    Some(j + tau / (1.0 - rho * rho))
}

fn validate_tau(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "tau",
            reason: format!("must be finite and nonnegative, got {tau}"),
        });
    }
    Ok(())
}

/// Minimizes `F_tau(alpha, beta) = J(alpha, beta) + tau/(1 - rho^2)` for AG
/// over a grid of the stability region, refined by coordinate descent.
///
/// Errors: `EmptyGrid` when no grid point lies strictly inside the stability
/// region (cannot happen for grids over `(0, 2/L) x [0, 1]`, but guards
/// degenerate inputs).
pub fn ag_optimize_exact(
    tau: f64,
    spectrum: &QuadraticSpectrum,
    grid_alpha: usize,
    grid_beta: usize,
) -> Result<RateRobustnessPoint> {
    validate_tau(tau)?;
    let (mu, l) = (spectrum.mu(), spectrum.l());
    let objective = |a: f64, b: f64| -> Option<f64> {
        let j = quad::ag_robustness(a, b, spectrum).ok()?;
        penalized_ag_value(tau, a, b, mu, l, j)
    };
    let (alpha, beta, _) = optimize_on_grid(&objective, 2.0 / l, grid_alpha, grid_beta, &[])?;
    let rho = quad::ag_rate(alpha, beta, mu, l);
    Ok(RateRobustnessPoint {
        rho,
        j: quad::ag_robustness(alpha, beta, spectrum)?,
        jprime: Some(quad::ag_robustness_iterates(alpha, beta, spectrum)?),
        params: AlgorithmSpec::ag(alpha, beta)?,
    })
}

/// Dimension-independent variant of [`ag_optimize_exact`]: minimizes the
/// endpoint upper bound `d * max{u(mu), u(L)} + tau/(1 - rho^2)`.
///
/// The max makes the objective non-differentiable along the seam where the
/// two endpoint terms cross; the grid-plus-refinement scheme does not care.
pub fn ag_optimize_ubound(
    tau: f64,
    mu: f64,
    l: f64,
    d: usize,
    grid_alpha: usize,
    grid_beta: usize,
) -> Result<RateRobustnessPoint> {
    validate_tau(tau)?;
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be positive".into(),
        });
    }
    let objective = |a: f64, b: f64| -> Option<f64> {
        let jbar = quad::ag_robustness_upper(a, b, mu, l, d).ok()?;
        penalized_ag_value(tau, a, b, mu, l, jbar)
    };
    let (alpha, beta, _) = optimize_on_grid(&objective, 2.0 / l, grid_alpha, grid_beta, &[])?;
    let rho = quad::ag_rate(alpha, beta, mu, l);
    Ok(RateRobustnessPoint {
        rho,
        j: quad::ag_robustness_upper(alpha, beta, mu, l, d)?,
        jprime: None,
        params: AlgorithmSpec::ag(alpha, beta)?,
    })
}

/// Minimizes the exact AG robustness subject to a rate budget
/// `rho(alpha, beta) <= rho_cap`, seeded with extra candidate points
/// (typically the best known GD stepsize at that budget).
pub fn ag_min_j_at_rate(
    rho_cap: f64,
    spectrum: &QuadraticSpectrum,
    grid_alpha: usize,
    grid_beta: usize,
    seeds: &[(f64, f64)],
) -> Result<RateRobustnessPoint> {
    if !(rho_cap.is_finite() && 0.0 < rho_cap && rho_cap < 1.0) {
        return Err(Error::OutOfRange {
            param: "rho_cap",
            value: rho_cap,
            range: "(0, 1)",
        });
    }
    let (mu, l) = (spectrum.mu(), spectrum.l());
    let objective = |a: f64, b: f64| -> Option<f64> {
        let j = quad::ag_robustness(a, b, spectrum).ok()?;
        if quad::ag_rate(a, b, mu, l) > rho_cap {
            return None;
        }
        Some(j)
    };
    let (alpha, beta, _) = optimize_on_grid(&objective, 2.0 / l, grid_alpha, grid_beta, seeds)?;
    let rho = quad::ag_rate(alpha, beta, mu, l);
    Ok(RateRobustnessPoint {
        rho,
        j: quad::ag_robustness(alpha, beta, spectrum)?,
        jprime: Some(quad::ag_robustness_iterates(alpha, beta, spectrum)?),
        params: AlgorithmSpec::ag(alpha, beta)?,
    })
}

// ---------------------------------------------------------------------------
// Pareto curves.

/// Default penalty sweep: 60 points, logarithmic in [1e-4, 1e4].
pub fn default_tau_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 60)
}

/// `n` logarithmically spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` linearly spaced points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Removes dominated points and sorts by rate ascending.
///
/// A point is dominated when another point has `rho <=` and `J <=` with at
/// least one strict; exact duplicates collapse to one.
pub fn pareto_filter(mut points: Vec<RateRobustnessPoint>) -> Vec<RateRobustnessPoint> {
    points.sort_by(|p, q| {
        (p.rho, p.j)
            .partial_cmp(&(q.rho, q.j))
            .expect("finite rate and robustness")
    });
    let mut kept: Vec<RateRobustnessPoint> = Vec::with_capacity(points.len());
    let mut best_j = f64::INFINITY;
    for p in points {
        if p.j < best_j {
            best_j = p.j;
            kept.push(p);
        }
    }
    kept
}

/// Sweeps the trade-off parameter and returns the Pareto-filtered curve.
///
/// `TauPenalized` sweeps the penalty weight through the exact optimizers
/// (GD polynomial path, AG grid); `EpsConstrained` sweeps the rate offset
/// through the closed-form stepsize families. With only a spectrum summary
/// `(mu, L, d)` available, robustness is replaced by the endpoint upper
/// bound and the curve is tagged `UpperBound`.
pub fn pareto_curve(
    method: Method,
    spectrum: &SpectrumInput<'_>,
    mode: TradeoffMode,
    sweep: &[f64],
    grid_alpha: usize,
    grid_beta: usize,
) -> Result<ParetoCurve> {
    if sweep.is_empty() {
        return Err(Error::InvalidArgument {
            arg: "sweep",
            reason: "parameter sweep must be nonempty".into(),
        });
    }
    let (mu, l, d) = (spectrum.mu(), spectrum.l(), spectrum.d());
    let mut points = Vec::with_capacity(sweep.len());
    for &param in sweep {
        let point = match (method, mode, spectrum) {
            (Method::Gd, TradeoffMode::TauPenalized, SpectrumInput::Full(s)) => {
                gd_optimal_stepsize_tau(param, s)?
            }
            (Method::Gd, TradeoffMode::TauPenalized, SpectrumInput::Summary { .. }) => {
                // GD upper bound d * u(L) is the beta = 0 slice of the AG bound.
                validate_tau(param)?;
                let objective = |a: f64, b: f64| -> Option<f64> {
                    if b != 0.0 {
                        return None;
                    }
                    let jbar = quad::ag_robustness_upper(a, 0.0, mu, l, d).ok()?;
                    penalized_ag_value(param, a, 0.0, mu, l, jbar)
                };
                let (alpha, _, _) =
                    optimize_on_grid(&objective, 2.0 / l, grid_alpha, grid_beta, &[])?;
                RateRobustnessPoint {
                    rho: quad::gd_rate(alpha, mu, l),
                    j: quad::ag_robustness_upper(alpha, 0.0, mu, l, d)?,
                    jprime: None,
                    params: AlgorithmSpec::gd(alpha)?,
                }
            }
            (Method::Ag, TradeoffMode::TauPenalized, SpectrumInput::Full(s)) => {
                ag_optimize_exact(param, s, grid_alpha, grid_beta)?
            }
            (Method::Ag, TradeoffMode::TauPenalized, SpectrumInput::Summary { .. }) => {
                ag_optimize_ubound(param, mu, l, d, grid_alpha, grid_beta)?
            }
            (Method::Gd, TradeoffMode::EpsConstrained, _) => {
                let alpha = gd_alpha_for_eps(param, mu, l)?;
                let j = match spectrum {
                    SpectrumInput::Full(s) => quad::gd_robustness(alpha, s)?,
                    SpectrumInput::Summary { .. } => {
                        quad::ag_robustness_upper(alpha, 0.0, mu, l, d)?
                    }
                };
                RateRobustnessPoint {
                    rho: quad::gd_rate(alpha, mu, l),
                    j,
                    jprime: None,
                    params: AlgorithmSpec::gd(alpha)?,
                }
            }
            (Method::Ag, TradeoffMode::EpsConstrained, _) => {
                let (alpha, beta) = ag_alpha_for_eps(param, mu, l)?;
                let j = match spectrum {
                    SpectrumInput::Full(s) => quad::ag_robustness(alpha, beta, s)?,
                    SpectrumInput::Summary { .. } => {
                        quad::ag_robustness_upper(alpha, beta, mu, l, d)?
                    }
                };
                RateRobustnessPoint {
                    rho: quad::ag_rate(alpha, beta, mu, l),
                    j,
                    jprime: None,
                    params: AlgorithmSpec::ag(alpha, beta)?,
                }
            }
        };
        points.push(point);
    }
    let provenance = match spectrum {
        SpectrumInput::Full(_) => Provenance::ExactQuad,
        SpectrumInput::Summary { .. } => Provenance::UpperBound,
    };
    Ok(ParetoCurve {
        points: pareto_filter(points),
        method,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spectrum_01_1() -> QuadraticSpectrum {
        QuadraticSpectrum::new(vec![0.1, 1.0]).unwrap()
    }

    #[test]
    fn poly_roots_simple() {
        // x^2 - 1.
        let roots = poly_roots(&[1.0, 0.0, -1.0]).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(re[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(re[1], 1.0, max_relative = 1e-12);
        assert!(roots.iter().all(|r| r.im.abs() < 1e-12));

        // x^2 + 1.
        let roots = poly_roots(&[1.0, 0.0, 1.0]).unwrap();
        let mut im: Vec<f64> = roots.iter().map(|r| r.im).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(im[0], -1.0, max_relative = 1e-12);
        assert_relative_eq!(im[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn poly_roots_construct_then_solve() {
        // (x - 0.3)(x - 0.7)(x + 2) = x^3 + x^2 - 1.19x + 0.42... expand:
        // (x-0.3)(x-0.7) = x^2 - x + 0.21; *(x+2) = x^3 + x^2 - 1.79x + 0.42.
        let coeffs = [1.0, 1.0, -1.79, 0.42];
        let mut roots = poly_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_relative_eq!(roots[0].re, -2.0, max_relative = 1e-9);
        assert_relative_eq!(roots[1].re, 0.3, max_relative = 1e-9);
        assert_relative_eq!(roots[2].re, 0.7, max_relative = 1e-9);
        for r in &roots {
            assert!(poly_eval_complex(&coeffs, *r).norm() <= 1e-9 * 1.79);
        }
    }

    #[test]
    fn poly_roots_residual_bound_random_degrees() {
        // Construct polynomials from known roots, solve, check residuals.
        let root_sets: [&[f64]; 3] = [
            &[0.5, -0.5, 2.0, -1.5],
            &[1.0, 1.0, -0.25],
            &[0.9, 0.7, -0.3, 0.1, -2.5],
        ];
        for roots in root_sets {
            let mut coeffs = vec![1.0];
            for &r in roots {
                coeffs = poly_mul(&coeffs, &[-r, 1.0]);
            }
            coeffs.reverse();
            let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            let found = poly_roots(&coeffs).unwrap();
            assert_eq!(found.len(), roots.len());
            for r in &found {
                assert!(
                    poly_eval_complex(&coeffs, *r).norm() <= 1e-9 * scale,
                    "residual too large for {coeffs:?} at {r}"
                );
            }
        }
    }

    #[test]
    fn poly_roots_edge_cases() {
        assert!(matches!(poly_roots(&[1.0]), Err(Error::DegreeZero)));
        assert!(matches!(poly_roots(&[0.0, 1.0]), Err(Error::DegreeZero)));
        // Trailing zeros deflate to roots at the origin.
        let roots = poly_roots(&[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().any(|r| r.norm() == 0.0));
        assert!(roots.iter().any(|r| (r.re - 1.0).abs() < 1e-12));
        // Linear.
        let roots = poly_roots(&[2.0, -1.0]).unwrap();
        assert_relative_eq!(roots[0].re, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn gd_tau_example_values() {
        let s = spectrum_01_1();
        let p = gd_optimal_stepsize_tau(2.0, &s).unwrap();
        assert!((p.params.alpha - 1.5055).abs() < 2e-4, "alpha = {}", p.params.alpha);
        assert!((p.rho - 0.8494).abs() < 2e-4, "rho = {}", p.rho);
        assert!((p.j - 1.9294).abs() < 2e-4, "J = {}", p.j);
    }

    #[test]
    fn gd_tau_limits() {
        let s = spectrum_01_1();
        // Huge tau: rate term dominates, optimum is the rate-optimal stepsize.
        let p = gd_optimal_stepsize_tau(1e9, &s).unwrap();
        assert_eq!(p.params.alpha, 2.0 / 1.1);
        assert_relative_eq!(p.rho, 9.0 / 11.0, max_relative = 1e-12);
        // Tiny tau: stepsize collapses toward zero and the rate toward one.
        let p = gd_optimal_stepsize_tau(1e-9, &s).unwrap();
        assert!(p.params.alpha < 1e-3, "alpha = {}", p.params.alpha);
        assert!(p.rho > 0.999, "rho = {}", p.rho);
    }

    #[test]
    fn gd_tau_rejects_large_spectrum() {
        let s = QuadraticSpectrum::new((1..=9).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(
            gd_optimal_stepsize_tau(1.0, &s),
            Err(Error::ExactPathUnsupported { max: 8, got: 9 })
        ));
    }

    #[test]
    fn gd_tau_optimality_on_grid() {
        let s = spectrum_01_1();
        for &tau in &[0.01, 0.5, 2.0, 100.0] {
            let p = gd_optimal_stepsize_tau(tau, &s).unwrap();
            let f_star = penalized_gd_objective(tau, p.params.alpha, &s).unwrap();
            for i in 1..2000 {
                let a = 2.0 * i as f64 / 2001.0;
                if let Some(f) = penalized_gd_objective(tau, a, &s) {
                    assert!(
                        f_star <= f + 1e-9,
                        "tau={tau}: F({a}) = {f} < F* = {f_star}"
                    );
                }
            }
        }
    }

    #[test]
    fn eps_parameterizations() {
        let (mu, l) = (0.1, 1.0);
        assert_relative_eq!(gd_alpha_for_eps(0.0, mu, l).unwrap(), 2.0 / 1.1, max_relative = 1e-15);
        assert_relative_eq!(gd_alpha_for_eps(0.1, mu, l).unwrap(), 1.0, max_relative = 1e-12);
        // Rate identity for GD.
        let rho_bar = 9.0 / 11.0;
        for &eps in &[0.0, 0.05, 0.1, 0.2] {
            let a = gd_alpha_for_eps(eps, mu, l).unwrap();
            assert_relative_eq!(quad::gd_rate(a, mu, l), (1.0 + eps) * rho_bar, max_relative = 1e-12);
        }
        // Window and degeneracy errors.
        assert!(matches!(
            gd_alpha_for_eps(2.0 / 9.0, mu, l),
            Err(Error::EpsOutOfRange { .. })
        ));
        assert!(matches!(gd_alpha_for_eps(0.1, 1.0, 1.0), Err(Error::KappaOne)));
    }

    #[test]
    fn ag_eps_parameterization() {
        let (mu, l) = (1.0, 20.0);
        // eps = 0 recovers the standard tuning.
        let (a0, b0) = ag_alpha_for_eps(0.0, mu, l).unwrap();
        let (alpha_std, beta_std, rho_std) = quad::ag_rate_optimal(mu, l);
        assert_relative_eq!(a0, alpha_std, max_relative = 1e-12);
        assert_relative_eq!(b0, beta_std, max_relative = 1e-12);
        // Certified-rate identity across the window: the parameterization is
        // built so that sqrt(1 - sqrt(alpha_eps mu)) = (1 + eps) rho_std.
        // The quadratic-case spectral radius at the same pair is smaller.
        let eps_max = ag_eps_max(mu, l).unwrap();
        for &frac in &[0.0, 0.2, 0.5, 0.9] {
            let eps = frac * eps_max * 0.999;
            let (a, b) = ag_alpha_for_eps(eps, mu, l).unwrap();
            let certified = (1.0 - (a * mu).sqrt()).sqrt();
            assert_relative_eq!(certified, (1.0 + eps) * rho_std, max_relative = 1e-12);
            assert!(quad::ag_rate(a, b, mu, l) <= certified + 1e-12);
        }
        // Near the window edge the certified rate approaches one.
        let (a, _) = ag_alpha_for_eps(eps_max - 1e-6, mu, l).unwrap();
        assert!((1.0 - (a * mu).sqrt()).sqrt() > 1.0 - 1e-4);
        assert!(matches!(
            ag_alpha_for_eps(eps_max, mu, l),
            Err(Error::EpsOutOfRange { .. })
        ));
    }

    #[test]
    fn ag_exact_dominates_gd_example() {
        let s = spectrum_01_1();
        let gd = gd_optimal_stepsize_tau(2.0, &s).unwrap();
        let ag = ag_optimize_exact(2.0, &s, 32, 32).unwrap();
        assert!(ag.j <= gd.j + 1e-9, "AG J = {}, GD J = {}", ag.j, gd.j);
        assert!(ag.rho <= gd.rho + 1e-9, "AG rho = {}, GD rho = {}", ag.rho, gd.rho);
    }

    #[test]
    fn ag_exact_beta_zero_matches_gd() {
        // With the beta grid collapsed to zero width the optimizer reduces to
        // a GD stepsize search; compare against the exact GD path.
        let s = spectrum_01_1();
        let tau = 1.0;
        let objective = |a: f64, b: f64| -> Option<f64> {
            if b != 0.0 {
                return None;
            }
            let j = quad::ag_robustness(a, 0.0, &s).ok()?;
            penalized_ag_value(tau, a, 0.0, s.mu(), s.l(), j)
        };
        let (alpha, _, f) = optimize_on_grid(&objective, 2.0, 64, 8, &[]).unwrap();
        let exact = gd_optimal_stepsize_tau(tau, &s).unwrap();
        let f_exact = penalized_gd_objective(tau, exact.params.alpha, &s).unwrap();
        assert!((f - f_exact).abs() <= 1e-6 * (1.0 + f_exact.abs()), "f={f} exact={f_exact}");
        assert!((alpha - exact.params.alpha).abs() < 1e-3);
    }

    #[test]
    fn ag_ubound_exact_relation() {
        // mu = L: the upper bound coincides with the exact objective.
        let (mu, l, d) = (0.5, 0.5, 3);
        let jbar = quad::ag_robustness_upper(0.9, 0.2, mu, l, d).unwrap();
        let s = QuadraticSpectrum::new(vec![0.5, 0.5, 0.5]).unwrap();
        let j = quad::ag_robustness(0.9, 0.2, &s).unwrap();
        assert_relative_eq!(jbar, j, max_relative = 1e-12);
        // Optimizer runs and returns a stable point.
        let p = ag_optimize_ubound(0.5, 0.1, 1.0, 100, 16, 16).unwrap();
        assert!(p.rho < 1.0);
        assert!(p.j > 0.0);
    }

    #[test]
    fn ag_min_j_at_rate_uses_seed() {
        let s = spectrum_01_1();
        let gd = gd_optimal_stepsize_tau(2.0, &s).unwrap();
        let capped =
            ag_min_j_at_rate(gd.rho, &s, 16, 16, &[(gd.params.alpha, 0.0)]).unwrap();
        assert!(capped.rho <= gd.rho + 1e-12);
        assert!(capped.j <= gd.j + 1e-9);
    }

    #[test]
    fn pareto_filter_removes_dominated() {
        let mk = |rho: f64, j: f64| RateRobustnessPoint {
            rho,
            j,
            jprime: None,
            params: AlgorithmSpec::gd(0.5).unwrap(),
        };
        let pts = vec![mk(0.9, 1.0), mk(0.8, 2.0), mk(0.85, 3.0), mk(0.95, 0.9), mk(0.8, 2.0)];
        let kept = pareto_filter(pts);
        // (0.85, 3.0) is dominated by (0.8, 2.0); the duplicate collapses.
        assert_eq!(kept.len(), 3);
        assert!(kept.windows(2).all(|w| w[0].rho <= w[1].rho));
        assert!(kept.windows(2).all(|w| w[0].j > w[1].j));
        for (i, p) in kept.iter().enumerate() {
            for (k, q) in kept.iter().enumerate() {
                if i == k {
                    continue;
                }
                let dominates =
                    p.rho <= q.rho && p.j <= q.j && (p.rho < q.rho || p.j < q.j);
                assert!(!dominates, "{i} dominates {k}");
            }
        }
    }

    #[test]
    fn pareto_curve_gd_tau_sweep() {
        let s = spectrum_01_1();
        let sweep = [0.01, 0.1, 2.0, 10.0, 1e4];
        let curve = pareto_curve(
            Method::Gd,
            &SpectrumInput::Full(&s),
            TradeoffMode::TauPenalized,
            &sweep,
            16,
            16,
        )
        .unwrap();
        assert!(curve.points.len() >= 3);
        assert_eq!(curve.provenance, Provenance::ExactQuad);
        // Curve passes near the tau = 2 anchor and limits to the rate optimum.
        assert!(curve
            .points
            .iter()
            .any(|p| (p.rho - 0.8494).abs() < 1e-3 && (p.j - 1.9294).abs() < 1e-3));
        assert!(curve.points.first().unwrap().rho >= 9.0 / 11.0 - 1e-12);
    }

    #[test]
    fn pareto_curve_single_point() {
        let s = spectrum_01_1();
        let curve = pareto_curve(
            Method::Gd,
            &SpectrumInput::Full(&s),
            TradeoffMode::EpsConstrained,
            &[0.05],
            8,
            8,
        )
        .unwrap();
        assert_eq!(curve.points.len(), 1);
    }

    #[test]
    fn grid_helpers() {
        let g = log_grid(1e-2, 1e2, 5);
        assert_eq!(g.len(), 5);
        assert_relative_eq!(g[0], 1e-2, max_relative = 1e-12);
        assert_relative_eq!(g[2], 1.0, max_relative = 1e-12);
        assert_relative_eq!(g[4], 1e2, max_relative = 1e-12);
        let l = linear_grid(0.0, 1.0, 3);
        assert_eq!(l, vec![0.0, 0.5, 1.0]);
        assert_eq!(default_tau_grid().len(), 60);
    }

    #[test]
    fn grid_count_validation() {
        let s = spectrum_01_1();
        assert!(matches!(
            ag_optimize_exact(1.0, &s, 4, 16),
            Err(Error::InvalidArgument { .. })
        ));
    }
}
