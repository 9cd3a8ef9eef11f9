//! Matrix-inequality certificates and robustness bounds for smooth
//! strongly convex objectives.
//!
//! Outside the quadratic case the closed loop is nonlinear and exact H2
//! values are out of reach. Rate and robustness are instead certified
//! through a Lyapunov function
//!
//! ```text
//!     V(xi_k) = (xi_k - xi*)' (Ptilde (x) I_d) (xi_k - xi*) + c (f(x_k) - f*)
//! ```
//!
//! whose geometric decay at rate `rho` follows from a small matrix
//! inequality
//!
//! ```text
//!     c0 X0 + c X(rho)  >=  Phi(A, B, P, rho),
//!     Phi = [A'PA - rho^2 P, A'PB; B'PA, B'PB],
//! ```
//!
//! where `X0` encodes the gradient sector condition and `X1, X2` (mixed
//! into `X(rho) = rho^2 X1 + (1 - rho^2) X2`) encode function-value
//! dissipation along the momentum update. Every block is a Kronecker
//! template `M (x) I_d`, so the inequality reduces to 2x2 (GD) or 3x3
//! (AG) independent of the dimension. A feasible certificate yields the
//! steady-state bounds `R_GD`, `R_AG` on the noise amplification `J`,
//! and `sigma = 0` specializations bound the impulse response `J*`.
//!
//! The module builds the templates ([`build_blocks`]), evaluates slack
//! eigenvalues ([`check_mi`]), searches minimal certified GD rates
//! ([`gd_min_rho`]), evaluates the closed-form bounds ([`gd_bound_r`],
//! [`ag_explicit_bound`], [`r_from_certificate`],
//! [`perturb_stability_bounds`]), and tightens the AG bound on a
//! parameter grid by solving one 4-variable SDP per grid point
//! ([`solve_small_sdp`], [`ag_sdp_curve`]).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::linsys::{self, AlgorithmSpec, Method};
use crate::quad::{self, RateRobustnessPoint};
use crate::tradeoff::{self, ParetoCurve, Provenance};
use crate::{Error, Result};

/// Slack min-eigenvalues at or above this are reported as feasible.
pub const FEASIBILITY_TOL: f64 = -1e-10;
/// Relative PSD tolerance on certificate matrices before a check runs.
const PSD_TOL: f64 = -1e-12;
/// Smallest certified rate `gd_min_rho` will report; `rho = 0` is attainable
/// only in the degenerate case `mu = L`, `alpha = 1/L`.
const MIN_RHO_FLOOR: f64 = 1e-6;
/// Box radius on the SDP variables. The feasible cone is unbounded along
/// recession directions (scaling up `(cbar, Ptilde)` keeps the LMI
/// feasible), where the barrier has no minimizer; boxing every variable at
/// a radius far beyond any certificate arising here (`p11` stays within
/// `1/(2 alpha)`-scale) restores a bounded region without moving the
/// optimum.
const SDP_BOX_RADIUS: f64 = 1e8;
/// Multiplicative increase of the barrier weight per outer iteration.
const BARRIER_T_GROWTH: f64 = 5.0;
/// Outer iteration cap for both interior-point phases.
const BARRIER_MAX_OUTER: usize = 50;
/// Newton iteration cap per outer iteration.
const NEWTON_MAX_ITER: usize = 50;
/// Newton decrement threshold on `lambda^2`. Kept near the roundoff floor:
/// the stationarity residual reported to callers is `|grad|_inf / t`, and a
/// loose decrement at large barrier weight would leave it above
/// [`SDP_KKT_TOL`].
const NEWTON_DECREMENT_TOL: f64 = 1e-20;
/// `lambda^2` below which the full Newton step is taken without a line
/// search. Self-concordance guarantees descent there, while objective
/// differences are already below float resolution at large barrier weight.
const NEWTON_FULL_STEP_TOL: f64 = 0.0625;
/// Phase 1 stops early once the maximized slack clears this margin.
const PHASE1_EXIT_MARGIN: f64 = 1e-6;
/// Certified infeasibility threshold on the phase-1 optimum.
const PHASE1_INFEASIBLE_TOL: f64 = 1e-9;
/// Relative duality-gap target for phase 2.
const SDP_GAP_TOL: f64 = 1e-6;
/// Required scaled stationarity residual at the final barrier iterate.
const SDP_KKT_TOL: f64 = 1e-7;

/// True when a slack min-eigenvalue counts as feasible.
pub fn is_feasible(slack_min_eig: f64) -> bool {
    slack_min_eig >= FEASIBILITY_TOL
}

// ---------------------------------------------------------------------------
// Matrix-inequality blocks.

/// Kronecker-reduced blocks of the matrix inequality at one
/// `(method, alpha, beta, rho)`.
///
/// Every `M (x) I_d` block of the full `(2d + d)`-dimensional inequality is
/// replaced by its template `M`, so all checks run on 2x2 (GD) or 3x3 (AG)
/// matrices regardless of the dimension.
#[derive(Debug, Clone)]
pub struct MiBlocks {
    /// `Phi` evaluated at the unit certificate (`p = 1` for GD, `Ptilde = I`
    /// for AG). Kept for inspection; checks rebuild `Phi` at the actual
    /// certificate via [`MiBlocks::phi_of`].
    pub phi: DMatrix<f64>,
    /// Sector-condition block `X0`.
    pub x0: DMatrix<f64>,
    /// Function-value dissipation blocks; present for AG only.
    pub x1: Option<DMatrix<f64>>,
    pub x2: Option<DMatrix<f64>>,
    pub rho: f64,
    method: Method,
    /// Reduced state matrix: `[1]` for GD, `[1+beta, -beta; 1, 0]` for AG.
    a_red: DMatrix<f64>,
    /// Reduced input matrix: `[-alpha]` for GD, `[-alpha; 0]` for AG.
    b_red: DMatrix<f64>,
}

impl MiBlocks {
    /// Side length of the reduced certificate matrix (1 for GD, 2 for AG).
    pub fn state_dim(&self) -> usize {
        self.a_red.nrows()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `Phi(A, B, Ptilde, rho)` in reduced form for a given certificate
    /// matrix: `[A'PA - rho^2 P, A'PB; B'PA, B'PB]`. Symmetrized to kill
    /// roundoff asymmetry from the triple products.
    pub fn phi_of(&self, ptilde: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.a_red.nrows();
        let pa = ptilde * &self.a_red;
        let pb = ptilde * &self.b_red;
        let tl = self.a_red.transpose() * &pa - ptilde * (self.rho * self.rho);
        let tr = self.a_red.transpose() * &pb;
        let br = (self.b_red.transpose() * &pb)[(0, 0)];
        let mut phi = DMatrix::zeros(n + 1, n + 1);
        phi.view_mut((0, 0), (n, n)).copy_from(&tl);
        for i in 0..n {
            phi[(i, n)] = tr[(i, 0)];
            phi[(n, i)] = tr[(i, 0)];
        }
        phi[(n, n)] = br;
        symmetrize(&mut phi);
        phi
    }

    /// `X(rho) = rho^2 X1 + (1 - rho^2) X2`; `None` for GD, which has no
    /// function-value dissipation blocks.
    pub fn x_of_rho(&self) -> Option<DMatrix<f64>> {
        match (&self.x1, &self.x2) {
            (Some(x1), Some(x2)) => {
                let r2 = self.rho * self.rho;
                Some(x1 * r2 + x2 * (1.0 - r2))
            }
            _ => None,
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn check_mu_l(mu: f64, l: f64) -> Result<()> {
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidArgument {
            arg: "mu",
            reason: format!("must be finite and positive, got {mu}"),
        });
    }
    if !l.is_finite() || l < mu {
        return Err(Error::InvalidArgument {
            arg: "l",
            reason: format!("must be finite and at least mu = {mu}, got {l}"),
        });
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be at least 1".into(),
        });
    }
    Ok(())
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

fn check_ag_alpha(alpha: f64, l: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 / l {
        return Err(Error::OutOfRange {
            param: "alpha",
            value: alpha,
            range: "(0, 1/L]",
        });
    }
    Ok(())
}

/// Builds the reduced matrix-inequality blocks for one parameter point.
///
/// `rho` may be any value in `[0, 1]`; the convex-combination endpoints
/// `X(0) = X2` and `X(1) = X1` are meaningful even though a useful decay
/// certificate needs `rho < 1`.
///
/// # Panics
///
/// Panics if `mu`, `l` do not satisfy `0 < mu <= l`, if `rho` is outside
/// `[0, 1]`, or if the spec parameters are not finite (the `AlgorithmSpec`
/// constructors already reject those).
pub fn build_blocks(spec: &AlgorithmSpec, mu: f64, l: f64, rho: f64) -> MiBlocks {
    assert!(
        mu.is_finite() && l.is_finite() && 0.0 < mu && mu <= l,
        "require 0 < mu <= L, got mu = {mu}, L = {l}"
    );
    assert!(
        rho.is_finite() && (0.0..=1.0).contains(&rho),
        "require rho in [0, 1], got {rho}"
    );
    let alpha = spec.alpha;
    match spec.method {
        Method::Gd => {
            let a_red = DMatrix::from_row_slice(1, 1, &[1.0]);
            let b_red = DMatrix::from_row_slice(1, 1, &[-alpha]);
            let x0 = DMatrix::from_row_slice(
                2,
                2,
                &[2.0 * mu * l, -(mu + l), -(mu + l), 2.0],
            );
            let mut blocks = MiBlocks {
                phi: DMatrix::zeros(2, 2),
                x0,
                x1: None,
                x2: None,
                rho,
                method: Method::Gd,
                a_red,
                b_red,
            };
            blocks.phi = blocks.phi_of(&DMatrix::identity(1, 1));
            blocks
        }
        Method::Ag => {
            let beta = spec.beta;
            let a_red = DMatrix::from_row_slice(2, 2, &[1.0 + beta, -beta, 1.0, 0.0]);
            let b_red = DMatrix::from_row_slice(2, 1, &[-alpha, 0.0]);
            // X0 pulls the sector condition at y_k back through
            // y_k - x* = (1+beta)(x_k - x*) - beta (x_{k-1} - x*).
            let cb = [1.0 + beta, -beta];
            let mut x0 = DMatrix::zeros(3, 3);
            for i in 0..2 {
                for j in 0..2 {
                    x0[(i, j)] = 2.0 * mu * l * cb[i] * cb[j];
                }
                x0[(i, 2)] = -(mu + l) * cb[i];
                x0[(2, i)] = -(mu + l) * cb[i];
            }
            x0[(2, 2)] = 2.0;
            let g = alpha * (2.0 - l * alpha);
            let b2m = beta * beta * mu;
            let x1 = DMatrix::from_row_slice(
                3,
                3,
                &[
                    0.5 * b2m,
                    -0.5 * b2m,
                    -0.5 * beta,
                    -0.5 * b2m,
                    0.5 * b2m,
                    0.5 * beta,
                    -0.5 * beta,
                    0.5 * beta,
                    0.5 * g,
                ],
            );
            let obm = (1.0 + beta) * mu;
            let x2 = DMatrix::from_row_slice(
                3,
                3,
                &[
                    0.5 * (1.0 + beta) * obm,
                    -0.5 * beta * obm,
                    -0.5 * (1.0 + beta),
                    -0.5 * beta * obm,
                    0.5 * b2m,
                    0.5 * beta,
                    -0.5 * (1.0 + beta),
                    0.5 * beta,
                    0.5 * g,
                ],
            );
            let mut blocks = MiBlocks {
                phi: DMatrix::zeros(3, 3),
                x0,
                x1: Some(x1),
                x2: Some(x2),
                rho,
                method: Method::Ag,
                a_red,
                b_red,
            };
            blocks.phi = blocks.phi_of(&DMatrix::identity(2, 2));
            blocks
        }
    }
}

/// Min eigenvalue of the slack `c0 X0 + c X(rho) - Phi(Ptilde)`.
///
/// The inequality is feasible when the returned value clears
/// [`FEASIBILITY_TOL`] (see [`is_feasible`]). `ptilde` must be symmetric
/// PSD with the blocks' reduced dimension (1x1 for GD, 2x2 for AG); GD has
/// no function-value blocks, so it requires `c = 0`.
///
/// # Errors
///
/// `PNotPsd` when `ptilde` has an eigenvalue below `-1e-12` (relative to
/// its norm); `InvalidArgument` for negative multipliers, shape mismatch,
/// an asymmetric `ptilde`, or `c != 0` with GD blocks.
pub fn check_mi(blocks: &MiBlocks, c0: f64, c: f64, ptilde: &DMatrix<f64>) -> Result<f64> {
    if !c0.is_finite() || c0 < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "c0",
            reason: format!("must be finite and nonnegative, got {c0}"),
        });
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "c",
            reason: format!("must be finite and nonnegative, got {c}"),
        });
    }
    let n = blocks.state_dim();
    if ptilde.nrows() != n || ptilde.ncols() != n {
        return Err(Error::InvalidArgument {
            arg: "ptilde",
            reason: format!(
                "expected {n}x{n} for these blocks, got {}x{}",
                ptilde.nrows(),
                ptilde.ncols()
            ),
        });
    }
    let scale = ptilde.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (ptilde[(i, j)] - ptilde[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument {
                    arg: "ptilde",
                    reason: "certificate matrix must be symmetric".into(),
                });
            }
        }
    }
    let mut p = ptilde.clone();
    symmetrize(&mut p);
    let p_min = linsys::symmetric_eigenvalues(&p)?[0];
    if p_min < PSD_TOL * scale {
        return Err(Error::PNotPsd { min_eig: p_min });
    }
    if blocks.method == Method::Gd && c != 0.0 {
        return Err(Error::InvalidArgument {
            arg: "c",
            reason: "gd blocks have no function-value dissipation terms; use c = 0".into(),
        });
    }
    let mut slack = -blocks.phi_of(&p);
    slack += &blocks.x0 * c0;
    if let Some(x) = blocks.x_of_rho() {
        slack += x * c;
    }
    Ok(linsys::symmetric_eigenvalues(&slack)?[0])
}

// ---------------------------------------------------------------------------
// Certificates and closed-form bounds.

/// A (candidate) matrix-inequality certificate at one parameter point,
/// together with its verified slack and the robustness bound it implies.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub spec: AlgorithmSpec,
    /// Scalar `p` as a 1x1 matrix for GD; 2x2 `Ptilde` for AG.
    pub ptilde: DMatrix<f64>,
    pub c0: f64,
    pub c: f64,
    /// `X0` multiplier of the grid SDP, which fixes `c = 1` and names this
    /// multiplier `cbar`; mirrors `c0` on that path and is 0 elsewhere.
    pub cbar: f64,
    pub rho: f64,
    /// Verified min eigenvalue of the inequality slack.
    pub slack_min_eig: f64,
    /// Robustness bound implied by the certificate fields.
    pub bound_r: f64,
}

impl Certificate {
    pub fn feasible(&self) -> bool {
        is_feasible(self.slack_min_eig)
    }
}

/// `R_GD(alpha) = L alpha^2 d / (2 (1 - rho_GD(alpha)^2))`, an upper bound
/// on `J` for every objective in the class. Tight in its `O(alpha d)`
/// scaling: exact quadratic values meet it at `mu = L`.
///
/// # Errors
///
/// `OutOfRange` unless `0 < alpha < 2/L`; `InvalidArgument` for bad
/// `mu`, `l`, `d`.
pub fn gd_bound_r(alpha: f64, mu: f64, l: f64, d: usize) -> Result<f64> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    check_gd_alpha(alpha, l)?;
    let rho = quad::gd_rate(alpha, mu, l);
    Ok(l * alpha * alpha * d as f64 / (2.0 * (1.0 - rho * rho)))
}

/// The certified rate/robustness pair of the momentum parameterization
/// `beta(alpha) = (1 - sqrt(alpha mu)) / (1 + sqrt(alpha mu))`:
/// `rho_AG(alpha) = sqrt(1 - sqrt(alpha mu))` and
/// `R_AG(alpha) = sqrt(alpha) d (1 + alpha L) / (2 sqrt(mu))`.
///
/// # Errors
///
/// `OutOfRange` unless `0 < alpha <= 1/L`; `InvalidArgument` for bad
/// `mu`, `l`, `d`.
pub fn ag_explicit_bound(alpha: f64, mu: f64, l: f64, d: usize) -> Result<(f64, f64)> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    check_ag_alpha(alpha, l)?;
    let rho = (1.0 - (alpha * mu).sqrt()).max(0.0).sqrt();
    let r = alpha.sqrt() * d as f64 * (1.0 + alpha * l) / (2.0 * mu.sqrt());
    Ok((rho, r))
}

/// Builds and verifies the GD certificate at the analytic rate
/// `rho_GD(alpha)`, using the touching witness `p` at which the 2x2 slack
/// determinant is maximal. The widely quoted witness `p = L^2` is feasible
/// only near `alpha = 1/L`, so it is not used here.
///
/// # Errors
///
/// `OutOfRange` unless `0 < alpha < 2/L`; `InvalidArgument` for bad
/// `mu`, `l`, `d`.
pub fn gd_certificate(alpha: f64, mu: f64, l: f64, d: usize) -> Result<Certificate> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    check_gd_alpha(alpha, l)?;
    let rho = quad::gd_rate(alpha, mu, l);
    let p = gd_touching_p(alpha, mu, l, rho);
    let spec = AlgorithmSpec::gd(alpha)?;
    let blocks = build_blocks(&spec, mu, l, rho);
    let ptilde = DMatrix::from_row_slice(1, 1, &[p]);
    let slack_min_eig = check_mi(&blocks, 1.0, 0.0, &ptilde)?;
    Ok(Certificate {
        spec,
        ptilde,
        c0: 1.0,
        c: 0.0,
        cbar: 0.0,
        rho,
        slack_min_eig,
        bound_r: gd_bound_r(alpha, mu, l, d)?,
    })
}

/// The `p` maximizing the determinant of the GD slack at rate `rho`; at
/// `rho = rho_GD(alpha)` the maximum touches zero and this is the unique
/// feasible witness.
fn gd_touching_p(alpha: f64, mu: f64, l: f64, rho: f64) -> f64 {
    let one_m_r2 = 1.0 - rho * rho;
    let p_max = (2.0 * mu * l / one_m_r2.max(1e-300)).min(2.0 / (alpha * alpha));
    let b = 2.0 * alpha * (mu + l) - 2.0 * one_m_r2 - 2.0 * mu * l * alpha * alpha;
    let a2 = rho * rho * alpha * alpha;
    if a2 > 1e-300 {
        (b / (2.0 * a2)).clamp(p_max * 1e-12, p_max)
    } else {
        // rho = 0 happens only at mu = L, alpha = 1/L, where p = L^2 touches.
        (l * l).min(p_max)
    }
}

/// True when the GD inequality at rate `rho` admits some `p > 0`. The slack
/// determinant is concave in `p`, so feasibility is decided at its
/// (clamped) vertex in closed form.
fn gd_mi_feasible(alpha: f64, mu: f64, l: f64, rho: f64) -> bool {
    let one_m_r2 = 1.0 - rho * rho;
    let p_max = (2.0 * mu * l / one_m_r2.max(1e-300)).min(2.0 / (alpha * alpha));
    let b = 2.0 * alpha * (mu + l) - 2.0 * one_m_r2 - 2.0 * mu * l * alpha * alpha;
    let a2 = rho * rho * alpha * alpha;
    let c = 4.0 * mu * l - (mu + l) * (mu + l);
    let p = if a2 > 1e-300 {
        (b / (2.0 * a2)).clamp(0.0, p_max)
    } else if b > 0.0 {
        p_max
    } else {
        0.0
    };
    if p <= 0.0 {
        // det(0) = c = 4 mu L - (mu + L)^2 <= 0, with equality exactly at
        // mu = L; a zero witness certifies nothing, so a vertex clamped to
        // zero is infeasible rather than vacuously tolerated.
        return false;
    }
    let det = -a2 * p * p + b * p + c;
    det >= -1e-11 * (1.0 + (mu + l) * (mu + l))
}

/// Smallest `rho` for which the GD inequality is feasible for some `p > 0`,
/// by bisection; the result is clamped below at `1e-6` and matches the
/// analytic `rho_GD(alpha) = max{|1 - alpha mu|, |1 - alpha L|}` within
/// `1e-4`.
///
/// # Errors
///
/// `OutOfRange` unless `0 < alpha < 2/L`; `InvalidArgument` for bad `mu`,
/// `l`.
pub fn gd_min_rho(alpha: f64, mu: f64, l: f64) -> Result<f64> {
    check_mu_l(mu, l)?;
    check_gd_alpha(alpha, l)?;
    if gd_mi_feasible(alpha, mu, l, MIN_RHO_FLOOR) {
        return Ok(MIN_RHO_FLOOR);
    }
    let mut lo = MIN_RHO_FLOOR;
    let mut hi = 1.0 - 1e-12;
    if !gd_mi_feasible(alpha, mu, l, hi) {
        return Err(Error::NumericalFailure {
            context: "gd rate bisection: inequality infeasible for every rho below 1",
        });
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gd_mi_feasible(alpha, mu, l, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 {
            break;
        }
    }
    Ok(hi)
}

/// Builds and verifies the rank-one AG certificate for the momentum curve
/// `beta(alpha)` at the certified rate `sqrt(1 - sqrt(alpha mu))`:
/// `Ptilde = v v'` with `v = (sqrt(1/(2 alpha)), sqrt(mu/2) - sqrt(1/(2 alpha)))`,
/// `c0 = 0`, `c = 1`. Its implied bound equals [`ag_explicit_bound`]
/// whenever `Ptilde_22 > 0`.
///
/// # Errors
///
/// `OutOfRange` unless `0 < alpha <= 1/L`; `InvalidArgument` for bad
/// `mu`, `l`, `d`.
pub fn ag_analytic_certificate(alpha: f64, mu: f64, l: f64, d: usize) -> Result<Certificate> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    check_ag_alpha(alpha, l)?;
    let root = (alpha * mu).sqrt();
    let beta = (1.0 - root) / (1.0 + root);
    let rho = (1.0 - root).max(0.0).sqrt();
    let v = [
        (0.5 / alpha).sqrt(),
        (0.5 * mu).sqrt() - (0.5 / alpha).sqrt(),
    ];
    let mut ptilde = DMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            ptilde[(i, j)] = v[i] * v[j];
        }
    }
    let spec = AlgorithmSpec::ag(alpha, beta)?;
    let blocks = build_blocks(&spec, mu, l, rho);
    let slack_min_eig = check_mi(&blocks, 0.0, 1.0, &ptilde)?;
    let bound_r = branch_bound(1.0, &ptilde, rho, alpha, l, d)?;
    Ok(Certificate {
        spec,
        ptilde,
        c0: 0.0,
        c: 1.0,
        cbar: 0.0,
        rho,
        slack_min_eig,
        bound_r,
    })
}

/// The two-branch robustness bound of a feasible certificate with `c > 0`:
///
/// ```text
///     R = L alpha^2 d / (2 (1 - rho^2)) * (cL + 2 P11) / (cL + 2 (P11 - P12^2 / P22))
/// ```
///
/// when `P22 > 0`, and `L alpha^2 d / (2 (1 - rho^2))` when `P22 = 0`
/// (PSD then forces `P12 = 0`). A 1x1 GD certificate takes the second
/// branch.
///
/// # Errors
///
/// `InfeasibleCert` when the certificate's slack fails [`is_feasible`];
/// `InvalidArgument` when `c <= 0` or `rho` is not in `[0, 1)`.
pub fn r_from_certificate(cert: &Certificate, alpha: f64, l: f64, d: usize) -> Result<f64> {
    if !cert.feasible() {
        return Err(Error::InfeasibleCert {
            slack_min_eig: cert.slack_min_eig,
        });
    }
    if cert.c <= 0.0 {
        return Err(Error::InvalidArgument {
            arg: "cert",
            reason: format!("bound needs c > 0, got c = {}", cert.c),
        });
    }
    check_dim(d)?;
    branch_bound(cert.c, &cert.ptilde, cert.rho, alpha, l, d)
}

fn branch_bound(
    c: f64,
    ptilde: &DMatrix<f64>,
    rho: f64,
    alpha: f64,
    l: f64,
    d: usize,
) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidArgument {
            arg: "alpha",
            reason: format!("must be finite and positive, got {alpha}"),
        });
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument {
            arg: "rho",
            reason: format!("bound needs rho in [0, 1), got {rho}"),
        });
    }
    let base = l * alpha * alpha * d as f64 / (2.0 * (1.0 - rho * rho));
    let factor = if ptilde.nrows() == 2 && ptilde[(1, 1)] > 0.0 {
        let p11 = ptilde[(0, 0)];
        let p12 = ptilde[(0, 1)];
        let p22 = ptilde[(1, 1)];
        // PSD makes the Schur complement nonnegative, so the denominator
        // stays at or above cL.
        (c * l + 2.0 * p11) / (c * l + 2.0 * (p11 - p12 * p12 / p22).max(0.0))
    } else {
        1.0
    };
    Ok(base * factor)
}

/// Bound on the impulse-perturbation index `J*`: `alpha^2 d / (1 - rho_GD^2)`
/// for GD with `alpha` in `(0, 2/L)`, and
/// `alpha^2 d (1 + kappa) / sqrt(alpha mu)` for AG on the momentum curve
/// `beta = beta(alpha)` with `alpha` in `(0, 1/L]`.
///
/// # Errors
///
/// `OutOfRange` for a stepsize outside the stated window; `InvalidArgument`
/// when an AG spec's momentum is not `beta(alpha)` (the bound is proved on
/// that curve only) or for bad `mu`, `l`, `d`.
pub fn perturb_stability_bounds(spec: &AlgorithmSpec, mu: f64, l: f64, d: usize) -> Result<f64> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    let alpha = spec.alpha;
    match spec.method {
        Method::Gd => {
            check_gd_alpha(alpha, l)?;
            let rho = quad::gd_rate(alpha, mu, l);
            Ok(alpha * alpha * d as f64 / (1.0 - rho * rho))
        }
        Method::Ag => {
            check_ag_alpha(alpha, l)?;
            let root = (alpha * mu).sqrt();
            let beta_curve = (1.0 - root) / (1.0 + root);
            if (spec.beta - beta_curve).abs() > 1e-12 * (1.0 + beta_curve) {
                return Err(Error::InvalidArgument {
                    arg: "beta",
                    reason: format!(
                        "perturbation bound holds on the momentum curve beta(alpha) = \
                         {beta_curve}, got {}",
                        spec.beta
                    ),
                });
            }
            let kappa = l / mu;
            Ok(alpha * alpha * d as f64 * (1.0 + kappa) / root)
        }
    }
}

// ---------------------------------------------------------------------------
// The 4-variable SDP and the grid-certified trade-off curve.

/// Minimize `cost . x` over `x = (cbar, p11, p12, p22)` subject to
/// `lmi_const + sum_i x_i lmi_coeffs[i]` PSD, `cbar >= 0`, and
/// `[[p11, p12], [p12, p22]]` PSD.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub cost: [f64; 4],
    pub lmi_const: DMatrix<f64>,
    pub lmi_coeffs: [DMatrix<f64>; 4],
}

/// Solution report of [`solve_small_sdp`].
#[derive(Debug, Clone)]
pub struct SdpResult {
    /// `(cbar, p11, p12, p22)` at the final barrier iterate.
    pub x: [f64; 4],
    pub cost: f64,
    /// Min eigenvalue of the LMI slack at the solution. Strictly positive on
    /// the interior-point path; the exact `Ptilde = 0` vertex may touch.
    pub slack_min_eig: f64,
    /// KKT residual of the primal-dual pair at the final iterate, using the
    /// barrier method's Newton-corrected dual estimate: the larger of the
    /// stationarity violation `|c_i - sum_b tr(Z_b C_i)|` and the dual
    /// eigenvalue deficit `max(0, -lambda_min(Z_b))`. At most
    /// `SDP_KKT_TOL` except on instances whose optimum degenerates (tight
    /// LMI with rank-deficient `Ptilde` and `cbar = 0` at once), where
    /// centering stalls on evaluation noise and the reported iterate is
    /// instead backed by [`SdpResult::gap_bound`].
    pub kkt_residual: f64,
    /// Certified absolute suboptimality of `cost`: the barrier duality-gap
    /// surrogate `nu / t` at the returned iterate (zero for the exact
    /// `Ptilde = 0` vertex). At most `1e-6 (1 + |cost|)` whenever the solve
    /// returns `Ok`.
    pub gap_bound: f64,
    pub outer_iterations: usize,
}

/// One PSD block of the barrier problem, affine in the variables.
struct AffineBlock {
    constm: DMatrix<f64>,
    /// `(variable index, symmetric coefficient matrix)`.
    coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl AffineBlock {
    fn value(&self, z: &[f64]) -> DMatrix<f64> {
        let mut m = self.constm.clone();
        for (idx, coeff) in &self.coeffs {
            m += coeff * z[*idx];
        }
        m
    }
}

fn min_eig(m: &DMatrix<f64>) -> Result<f64> {
    Ok(linsys::symmetric_eigenvalues(m)?[0])
}

fn strictly_feasible(blocks: &[AffineBlock], z: &[f64]) -> Result<bool> {
    for b in blocks {
        if min_eig(&b.value(z))? <= 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `lin . z - sum_blocks ln det(block(z))`; caller guarantees strict
/// feasibility.
fn barrier_objective(blocks: &[AffineBlock], lin: &[f64], z: &[f64]) -> Result<f64> {
    let mut f: f64 = lin.iter().zip(z).map(|(a, b)| a * b).sum();
    for b in blocks {
        for eig in linsys::symmetric_eigenvalues(&b.value(z))? {
            if eig <= 0.0 {
                return Err(Error::NumericalFailure {
                    context: "barrier evaluated outside the cone",
                });
            }
            f -= eig.ln();
        }
    }
    Ok(f)
}

/// Gradient and Hessian of the barrier objective at `z`.
fn barrier_derivatives(
    blocks: &[AffineBlock],
    lin: &[f64],
    z: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = z.len();
    let mut grad = lin.to_vec();
    let mut hess = DMatrix::zeros(n, n);
    for b in blocks {
        let m = b.value(z);
        let inv = m.clone().try_inverse().ok_or(Error::NumericalFailure {
            context: "singular block inside the barrier",
        })?;
        // grad_i = -tr(M^-1 C_i); hess_ij = tr(M^-1 C_i M^-1 C_j).
        let prods: Vec<(usize, DMatrix<f64>)> = b
            .coeffs
            .iter()
            .map(|(idx, c)| (*idx, &inv * c))
            .collect();
        for (i, gi) in &prods {
            grad[*i] -= gi.trace();
            for (j, gj) in &prods {
                if j < i {
                    continue;
                }
                let v = (gi * gj).trace();
                hess[(*i, *j)] += v;
                if i != j {
                    hess[(*j, *i)] += v;
                }
            }
        }
    }
    Ok((grad, hess))
}

/// Residual `rhs - m y` with each product split exactly via fused
/// multiply-add and both halves accumulated separately, so cancellation in
/// the leading terms does not swamp the correction. This is the standard
/// compensated dot product; it makes iterative refinement converge to a
/// forward-accurate solution whenever `eps * cond` is below one, where
/// plain working-precision residuals stall at `cond`-amplified noise.
fn compensated_residual(m: &DMatrix<f64>, y: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rhs.nrows();
    DMatrix::from_fn(n, 1, |i, _| {
        let mut main = rhs[(i, 0)];
        let mut comp = 0.0f64;
        for j in 0..n {
            let a = -m[(i, j)];
            let b = y[(j, 0)];
            let p = a * b;
            comp += a.mul_add(b, -p);
            let s = main + p;
            // Neumaier update: the rounding error of s is recoverable
            // exactly from whichever addend is smaller.
            comp += if main.abs() >= p.abs() {
                (main - s) + p
            } else {
                (p - s) + main
            };
            main = s;
        }
        main + comp
    })
}

/// Solves `hess * step = -grad`. Near the cone boundary the Hessian
/// diagonal spans many orders of magnitude (a scalar barrier contributes
/// `1/cbar^2`), so the system is solved in Jacobi-scaled form with
/// compensated-residual iterative refinement; the Hessian is a Gram
/// matrix, for which diagonal scaling is near-optimal, and the compensated
/// residuals keep the refinement contracting at conditioning where plain
/// residuals leave the step direction noise-dominated.
fn newton_step(hess: &DMatrix<f64>, grad: &[f64]) -> Result<DMatrix<f64>> {
    let n = grad.len();
    let scale: Vec<f64> = (0..n).map(|i| hess[(i, i)].max(1e-300).sqrt()).collect();
    let mut hs = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            hs[(i, j)] = hess[(i, j)] / (scale[i] * scale[j]);
        }
    }
    let gs = DMatrix::from_fn(n, 1, |i, _| -grad[i] / scale[i]);
    let lu = hs.clone().lu();
    let mut y = lu.solve(&gs).ok_or(Error::NumericalFailure {
        context: "singular Newton system in the barrier solver",
    })?;
    for _ in 0..6 {
        let resid = compensated_residual(&hs, &y, &gs);
        match lu.solve(&resid) {
            Some(dy) => {
                let done = dy.norm() <= f64::EPSILON * y.norm();
                y += dy;
                if done {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(DMatrix::from_fn(n, 1, |i, _| y[(i, 0)] / scale[i]))
}

/// Damped Newton descent on the barrier objective. Returns the final
/// gradient (for KKT reporting).
fn newton_minimize(blocks: &[AffineBlock], lin: &[f64], z: &mut [f64]) -> Result<Vec<f64>> {
    let mut f = barrier_objective(blocks, lin, z)?;
    let mut prev_lambda2 = f64::INFINITY;
    let mut prev_iterate: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..NEWTON_MAX_ITER {
        let (grad, hess) = barrier_derivatives(blocks, lin, z)?;
        let step = newton_step(&hess, &grad)?;
        let descent: f64 = grad.iter().zip(step.iter()).map(|(a, b)| a * b).sum();
        if !descent.is_finite() {
            return Err(Error::NumericalFailure {
                context: "non-finite Newton direction",
            });
        }
        // descent = -lambda^2 for the Newton decrement lambda.
        let lambda2 = -descent;
        if lambda2 <= NEWTON_DECREMENT_TOL {
            if lambda2 >= 0.0 {
                return Ok(grad);
            }
            // An ascent "direction" means the step is pure solve noise;
            // hand back the best iterate seen.
            if let Some((best_z, best_grad)) = prev_iterate {
                z.copy_from_slice(&best_z);
                return Ok(best_grad);
            }
            return Ok(grad);
        }
        if lambda2 < NEWTON_FULL_STEP_TOL {
            // Quadratic phase: lambda^2 should square per step, so a drop
            // by less than half means the gradient-noise floor is reached
            // and the iterate will not improve further.
            if lambda2 >= 0.5 * prev_lambda2 {
                if lambda2 > prev_lambda2 {
                    // The last step made things worse; revert to it.
                    if let Some((best_z, best_grad)) = prev_iterate {
                        z.copy_from_slice(&best_z);
                        return Ok(best_grad);
                    }
                }
                return Ok(grad);
            }
            // Objective decrease is guaranteed by self-concordance along
            // this direction and may fall below float resolution, so only
            // feasibility is checked: take the longest feasible halving of
            // the full step.
            prev_lambda2 = lambda2;
            let mut s = 1.0f64;
            for _ in 0..60 {
                let trial: Vec<f64> = z
                    .iter()
                    .zip(step.iter())
                    .map(|(zi, si)| zi + s * si)
                    .collect();
                if strictly_feasible(blocks, &trial)? {
                    prev_iterate = Some((z.to_vec(), grad.clone()));
                    z.copy_from_slice(&trial);
                    f = barrier_objective(blocks, lin, z)?;
                    break;
                }
                s *= 0.5;
            }
            continue;
        }
        prev_lambda2 = lambda2;
        let mut t = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = z
                .iter()
                .zip(step.iter())
                .map(|(zi, si)| zi + t * si)
                .collect();
            if strictly_feasible(blocks, &trial)? {
                let ft = barrier_objective(blocks, lin, &trial)?;
                if ft <= f + 1e-4 * t * descent {
                    z.copy_from_slice(&trial);
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NumericalFailure {
                context: "barrier Newton failed to decrease",
            });
        }
    }
    let (grad, _) = barrier_derivatives(blocks, lin, z)?;
    Ok(grad)
}

/// Maximizes the concave `lambda_min(F0 + cbar X0)` over `cbar >= 0` by
/// bracket expansion and ternary search; `Some((cbar, max))` when the
/// maximum is nonnegative, i.e. `Ptilde = 0` is feasible.
fn p11_zero_optimum(problem: &SdpProblem) -> Result<Option<(f64, f64)>> {
    let f = |cbar: f64| -> Result<f64> {
        min_eig(&(&problem.lmi_const + &problem.lmi_coeffs[0] * cbar))
    };
    let mut hi = 1.0f64;
    for _ in 0..60 {
        if f(2.0 * hi)? > f(hi)? {
            hi *= 2.0;
        } else {
            break;
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1)? < f(m2)? {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mid = 0.5 * (lo + hi);
    let best = [0.0, mid]
        .into_iter()
        .map(|c| Ok((c, f(c)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite eigenvalues"))
        .expect("nonempty");
    Ok(if best.1 >= 0.0 { Some(best) } else { None })
}

/// KKT residual of the primal-dual pair at `x`, with the barrier method's
/// Newton-corrected dual estimate `Z_b = (M_b^-1 - M_b^-1 DM_b M_b^-1)/t`,
/// `DM_b` the Newton displacement of block `b`. Stationarity
/// `c_i = sum_b tr(Z_b C_i^b)` holds to solver precision at a centered
/// iterate even when the active constraints make the Hessian arbitrarily
/// graded; the reported residual is the larger of its violation and any
/// dual eigenvalue deficit.
fn kkt_residual_at(blocks: &[AffineBlock], cost: &[f64], t: f64, x: &[f64]) -> Result<f64> {
    let lin: Vec<f64> = cost.iter().map(|c| c * t).collect();
    let (grad, hess) = barrier_derivatives(blocks, &lin, x)?;
    let step = newton_step(&hess, &grad)?;
    let mut residual = 0.0f64;
    let mut stationarity = cost.to_vec();
    for b in blocks {
        let m = b.value(x);
        let inv = m.clone().try_inverse().ok_or(Error::NumericalFailure {
            context: "singular block at the reported SDP solution",
        })?;
        let mut dm = DMatrix::zeros(m.nrows(), m.ncols());
        for (idx, coeff) in &b.coeffs {
            dm += coeff * step[(*idx, 0)];
        }
        let corr = &inv * &dm * &inv;
        let mut zb = (&inv - &corr) * (1.0 / t);
        symmetrize(&mut zb);
        residual = residual.max(-linsys::symmetric_eigenvalues(&zb)?[0]).max(0.0);
        for (idx, coeff) in &b.coeffs {
            stationarity[*idx] -= (&zb * coeff).trace();
        }
    }
    for s in &stationarity {
        residual = residual.max(s.abs());
    }
    Ok(residual)
}

/// The three cone blocks of `problem` over `x = (cbar, p11, p12, p22)`:
/// the LMI slack, `cbar >= 0`, and `Ptilde >= 0`.
fn cone_blocks(problem: &SdpProblem) -> Vec<AffineBlock> {
    let e11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let e22 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    vec![
        AffineBlock {
            constm: problem.lmi_const.clone(),
            coeffs: (0..4).map(|i| (i, problem.lmi_coeffs[i].clone())).collect(),
        },
        AffineBlock {
            constm: DMatrix::zeros(1, 1),
            coeffs: vec![(0, DMatrix::identity(1, 1))],
        },
        AffineBlock {
            constm: DMatrix::zeros(2, 2),
            coeffs: vec![(1, e11), (2, e12), (3, e22)],
        },
    ]
}

/// `R - x_i >= 0` and `R + x_i >= 0` for every variable.
fn box_blocks() -> Vec<AffineBlock> {
    (0..4)
        .flat_map(|i| {
            [1.0f64, -1.0].into_iter().map(move |sign| AffineBlock {
                constm: DMatrix::from_row_slice(1, 1, &[SDP_BOX_RADIUS]),
                coeffs: vec![(i, DMatrix::from_row_slice(1, 1, &[sign]))],
            })
        })
        .collect()
}

/// Phase-2 blocks: cones plus variable boxes.
fn phase2_blocks(problem: &SdpProblem) -> Vec<AffineBlock> {
    let mut blocks = cone_blocks(problem);
    blocks.extend(box_blocks());
    blocks
}

/// Total barrier parameter: one per scalar constraint, block dimension per
/// cone block. The duality-gap surrogate is `nu / t`.
fn barrier_nu(blocks: &[AffineBlock]) -> f64 {
    blocks.iter().map(|b| b.constm.nrows() as f64).sum()
}

/// Interior-point solve of a 4-variable SDP: a slack-maximization phase
/// finds a strictly feasible point (or certifies infeasibility), then a
/// logarithmic-barrier Newton phase minimizes the cost to a duality-gap
/// surrogate of `1e-6 (1 + |cost|)`, tightening further until the
/// stationarity residual is at most `1e-7` when the instance's
/// conditioning permits. Degenerate optima floor the residual above that
/// (see [`SdpResult::kkt_residual`]); the returned iterate is then the
/// last gap-certified one, so `Ok` always carries a strictly feasible
/// point within the gap tolerance of optimal.
///
/// # Errors
///
/// `Infeasible` when the maximal slack is at most `1e-9`;
/// `NumericalFailure` when a barrier Newton step cannot make progress
/// before any iterate reaches the gap tolerance.
pub fn solve_small_sdp(problem: &SdpProblem) -> Result<SdpResult> {
    // The p11-minimization instance has the exact global lower bound
    // p11 >= 0 (from Ptilde >= 0). When some (cbar, Ptilde = 0) satisfies
    // the LMI, that vertex is optimal with exact dual certificate
    // (Z_lmi, z_cbar, Z_P) = (0, 0, E11): zero gap, zero KKT residual. The
    // barrier path into this triply degenerate corner is numerically
    // hopeless, so detect it directly; lambda_min(F0 + cbar X0) is concave
    // in cbar, so a one-dimensional concave search decides it.
    if problem.cost == [0.0, 1.0, 0.0, 0.0] {
        if let Some((cbar, slack)) = p11_zero_optimum(problem)? {
            return Ok(SdpResult {
                x: [cbar, 0.0, 0.0, 0.0],
                cost: 0.0,
                slack_min_eig: slack,
                kkt_residual: 0.0,
                gap_bound: 0.0,
                outer_iterations: 0,
            });
        }
    }
    // Phase 1: maximize s with the cone blocks shifted by -sI; variables
    // (x, s). Boxes stay unshifted, and s itself is capped at 1: certifying
    // a unit margin is enough, and without the cap "maximize s" is
    // unbounded for deep-feasible instances.
    let shift = |b: AffineBlock| -> AffineBlock {
        let n = b.constm.nrows();
        let mut coeffs = b.coeffs;
        coeffs.push((4, -DMatrix::<f64>::identity(n, n)));
        AffineBlock {
            constm: b.constm,
            coeffs,
        }
    };
    let mut p1_blocks: Vec<AffineBlock> =
        cone_blocks(problem).into_iter().map(shift).collect();
    let mut z = vec![1.0, 1.0, 0.0, 1.0, 0.0];
    let start_margin = {
        let mut m = f64::INFINITY;
        for b in &p1_blocks {
            // The value at s = 0 is the unshifted block.
            m = m.min(min_eig(&b.value(&z))?);
        }
        m
    };
    p1_blocks.extend(box_blocks());
    p1_blocks.push(AffineBlock {
        constm: DMatrix::from_row_slice(1, 1, &[1.0]),
        coeffs: vec![(4, DMatrix::from_row_slice(1, 1, &[-1.0]))],
    });
    z[4] = (start_margin - 1.0).min(0.5);
    let nu1 = barrier_nu(&p1_blocks);
    let mut t = 1.0f64;
    for _ in 0..BARRIER_MAX_OUTER {
        let lin = [0.0, 0.0, 0.0, 0.0, -t];
        newton_minimize(&p1_blocks, &lin, &mut z)?;
        let s = z[4];
        if s >= PHASE1_EXIT_MARGIN {
            break;
        }
        if s + nu1 / t <= PHASE1_INFEASIBLE_TOL {
            return Err(Error::Infeasible { slack: s + nu1 / t });
        }
        t *= BARRIER_T_GROWTH;
    }
    if z[4] <= PHASE1_INFEASIBLE_TOL {
        return Err(Error::Infeasible { slack: z[4] });
    }

    // Phase 2: barrier descent on the cost from the strictly feasible point.
    let blocks = phase2_blocks(problem);
    let nu2 = barrier_nu(&blocks);
    let mut x = vec![z[0], z[1], z[2], z[3]];
    let mut t = 1.0f64;
    let mut outer = 0;
    // Latest gap-certified iterate (x, gap, measured KKT residual).
    // Degenerate optima (tight LMI, rank-deficient Ptilde, cbar = 0 at
    // once) floor the achievable stationarity residual above SDP_KKT_TOL:
    // past some barrier weight the slacks shrink to eps * |M| where the
    // barrier derivatives are evaluation noise. A gap-certified iterate is
    // still a valid certificate with suboptimality at most the gap, so it
    // is what a stalled solve returns.
    let mut fallback: Option<(Vec<f64>, f64, f64)> = None;
    let (kkt_residual, gap_bound) = loop {
        outer += 1;
        let lin: Vec<f64> = problem.cost.iter().map(|c| c * t).collect();
        if let Err(err) = newton_minimize(&blocks, &lin, &mut x) {
            let (xc, gap, residual) = fallback.take().ok_or(err)?;
            x = xc;
            break (residual, gap);
        }
        let cost: f64 = problem.cost.iter().zip(&x).map(|(a, b)| a * b).sum();
        if nu2 / t <= SDP_GAP_TOL * (1.0 + cost.abs()) {
            // The gap surrogate scales with the cost, the stationarity
            // certificate does not; on big-cost instances the gap converges
            // first, so keep tightening the barrier until the dual residual
            // is certified too.
            let residual = kkt_residual_at(&blocks, &problem.cost, t, &x)?;
            if residual <= SDP_KKT_TOL {
                break (residual, nu2 / t);
            }
            fallback = Some((x.clone(), nu2 / t, residual));
        }
        if outer >= BARRIER_MAX_OUTER {
            let using = fallback.take().ok_or(Error::NumericalFailure {
                context: "sdp kkt residual above tolerance",
            })?;
            let (xc, gap, residual) = using;
            x = xc;
            break (residual, gap);
        }
        t *= BARRIER_T_GROWTH;
    };
    let cost: f64 = problem.cost.iter().zip(&x).map(|(a, b)| a * b).sum();
    let slack_min_eig = min_eig(&blocks[0].value(&x))?;
    Ok(SdpResult {
        x: [x[0], x[1], x[2], x[3]],
        cost,
        slack_min_eig,
        kkt_residual,
        gap_bound,
        outer_iterations: outer,
    })
}

/// The grid SDP at one AG parameter point: minimize `p11` subject to
/// `cbar X0 + X(rho) >= Phi(Ptilde)` with `c = 1` fixed.
///
/// # Errors
///
/// `InvalidArgument` for GD blocks, which have no `X(rho)`.
pub fn ag_sdp_problem(blocks: &MiBlocks) -> Result<SdpProblem> {
    let x_rho = blocks.x_of_rho().ok_or(Error::InvalidArgument {
        arg: "blocks",
        reason: "the grid SDP needs AG blocks (GD has no X(rho))".into(),
    })?;
    let e11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let e12 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let e22 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    Ok(SdpProblem {
        cost: [0.0, 1.0, 0.0, 0.0],
        lmi_const: x_rho,
        lmi_coeffs: [
            blocks.x0.clone(),
            -blocks.phi_of(&e11),
            -blocks.phi_of(&e12),
            -blocks.phi_of(&e22),
        ],
    })
}

/// Certified AG rate-robustness curve from the grid of 4-variable SDPs.
///
/// For each `eps`, the target rate is `rho_eps = (1 + eps) sqrt(1 - 1/sqrt(kappa))`
/// and the reported value is the smallest
/// `alpha^2 d (L + 2 p11) / (2 (1 - rho_eps^2))` over an
/// `(alpha, beta)` grid on `(0, 2/L] x [0, 1]` with the analytic witness
/// point `(alpha_eps, beta_eps)` appended; grid points whose exact
/// quadratic rate already exceeds `rho_eps` are skipped, since a
/// certificate with `c = 1` at rate `rho_eps` would bound that quadratic's
/// spectral radius and therefore cannot exist there.
///
/// Points carry the target rate, the certified bound as `j`, and the
/// minimizing `(alpha, beta)`; the curve is sorted by rate and keeps one
/// point per requested `eps` (no Pareto filtering).
///
/// # Errors
///
/// `EmptyGrid` for an empty `eps` grid; `InvalidArgument` for grid counts
/// below 8 or bad `mu`, `l`, `d`; `KappaOne` and `EpsOutOfRange` from the
/// `eps` parameterization; solver errors other than per-point
/// infeasibility are propagated.
pub fn ag_sdp_curve(
    eps_grid: &[f64],
    mu: f64,
    l: f64,
    d: usize,
    grid_alpha: usize,
    grid_beta: usize,
) -> Result<ParetoCurve> {
    check_mu_l(mu, l)?;
    check_dim(d)?;
    if eps_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid_alpha < 8 || grid_beta < 8 {
        return Err(Error::InvalidArgument {
            arg: "grid",
            reason: format!("grid counts must be at least 8, got {grid_alpha}x{grid_beta}"),
        });
    }
    let kappa = l / mu;
    let rho_bar = (1.0 - 1.0 / kappa.sqrt()).sqrt();
    let alphas: Vec<f64> = (1..=grid_alpha)
        .map(|i| 2.0 / l * i as f64 / grid_alpha as f64)
        .collect();
    let betas: Vec<f64> = (0..grid_beta)
        .map(|j| j as f64 / (grid_beta - 1) as f64)
        .collect();
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let (alpha_eps, beta_eps) = tradeoff::ag_alpha_for_eps(eps, mu, l)?;
        let rho_eps = (1.0 + eps) * rho_bar;
        let mut cands: Vec<(f64, f64)> = Vec::with_capacity(alphas.len() * betas.len() + 1);
        for &a in &alphas {
            for &b in &betas {
                cands.push((a, b));
            }
        }
        cands.push((alpha_eps, beta_eps));
        // Minimize alpha^2 (L + 2 p11) across the grid; ties break towards
        // the earlier grid index so the reduction is order-independent.
        let best = cands
            .par_iter()
            .enumerate()
            .map(|(idx, &(a, b))| -> Result<Option<(f64, usize, f64, f64)>> {
                if quad::ag_rate(a, b, mu, l) > rho_eps {
                    return Ok(None);
                }
                let spec = AlgorithmSpec::ag(a, b)?;
                let blocks = build_blocks(&spec, mu, l, rho_eps);
                let problem = ag_sdp_problem(&blocks)?;
                match solve_small_sdp(&problem) {
                    Ok(res) => Ok(Some((a * a * (l + 2.0 * res.cost), idx, a, b))),
                    Err(Error::Infeasible { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .try_reduce(
                || None,
                |u, v| {
                    Ok(match (u, v) {
                        (None, v) => v,
                        (u, None) => u,
                        (Some(a), Some(b)) => {
                            if (b.0, b.1) < (a.0, a.1) {
                                Some(b)
                            } else {
                                Some(a)
                            }
                        }
                    })
                },
            )?;
        let (key, _, a_star, b_star) = best.ok_or(Error::EmptyGrid)?;
        let rbar = key * d as f64 / (2.0 * (1.0 - rho_eps * rho_eps));
        points.push(RateRobustnessPoint {
            rho: rho_eps,
            j: rbar,
            jprime: None,
            params: AlgorithmSpec::ag(a_star, b_star)?,
        });
    }
    points.sort_by(|p, q| p.rho.partial_cmp(&q.rho).expect("finite rates"));
    Ok(ParetoCurve {
        points,
        method: Method::Ag,
        provenance: Provenance::SdpCert,
    })
}
