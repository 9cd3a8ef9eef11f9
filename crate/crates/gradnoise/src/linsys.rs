//! State-space form of the noisy first-order methods and the linear-algebra
//! kernels built on it.
//!
//! Both methods are written as a linear system in feedback with the gradient,
//!
//! ```text
//! xi_{k+1} = A xi_k + B (u_k + w_k),    y_k = C xi_k,    u_k = grad f(y_k),
//! ```
//!
//! with the iterate of interest recovered as `x_k = T xi_k`. For GD the state
//! is `xi_k = x_k` (`A = I`, `B = -alpha I`, `C = T = I`); for AG the state
//! stacks `[x_k; x_{k-1}]`. On a quadratic objective with Hessian eigenvalues
//! `lambda_i` the feedback is linear and the closed loop is
//! `A_cl = A + B diag(lambda) C`.
//!
//! Steady-state noise amplification is an H2 norm squared: with `X` solving
//! the discrete Lyapunov (Stein) equation `A X A' - X + B B' = 0`, the
//! amplification from unit white noise to the output `C_out xi` is
//! `trace(C_out X C_out')`.
//!
//! The solvers exploit the structure these systems actually have: closed-loop
//! matrices are diagonal (GD) or permute into independent 2x2 blocks, one per
//! Hessian eigenvalue (AG). A dense vectorized path is kept as the reference
//! implementation for cross-checks and small ad-hoc systems.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance below which a matrix is treated as symmetric.
const SYMMETRY_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius tolerance (relative) for the Jacobi eigensolver.
const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi eigensolver.
const JACOBI_MAX_SWEEPS: usize = 50;
/// A closed loop is accepted as stable only below this spectral radius.
pub const STABILITY_MARGIN: f64 = 1.0 - 1e-12;
/// Largest dimension accepted by the dense vectorized Lyapunov path.
const DENSE_LYAPUNOV_MAX_DIM: usize = 64;
/// Largest dimension for the characteristic-polynomial eigenvalue path.
const CHARPOLY_MAX_DIM: usize = 16;

/// The two first-order methods this crate analyzes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Gd,
    Ag,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Gd => write!(f, "gd"),
            Method::Ag => write!(f, "ag"),
        }
    }
}

/// A method together with its stepsize `alpha` and momentum `beta`.
///
/// GD always carries `beta = 0`. Construct via [`AlgorithmSpec::gd`] or
/// [`AlgorithmSpec::ag`], which validate signs and finiteness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
}

impl AlgorithmSpec {
    /// Gradient descent with stepsize `alpha > 0`.
    pub fn gd(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument {
                arg: "alpha",
                reason: format!("must be finite and positive, got {alpha}"),
            });
        }
        Ok(Self {
            method: Method::Gd,
            alpha,
            beta: 0.0,
        })
    }

    /// Accelerated gradient with stepsize `alpha > 0` and momentum `beta >= 0`.
    pub fn ag(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidArgument {
                arg: "alpha",
                reason: format!("must be finite and positive, got {alpha}"),
            });
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument {
                arg: "beta",
                reason: format!("must be finite and nonnegative, got {beta}"),
            });
        }
        Ok(Self {
            method: Method::Ag,
            alpha,
            beta,
        })
    }
}

/// Eigenvalues of a quadratic objective's Hessian, sorted ascending.
///
/// All analysis of quadratics happens in the Hessian eigenbasis, so a
/// quadratic is fully described by this list; `mu` and `L` are its extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpectrum {
    eigenvalues: Vec<f64>,
}

impl QuadraticSpectrum {
    /// Builds a spectrum from (not necessarily sorted) eigenvalues, all of
    /// which must be finite and strictly positive.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument {
                arg: "eigenvalues",
                reason: "spectrum must be nonempty".into(),
            });
        }
        for &ev in &eigenvalues {
            if !ev.is_finite() || ev <= 0.0 {
                return Err(Error::InvalidArgument {
                    arg: "eigenvalues",
                    reason: format!("must all be finite and positive, got {ev}"),
                });
            }
        }
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite by validation"));
        Ok(Self { eigenvalues })
    }

    /// Two-point spectrum `{mu, L}` repeated to dimension `d` with `d - 1`
    /// copies of `L`; convenient for worst-case studies.
    pub fn two_point(mu: f64, l: f64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument {
                arg: "d",
                reason: "two-point spectrum needs d >= 2".into(),
            });
        }
        let mut eigs = vec![l; d];
        eigs[0] = mu;
        Self::new(eigs)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest eigenvalue (strong convexity modulus).
    pub fn mu(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Largest eigenvalue (gradient Lipschitz constant).
    pub fn l(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty by construction")
    }

    /// Condition number `L / mu`.
    pub fn kappa(&self) -> f64 {
        self.l() / self.mu()
    }

    pub fn d(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// The `(A, B, C)` realization of a method in dimension `d`, together with
/// the selector `T` mapping the state to the iterate `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// State dimension: `d` for GD, `2d` for AG.
    pub state_dim: usize,
    /// Input/output dimension `d`.
    pub io_dim: usize,
}

/// Builds the state-space realization of `spec` in ambient dimension `d`.
pub fn build_system(spec: &AlgorithmSpec, d: usize) -> Result<SystemMatrices> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be positive".into(),
        });
    }
    let (alpha, beta) = (spec.alpha, spec.beta);
    match spec.method {
        Method::Gd => Ok(SystemMatrices {
            a: DMatrix::identity(d, d),
            b: DMatrix::from_diagonal_element(d, d, -alpha),
            c: DMatrix::identity(d, d),
            t: DMatrix::identity(d, d),
            state_dim: d,
            io_dim: d,
        }),
        Method::Ag => {
            let n = 2 * d;
            let mut a = DMatrix::zeros(n, n);
            let mut b = DMatrix::zeros(n, d);
            let mut c = DMatrix::zeros(d, n);
            let mut t = DMatrix::zeros(d, n);
            for i in 0..d {
                a[(i, i)] = 1.0 + beta;
                a[(i, d + i)] = -beta;
                a[(d + i, i)] = 1.0;
                b[(i, i)] = -alpha;
                c[(i, i)] = 1.0 + beta;
                c[(i, d + i)] = -beta;
                t[(i, i)] = 1.0;
            }
            Ok(SystemMatrices {
                a,
                b,
                c,
                t,
                state_dim: n,
                io_dim: d,
            })
        }
    }
}

/// Closed-loop matrix `A + B diag(lambda) C` for a quadratic with the given
/// Hessian spectrum.
pub fn closed_loop_matrix(sys: &SystemMatrices, spectrum: &QuadraticSpectrum) -> Result<DMatrix<f64>> {
    if sys.io_dim != spectrum.d() {
        return Err(Error::InvalidArgument {
            arg: "spectrum",
            reason: format!(
                "dimension mismatch: system expects {}, spectrum has {}",
                sys.io_dim,
                spectrum.d()
            ),
        });
    }
    let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(spectrum.eigenvalues()));
    Ok(&sys.a + &sys.b * lambda * &sys.c)
}

fn check_square(m: &DMatrix<f64>, arg: &'static str) -> Result<usize> {
    if m.nrows() == 0 || m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument {
            arg,
            reason: format!("expected nonempty square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    for &v in m.iter() {
        if !v.is_finite() {
            return Err(Error::InvalidArgument {
                arg,
                reason: "matrix has non-finite entries".into(),
            });
        }
    }
    Ok(m.nrows())
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()))
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// True when an even-dimensional matrix consists of four diagonal d x d
/// blocks, i.e. every nonzero sits at `(i, j)` with `i = j (mod d)`. The AG
/// closed loop and its Gramian weights all have this shape, which decouples
/// into one 2x2 system per Hessian eigenvalue.
fn has_diagonal_block_structure(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n < 2 || !n.is_multiple_of(2) {
        return false;
    }
    let d = n / 2;
    for i in 0..n {
        for j in 0..n {
            if i % d != j % d && m[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Extracts the 2x2 block `[[m[i,i], m[i,d+i]], [m[d+i,i], m[d+i,d+i]]]` of a
/// four-diagonal-block matrix.
fn diagonal_block(m: &DMatrix<f64>, d: usize, i: usize) -> [[f64; 2]; 2] {
    [
        [m[(i, i)], m[(i, d + i)]],
        [m[(d + i, i)], m[(d + i, d + i)]],
    ]
}

/// Largest eigenvalue modulus of a real 2x2 matrix, in closed form.
fn max_abs_eig_2x2(b: [[f64; 2]; 2]) -> f64 {
    let tr = b[0][0] + b[1][1];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
    } else {
        // Complex pair: modulus is sqrt(det), and det > 0 whenever disc < 0.
        det.sqrt()
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns the eigenvalues in ascending order. Fails with `NoConvergence` if
/// the off-diagonal mass has not dropped below `1e-12` (relative to the
/// Frobenius norm) after 50 sweeps, which does not happen for symmetric
/// input of sane scale. One extra polishing sweep runs after the threshold
/// is met; Jacobi converges quadratically, so the returned diagonal is
/// accurate to roundoff rather than to the stopping threshold. Certificate
/// slack checks at absolute tolerances near 1e-10 rely on that.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = check_square(m, "m")?;
    if !is_symmetric(m) {
        return Err(Error::InvalidArgument {
            arg: "m",
            reason: "matrix is not symmetric".into(),
        });
    }
    let mut a = m.clone();
    let scale = m.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= JACOBI_TOL * scale {
            if converged {
                let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
                eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                return Ok(eigs);
            }
            converged = true;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e12 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip - s * (aiq + tau * aip);
                    a[(p, i)] = a[(i, p)];
                    a[(i, q)] = aiq + s * (aip - tau * aiq);
                    a[(q, i)] = a[(i, q)];
                }
            }
        }
    }
    if converged {
        let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        return Ok(eigs);
    }
    Err(Error::NoConvergence {
        what: "jacobi eigensolver",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

/// Coefficients of the characteristic polynomial of `a`, highest degree
/// first and monic, by the Faddeev-LeVerrier recurrence.
fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let eye = DMatrix::<f64>::identity(n, n);
    let mut mk = a.clone();
    let mut ck = -mk.trace();
    coeffs.push(ck);
    for k in 2..=n {
        mk = a * (&mk + ck * &eye);
        ck = -mk.trace() / k as f64;
        coeffs.push(ck);
    }
    coeffs
}

/// Spectral radius of a square real matrix.
///
/// Dispatch, in order: symmetric input goes through the Jacobi eigensolver
/// (any size); 1x1 and 2x2 are analytic; even-dimensional matrices made of
/// four diagonal blocks decouple into 2x2 problems (the AG closed-loop
/// shape, any size); remaining dense matrices up to 16x16 go through the
/// characteristic polynomial and the Aberth root finder. Larger unstructured
/// nonsymmetric input is rejected with `Unsupported`.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(m, "m")?;
    if n == 1 {
        return Ok(m[(0, 0)].abs());
    }
    if is_symmetric(m) {
        let eigs = symmetric_eigenvalues(m)?;
        return Ok(eigs.iter().fold(0.0_f64, |acc, &e| acc.max(e.abs())));
    }
    if n == 2 {
        return Ok(max_abs_eig_2x2([
            [m[(0, 0)], m[(0, 1)]],
            [m[(1, 0)], m[(1, 1)]],
        ]));
    }
    if has_diagonal_block_structure(m) {
        let d = n / 2;
        let mut rho = 0.0_f64;
        for i in 0..d {
            rho = rho.max(max_abs_eig_2x2(diagonal_block(m, d, i)));
        }
        return Ok(rho);
    }
    if n <= CHARPOLY_MAX_DIM {
        // Scale to unit max entry first: the recurrence forms entries of
        // order (matrix scale)^n and the roots scale back linearly.
        let scale = max_abs(m).max(f64::MIN_POSITIVE);
        let scaled = m.map(|v| v / scale);
        let coeffs = characteristic_polynomial(&scaled);
        let roots = crate::tradeoff::poly_roots(&coeffs)?;
        let rho = roots.iter().fold(0.0_f64, |acc, r| acc.max(r.norm()));
        return Ok(rho * scale);
    }
    Err(Error::Unsupported {
        what: "spectral_radius",
        reason: format!("dense nonsymmetric {n}x{n} input exceeds the {CHARPOLY_MAX_DIM}x{CHARPOLY_MAX_DIM} characteristic-polynomial path"),
    })
}

/// Solution of a discrete Lyapunov (Stein) equation `A X A' - X + W = 0`.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    /// Symmetric solution matrix.
    pub x: DMatrix<f64>,
    /// Max-abs entry of `A X A' - X + W` evaluated at the returned `X`.
    pub residual: f64,
}

fn validate_lyapunov_inputs(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<usize> {
    let n = check_square(a, "a")?;
    let nw = check_square(w, "w")?;
    if n != nw {
        return Err(Error::InvalidArgument {
            arg: "w",
            reason: format!("dimension mismatch: A is {n}x{n}, W is {nw}x{nw}"),
        });
    }
    if !is_symmetric(w) {
        return Err(Error::InvalidArgument {
            arg: "w",
            reason: "W must be symmetric".into(),
        });
    }
    Ok(n)
}

fn check_stability(a: &DMatrix<f64>) -> Result<()> {
    let rho = spectral_radius(a)?;
    if rho > STABILITY_MARGIN {
        return Err(Error::Unstable { rho });
    }
    Ok(())
}

fn lyapunov_residual(a: &DMatrix<f64>, w: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let r = a * x * a.transpose() - x + w;
    max_abs(&r)
}

/// Solves one 2x2 Stein equation `T Y T' - Y + W = 0` via the equivalent 3x3
/// linear system in `(y11, y12, y22)`.
fn solve_lyapunov_2x2(t: [[f64; 2]; 2], w: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let (t11, t12, t21, t22) = (t[0][0], t[0][1], t[1][0], t[1][1]);
    let m = Matrix3::new(
        t11 * t11 - 1.0,
        2.0 * t11 * t12,
        t12 * t12,
        t11 * t21,
        t11 * t22 + t12 * t21 - 1.0,
        t12 * t22,
        t21 * t21,
        2.0 * t21 * t22,
        t22 * t22 - 1.0,
    );
    let rhs = Vector3::new(-w[0][0], -w[0][1], -w[1][1]);
    let sol = m.lu().solve(&rhs).ok_or(Error::Singular {
        context: "2x2 Lyapunov block",
    })?;
    Ok([[sol[0], sol[1]], [sol[1], sol[2]]])
}

/// Solves `A X A' - X + W = 0` for Schur-stable `A`, exploiting structure.
///
/// Paths, in order: diagonal `A` and `W` solve coordinatewise; matrices with
/// four diagonal blocks (both `A` and `W`) decouple into one 2x2 equation
/// per coordinate pair; anything else up to dimension 64 goes through the
/// dense vectorized reference path.
///
/// Errors: `Unstable` when `spectral_radius(A) >= 1 - 1e-12`, `Singular` if
/// the vectorized system is degenerate, `Unsupported` for large unstructured
/// input.
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = validate_lyapunov_inputs(a, w)?;
    check_stability(a)?;

    let a_diag = a.iter().enumerate().all(|(k, &v)| k / n == k % n || v == 0.0);
    let w_diag = w.iter().enumerate().all(|(k, &v)| k / n == k % n || v == 0.0);
    if a_diag && w_diag {
        let mut x = DMatrix::zeros(n, n);
        for i in 0..n {
            let ai = a[(i, i)];
            x[(i, i)] = w[(i, i)] / (1.0 - ai * ai);
        }
        let residual = lyapunov_residual(a, w, &x);
        return Ok(LyapunovSolution { x, residual });
    }

    if has_diagonal_block_structure(a) && has_diagonal_block_structure(w) {
        let d = n / 2;
        let mut x = DMatrix::zeros(n, n);
        for i in 0..d {
            let y = solve_lyapunov_2x2(diagonal_block(a, d, i), diagonal_block(w, d, i))?;
            x[(i, i)] = y[0][0];
            x[(i, d + i)] = y[0][1];
            x[(d + i, i)] = y[0][1];
            x[(d + i, d + i)] = y[1][1];
        }
        let residual = lyapunov_residual(a, w, &x);
        return Ok(LyapunovSolution { x, residual });
    }

    solve_discrete_lyapunov_dense(a, w)
}

/// Dense reference solver: vectorizes the equation as
/// `(I - A (x) A) vec(X) = vec(W)` and solves by LU. Quadratic memory in the
/// squared dimension, so inputs are capped at 64x64.
pub fn solve_discrete_lyapunov_dense(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = validate_lyapunov_inputs(a, w)?;
    if n > DENSE_LYAPUNOV_MAX_DIM {
        return Err(Error::Unsupported {
            what: "solve_discrete_lyapunov_dense",
            reason: format!("dimension {n} exceeds cap {DENSE_LYAPUNOV_MAX_DIM}"),
        });
    }
    check_stability(a)?;

    let kron = a.kronecker(a);
    let mut lhs = DMatrix::identity(n * n, n * n);
    lhs -= &kron;
    let rhs = DVector::from_iterator(n * n, w.iter().copied());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::Singular {
        context: "vectorized Lyapunov system",
    })?;
    let mut x = DMatrix::from_iterator(n, n, sol.iter().copied());
    // The exact solution is symmetric; clean up roundoff asymmetry.
    x = (&x + x.transpose()) * 0.5;
    let residual = lyapunov_residual(a, w, &x);
    Ok(LyapunovSolution { x, residual })
}

/// Squared H2 norm of `(A, B, C_out)`: `trace(C_out X C_out')` with
/// `A X A' - X + B B' = 0`.
///
/// This is the steady-state mean of `|C_out xi_k|^2` when the system is
/// driven by unit white noise through `B`.
pub fn h2_norm_squared(a: &DMatrix<f64>, b: &DMatrix<f64>, c_out: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(a, "a")?;
    if b.nrows() != n {
        return Err(Error::InvalidArgument {
            arg: "b",
            reason: format!("B must have {n} rows, got {}", b.nrows()),
        });
    }
    if c_out.ncols() != n {
        return Err(Error::InvalidArgument {
            arg: "c_out",
            reason: format!("C_out must have {n} columns, got {}", c_out.ncols()),
        });
    }
    let w = b * b.transpose();
    let sol = solve_discrete_lyapunov(a, &w)?;
    Ok((c_out * &sol.x * c_out.transpose()).trace())
}

/// Squared H2 norm computed through the observability Gramian:
/// `trace(B' Y B)` with `A' Y A - Y + C_out' C_out = 0`.
///
/// Mathematically identical to [`h2_norm_squared`]; kept as an independent
/// route for cross-checking.
pub fn h2_norm_squared_observability(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c_out: &DMatrix<f64>,
) -> Result<f64> {
    let n = check_square(a, "a")?;
    if b.nrows() != n || c_out.ncols() != n {
        return Err(Error::InvalidArgument {
            arg: "b",
            reason: "dimension mismatch with A".into(),
        });
    }
    let at = a.transpose();
    let w = c_out.transpose() * c_out;
    let sol = solve_discrete_lyapunov(&at, &w)?;
    Ok((b.transpose() * &sol.x * b).trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec_ag(alpha: f64, beta: f64) -> AlgorithmSpec {
        AlgorithmSpec::ag(alpha, beta).unwrap()
    }

    #[test]
    fn spectrum_sorts_and_validates() {
        let s = QuadraticSpectrum::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.mu(), 1.0);
        assert_eq!(s.l(), 3.0);
        assert_eq!(s.kappa(), 3.0);
        assert!(QuadraticSpectrum::new(vec![]).is_err());
        assert!(QuadraticSpectrum::new(vec![1.0, -2.0]).is_err());
        assert!(QuadraticSpectrum::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn spec_constructors_validate() {
        assert!(AlgorithmSpec::gd(0.1).is_ok());
        assert!(AlgorithmSpec::gd(0.0).is_err());
        assert!(AlgorithmSpec::gd(-1.0).is_err());
        assert!(AlgorithmSpec::ag(0.1, 0.0).is_ok());
        assert!(AlgorithmSpec::ag(0.1, -0.1).is_err());
        assert_eq!(AlgorithmSpec::gd(0.1).unwrap().beta, 0.0);
    }

    #[test]
    fn gd_system_shape() {
        let sys = build_system(&AlgorithmSpec::gd(0.25).unwrap(), 3).unwrap();
        assert_eq!(sys.state_dim, 3);
        assert_eq!(sys.io_dim, 3);
        assert_eq!(sys.a, DMatrix::identity(3, 3));
        assert_eq!(sys.b, DMatrix::from_diagonal_element(3, 3, -0.25));
        assert_eq!(sys.c, DMatrix::identity(3, 3));
    }

    #[test]
    fn ag_system_shape() {
        let sys = build_system(&spec_ag(0.5, 0.3), 2).unwrap();
        assert_eq!(sys.state_dim, 4);
        assert_eq!(sys.io_dim, 2);
        // First block row: (1+beta) I, -beta I.
        assert_eq!(sys.a[(0, 0)], 1.3);
        assert_eq!(sys.a[(0, 2)], -0.3);
        assert_eq!(sys.a[(2, 0)], 1.0);
        assert_eq!(sys.a[(2, 2)], 0.0);
        assert_eq!(sys.b[(0, 0)], -0.5);
        assert_eq!(sys.b[(2, 0)], 0.0);
        assert_eq!(sys.c[(0, 0)], 1.3);
        assert_eq!(sys.c[(0, 2)], -0.3);
        assert_eq!(sys.t[(0, 0)], 1.0);
        assert_eq!(sys.t[(0, 2)], 0.0);
    }

    #[test]
    fn gd_closed_loop_is_i_minus_alpha_lambda() {
        let spec = AlgorithmSpec::gd(0.5).unwrap();
        let sys = build_system(&spec, 2).unwrap();
        let spectrum = QuadraticSpectrum::new(vec![0.4, 1.5]).unwrap();
        let acl = closed_loop_matrix(&sys, &spectrum).unwrap();
        assert_relative_eq!(acl[(0, 0)], 1.0 - 0.5 * 0.4, max_relative = 1e-15);
        assert_relative_eq!(acl[(1, 1)], 1.0 - 0.5 * 1.5, max_relative = 1e-15);
        assert_eq!(acl[(0, 1)], 0.0);
    }

    #[test]
    fn ag_closed_loop_blocks() {
        let (alpha, beta) = (0.5, 0.3);
        let sys = build_system(&spec_ag(alpha, beta), 2).unwrap();
        let spectrum = QuadraticSpectrum::new(vec![0.4, 1.5]).unwrap();
        let acl = closed_loop_matrix(&sys, &spectrum).unwrap();
        // Block (1,1): (1+beta)(1 - alpha lambda_i) on the diagonal.
        for (i, &lam) in spectrum.eigenvalues().iter().enumerate() {
            assert_relative_eq!(
                acl[(i, i)],
                (1.0 + beta) * (1.0 - alpha * lam),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                acl[(i, 2 + i)],
                -beta * (1.0 - alpha * lam),
                max_relative = 1e-14
            );
            assert_eq!(acl[(2 + i, i)], 1.0);
            assert_eq!(acl[(2 + i, 2 + i)], 0.0);
        }
        assert!(has_diagonal_block_structure(&acl));
    }

    #[test]
    fn spectral_radius_diagonal_and_symmetric() {
        let m = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.3, -0.8, 0.5]));
        assert_relative_eq!(spectral_radius(&m).unwrap(), 0.8, max_relative = 1e-14);

        // Symmetric with known eigenvalues {1, 3}: [[2,1],[1,2]].
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(spectral_radius(&s).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_radius_complex_pair_2x2() {
        // 0.9 * rotation(pi/3): complex eigenvalues of modulus 0.9.
        let (c, s) = (0.5_f64, 0.75_f64.sqrt());
        let m = DMatrix::from_row_slice(2, 2, &[0.9 * c, -0.9 * s, 0.9 * s, 0.9 * c]);
        assert_relative_eq!(spectral_radius(&m).unwrap(), 0.9, max_relative = 1e-12);
    }

    #[test]
    fn spectral_radius_charpoly_path_companion() {
        // Companion matrix of (x - 0.5)(x - 0.25)(x + 0.75):
        // x^3 - 0.0 x^2 ... compute coefficients directly.
        // (x-0.5)(x-0.25) = x^2 - 0.75x + 0.125
        // * (x+0.75) = x^3 - 0.75x^2 + 0.125x + 0.75x^2 - 0.5625x + 0.09375
        //            = x^3 + 0.0 x^2 - 0.4375 x + 0.09375
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0, 0.4375, -0.09375, //
                1.0, 0.0, 0.0, //
                0.0, 1.0, 0.0,
            ],
        );
        assert_relative_eq!(spectral_radius(&m).unwrap(), 0.75, max_relative = 1e-9);
    }

    #[test]
    fn spectral_radius_block_path_matches_dense() {
        let sys = build_system(&spec_ag(0.8, 0.4), 3).unwrap();
        let spectrum = QuadraticSpectrum::new(vec![0.2, 0.9, 1.1]).unwrap();
        let acl = closed_loop_matrix(&sys, &spectrum).unwrap();
        let rho_block = spectral_radius(&acl).unwrap();
        // Deny the block detector by adding an off-pattern zero perturbation:
        // recompute via the characteristic polynomial on the same matrix by
        // calling the dense path through a permuted copy that is not
        // block-structured.
        let n = acl.nrows();
        let mut perm = DMatrix::zeros(n, n);
        // Interleave coordinates: (x_i, xprev_i) adjacent pairs.
        let d = n / 2;
        for i in 0..d {
            perm[(2 * i, i)] = 1.0;
            perm[(2 * i + 1, d + i)] = 1.0;
        }
        let shuffled = &perm * &acl * perm.transpose();
        assert!(!has_diagonal_block_structure(&shuffled));
        let rho_dense = spectral_radius(&shuffled).unwrap();
        assert_relative_eq!(rho_block, rho_dense, max_relative = 1e-9);
    }

    #[test]
    fn spectral_radius_rejects_large_unstructured() {
        let n = 20;
        let m = DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { 0.5 } else { 0.01 * (i as f64 - j as f64) });
        match spectral_radius(&m) {
            Err(Error::Unsupported { .. }) => {}
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_matches_analytic_2x2() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, -0.5]);
        let eigs = symmetric_eigenvalues(&m).unwrap();
        // Analytic: (tr +- sqrt(tr^2 - 4 det)) / 2.
        let tr: f64 = 0.5;
        let det: f64 = -0.5 - 0.0625;
        let disc = (tr * tr - 4.0 * det).sqrt();
        assert_relative_eq!(eigs[0], 0.5 * (tr - disc), max_relative = 1e-12);
        assert_relative_eq!(eigs[1], 0.5 * (tr + disc), max_relative = 1e-12);
    }

    #[test]
    fn lyapunov_scalar_case() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let w = DMatrix::from_element(1, 1, 1.0);
        let sol = solve_discrete_lyapunov(&a, &w).unwrap();
        assert_relative_eq!(sol.x[(0, 0)], 4.0 / 3.0, max_relative = 1e-14);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let w = DMatrix::from_element(1, 1, 1.0);
        match solve_discrete_lyapunov(&a, &w) {
            Err(Error::Unstable { .. }) => {}
            other => panic!("expected Unstable, got {other:?}"),
        }
    }

    #[test]
    fn lyapunov_block_matches_dense_on_ag_loop() {
        let sys = build_system(&spec_ag(0.6, 0.35), 3).unwrap();
        let spectrum = QuadraticSpectrum::new(vec![0.3, 0.8, 1.2]).unwrap();
        let acl = closed_loop_matrix(&sys, &spectrum).unwrap();
        let w = &sys.b * sys.b.transpose();
        let block = solve_discrete_lyapunov(&acl, &w).unwrap();
        let dense = solve_discrete_lyapunov_dense(&acl, &w).unwrap();
        let diff = &block.x - &dense.x;
        let scale = max_abs(&dense.x).max(1.0);
        assert!(max_abs(&diff) <= 1e-10 * scale, "block vs dense: {}", max_abs(&diff));
        assert!(block.residual <= 1e-10 * (1.0 + max_abs(&w)));
        assert!(dense.residual <= 1e-10 * (1.0 + max_abs(&w)));
    }

    #[test]
    fn h2_single_coordinate_gd_closed_form() {
        // One-dimensional GD: A = 1 - alpha lambda, B = -alpha, C = 1.
        // X = alpha^2 / (1 - (1 - alpha lambda)^2) = alpha / (lambda (2 - alpha lambda)).
        let (alpha, lambda) = (0.5, 1.0);
        let a = DMatrix::from_element(1, 1, 1.0 - alpha * lambda);
        let b = DMatrix::from_element(1, 1, -alpha);
        let c = DMatrix::from_element(1, 1, 1.0);
        let h2 = h2_norm_squared(&a, &b, &c).unwrap();
        assert_relative_eq!(h2, alpha / (lambda * (2.0 - alpha * lambda)), max_relative = 1e-13);
        assert_relative_eq!(h2, 1.0 / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn h2_controllability_equals_observability() {
        let sys = build_system(&spec_ag(0.7, 0.25), 2).unwrap();
        let spectrum = QuadraticSpectrum::new(vec![0.5, 1.3]).unwrap();
        let acl = closed_loop_matrix(&sys, &spectrum).unwrap();
        // Output weight sqrt(lambda/2) T: squared output is f - f*.
        let mut c_out = DMatrix::zeros(2, 4);
        for (i, &lam) in spectrum.eigenvalues().iter().enumerate() {
            c_out[(i, i)] = (lam / 2.0).sqrt();
        }
        let h2c = h2_norm_squared(&acl, &sys.b, &c_out).unwrap();
        let h2o = h2_norm_squared_observability(&acl, &sys.b, &c_out).unwrap();
        assert_relative_eq!(h2c, h2o, max_relative = 1e-9);
        assert!(h2c > 0.0);
    }

    #[test]
    fn dense_lyapunov_rejects_oversized() {
        let n = 70;
        let a = DMatrix::from_diagonal_element(n, n, 0.5);
        let w = DMatrix::identity(n, n);
        match solve_discrete_lyapunov_dense(&a, &w) {
            Err(Error::Unsupported { .. }) => {}
            other => panic!("expected Unsupported, got {other:?}"),
        }
    }

    #[test]
    fn structured_lyapunov_handles_large_diagonal() {
        // Large diagonal systems bypass the dense cap entirely.
        let n = 200;
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.99 - 1e-3 * i as f64 } else { 0.0 });
        let w = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 });
        let sol = solve_discrete_lyapunov(&a, &w).unwrap();
        let a0: f64 = 0.99;
        assert_relative_eq!(sol.x[(0, 0)], 2.0 / (1.0 - a0 * a0), max_relative = 1e-12);
        assert!(sol.residual <= 1e-10 * 3.0);
    }
}
