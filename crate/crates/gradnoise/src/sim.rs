//! Seeded Monte-Carlo simulation of the noisy methods and empirical estimates
//! of the robustness indices.
//!
//! The simulated recursions are exactly the ones the analytical modules
//! study:
//!
//! ```text
//! GD:  x_{k+1} = x_k - alpha * (grad f(x_k) + w_k)
//! AG:  y_k     = (1 + beta) x_k - beta x_{k-1},   x_{-1} = x_0
//!      x_{k+1} = y_k - alpha * (grad f(y_k) + w_k)
//! ```
//!
//! with `w_k ~ N(0, sigma^2 I)` drawn independently of the trajectory so far.
//! Estimators average `(f(x_k) - f*)/sigma^2` (for `J`) or
//! `||x_k - x*||^2/sigma^2` (for `J'`) over `k in [burn_in, k_max]` and over
//! replicas; the limsup in the definitions is not estimable from finite runs,
//! so the stationary window average stands in for it and the standard error
//! across replica means quantifies the Monte-Carlo error.
//!
//! Randomness is counter-based: one ChaCha12 stream per replica (stream id =
//! replica index, key derived from the user seed), and the draw for noise
//! coordinate `i` at step `k` always sits at word position `4 * (k*d + i)` of
//! that stream. Trajectories are therefore bitwise reproducible no matter how
//! many threads the replica loop uses.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linsys::{self, AlgorithmSpec, Method};
use crate::quad;
use crate::{Error, Result};

/// Iteration cap for the noiseless solve that locates a non-quadratic
/// objective's optimum.
const OPTIMUM_SOLVE_CAP: usize = 200_000;

/// Gradient-norm tolerance for that solve.
const OPTIMUM_GRAD_TOL: f64 = 1e-10;

/// Step cap for a single impulse-response run.
const IMPULSE_STEP_CAP: usize = 1_000_000;

/// Truncate the impulse sum once the geometric tail estimate drops below this
/// fraction of the accumulated energy.
const IMPULSE_TAIL_REL: f64 = 1e-12;

/// Safety factor on the geometric tail estimate; covers transient growth of
/// non-normal closed loops, which the spectral radius alone does not see.
const IMPULSE_TAIL_MARGIN: f64 = 1e4;

/// The tail test must hold this many consecutive steps before truncation, so
/// a momentum iterate passing near the optimum cannot stop the sum early.
const IMPULSE_TAIL_STREAK: usize = 32;

/// 2^-53, the spacing used to map 53-bit integers to doubles in (0, 1).
const TWO_NEG53: f64 = 1.0 / (1u64 << 53) as f64;

// ---------------------------------------------------------------------------
// Counter-based Gaussian draws
// ---------------------------------------------------------------------------

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

fn replica_rng(seed: u64, replica: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(rng_key(seed));
    rng.set_stream(replica);
    rng
}

/// Stream id reserved for synthetic-objective generation, so objective data
/// never shares draws with replica 0's noise under the same seed.
const SYNTH_STREAM: u64 = u64::MAX;

fn synth_rng(seed: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(rng_key(seed));
    rng.set_stream(SYNTH_STREAM);
    rng
}

/// One standard normal variate at a fixed counter position.
///
/// Each draw consumes the four 32-bit words starting at `4 * draw`, via one
/// Box-Muller evaluation; draws at distinct indices never overlap, so the
/// value depends only on `(key, stream, draw)` and not on call order.
fn standard_normal(rng: &mut ChaCha12Rng, draw: u128) -> f64 {
    rng.set_word_pos(4 * draw);
    let a = rng.next_u64();
    let b = rng.next_u64();
    // u1 in (0, 1) so the log is finite; u2 in [0, 1).
    let u1 = ((a >> 11) as f64 + 0.5) * TWO_NEG53;
    let u2 = (b >> 11) as f64 * TWO_NEG53;
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// Noise model and objectives
// ---------------------------------------------------------------------------

/// Supported noise distributions. Only the mean and covariance enter the
/// analytical results; the simulator fixes the Gaussian special case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseDistribution {
    GaussianIsotropic,
}

/// Additive gradient noise with covariance `sigma^2 I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub distribution: NoiseDistribution,
}

impl NoiseModel {
    /// Isotropic Gaussian noise with standard deviation `sigma >= 0`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidArgument {
                arg: "sigma",
                reason: format!("must be finite and nonnegative, got {sigma}"),
            });
        }
        Ok(Self {
            sigma,
            distribution: NoiseDistribution::GaussianIsotropic,
        })
    }
}

/// The two objective families the experiments use.
#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    /// `f(x) = 1/2 (x - shift)' diag(eigenvalues) (x - shift)`, i.e. a
    /// quadratic expressed in its Hessian eigenbasis with optimum `shift`.
    Quadratic {
        eigenvalues: Vec<f64>,
        shift: DVector<f64>,
    },
    /// `f(x) = sum_i ln(1 + exp(-labels_i * data_i' x)) + delta ||x||^2`.
    LogisticL2 {
        data: DMatrix<f64>,
        labels: DVector<f64>,
        delta: f64,
    },
}

/// A differentiable test objective with cached optimum.
///
/// `mu` and `l` are class parameters placing the objective in `S(mu, L)`:
/// exact for quadratics (extreme Hessian eigenvalues), conservative bounds
/// for logistic regression (`mu = 2 delta` from the regularizer alone, `L =
/// 2 delta + sigma_max(data)^2 / 4` from the logistic curvature cap).
#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    mu: f64,
    l: f64,
    x_star: DVector<f64>,
    f_star: f64,
}

fn logistic_value(data: &DMatrix<f64>, labels: &DVector<f64>, delta: f64, x: &DVector<f64>) -> f64 {
    let scores = data * x;
    let mut total = delta * x.norm_squared();
    for i in 0..labels.len() {
        let t = labels[i] * scores[i];
        // ln(1 + exp(-t)) without overflow on either tail.
        total += if t >= 0.0 {
            (-t).exp().ln_1p()
        } else {
            -t + t.exp().ln_1p()
        };
    }
    total
}

fn logistic_gradient(
    data: &DMatrix<f64>,
    labels: &DVector<f64>,
    delta: f64,
    x: &DVector<f64>,
) -> DVector<f64> {
    let scores = data * x;
    let mut coef = DVector::zeros(labels.len());
    for i in 0..labels.len() {
        let t = labels[i] * scores[i];
        // sigmoid(-t) = 1 / (1 + e^t); e^t overflowing to inf gives 0, which
        // is the correct limit.
        let s = if t >= 0.0 {
            let e = (-t).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + t.exp())
        };
        coef[i] = -labels[i] * s;
    }
    data.tr_mul(&coef) + x * (2.0 * delta)
}

impl Objective {
    /// Quadratic objective in its eigenbasis; `eigenvalues[i] >= 0` is the
    /// curvature of coordinate `i` and `shift` is the minimizer.
    ///
    /// A zero eigenvalue is accepted (cyclic-Laplacian objectives without
    /// regularization have one); such objectives are only marginally stable
    /// and the runners warn accordingly.
    pub fn quadratic(eigenvalues: Vec<f64>, shift: DVector<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument {
                arg: "eigenvalues",
                reason: "must be non-empty".into(),
            });
        }
        if eigenvalues.len() != shift.len() {
            return Err(Error::InvalidArgument {
                arg: "shift",
                reason: format!(
                    "dimension {} does not match {} eigenvalues",
                    shift.len(),
                    eigenvalues.len()
                ),
            });
        }
        if eigenvalues.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument {
                arg: "eigenvalues",
                reason: "must all be finite and nonnegative".into(),
            });
        }
        if shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument {
                arg: "shift",
                reason: "must be finite".into(),
            });
        }
        let mu = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let l = eigenvalues.iter().cloned().fold(0.0, f64::max);
        if l <= 0.0 {
            return Err(Error::InvalidArgument {
                arg: "eigenvalues",
                reason: "largest eigenvalue must be positive".into(),
            });
        }
        Ok(Self {
            kind: ObjectiveKind::Quadratic {
                eigenvalues,
                shift: shift.clone(),
            },
            mu,
            l,
            x_star: shift,
            f_star: 0.0,
        })
    }

    /// Regularized logistic regression `sum_i ln(1 + exp(-y_i a_i' x)) +
    /// delta ||x||^2` with labels in {-1, +1} and `delta > 0`.
    ///
    /// The optimum is located once at construction by running the noiseless
    /// accelerated method at the class tuning until the gradient norm drops
    /// below 1e-10, and `(x*, f*)` are cached on the objective.
    pub fn logistic_l2(data: DMatrix<f64>, labels: DVector<f64>, delta: f64) -> Result<Self> {
        let (rows, cols) = data.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument {
                arg: "data",
                reason: format!("matrix must be non-empty, got {rows}x{cols}"),
            });
        }
        if labels.len() != rows {
            return Err(Error::InvalidArgument {
                arg: "labels",
                reason: format!("expected {rows} labels, got {}", labels.len()),
            });
        }
        if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
            return Err(Error::InvalidArgument {
                arg: "labels",
                reason: "entries must be +1 or -1".into(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument {
                arg: "data",
                reason: "entries must be finite".into(),
            });
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidArgument {
                arg: "delta",
                reason: format!("must be finite and positive, got {delta}"),
            });
        }

        // Curvature cap of one logistic term is 1/4, so the Hessian is
        // bounded by data' data / 4 + 2 delta I.
        let mut gram = data.tr_mul(&data);
        let gram_t = gram.transpose();
        gram = (gram + gram_t) * 0.5;
        let gram_eigs = linsys::symmetric_eigenvalues(&gram)?;
        let top = gram_eigs.iter().cloned().fold(0.0, f64::max);
        let mu = 2.0 * delta;
        let l = 2.0 * delta + top / 4.0;

        // Noiseless AG at the certified class tuning for the optimum.
        let kappa = l / mu;
        let alpha = 1.0 / l;
        let rk = kappa.sqrt();
        let beta = (rk - 1.0) / (rk + 1.0);
        let mut x = DVector::zeros(cols);
        let mut x_prev = x.clone();
        let mut x_star = None;
        for _ in 0..OPTIMUM_SOLVE_CAP {
            let y = &x * (1.0 + beta) - &x_prev * beta;
            let g = logistic_gradient(&data, &labels, delta, &y);
            if g.norm() <= OPTIMUM_GRAD_TOL {
                x_star = Some(y);
                break;
            }
            let x_next = y - g * alpha;
            x_prev = x;
            x = x_next;
        }
        let x_star = x_star.ok_or(Error::NoConvergence {
            what: "logistic optimum solve",
            iterations: OPTIMUM_SOLVE_CAP,
        })?;
        let f_star = logistic_value(&data, &labels, delta, &x_star);

        Ok(Self {
            kind: ObjectiveKind::LogisticL2 {
                data,
                labels,
                delta,
            },
            mu,
            l,
            x_star,
            f_star,
        })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    /// Hessian eigenvalues when the objective is quadratic.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        match &self.kind {
            ObjectiveKind::Quadratic { eigenvalues, .. } => Some(eigenvalues),
            ObjectiveKind::LogisticL2 { .. } => None,
        }
    }

    pub fn d(&self) -> usize {
        self.x_star.len()
    }

    /// Strong-convexity parameter of the class the objective is placed in.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Smoothness parameter of that class.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.kind {
            ObjectiveKind::Quadratic { eigenvalues, shift } => {
                let mut total = 0.0;
                for i in 0..eigenvalues.len() {
                    let e = x[i] - shift[i];
                    total += 0.5 * eigenvalues[i] * e * e;
                }
                total
            }
            ObjectiveKind::LogisticL2 {
                data,
                labels,
                delta,
            } => logistic_value(data, labels, *delta, x),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            ObjectiveKind::Quadratic { eigenvalues, shift } => {
                DVector::from_iterator(
                    eigenvalues.len(),
                    eigenvalues.iter().zip(x.iter().zip(shift.iter())).map(
                        |(lam, (xi, si))| lam * (xi - si),
                    ),
                )
            }
            ObjectiveKind::LogisticL2 {
                data,
                labels,
                delta,
            } => logistic_gradient(data, labels, *delta, x),
        }
    }
}

/// Quadratic objective whose Hessian is the cyclic-graph Laplacian plus
/// `2 delta I`: eigenvalues `2 - 2 cos(2 pi j / d) + 2 delta`, `j = 0..d-1`,
/// with a seeded random optimum.
pub fn make_laplacian_objective(d: usize, delta: f64, seed: u64) -> Result<Objective> {
    if d < 2 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: format!("cyclic Laplacian needs d >= 2, got {d}"),
        });
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "delta",
            reason: format!("must be finite and nonnegative, got {delta}"),
        });
    }
    let eigenvalues: Vec<f64> = (0..d)
        .map(|j| 2.0 - 2.0 * (TAU * j as f64 / d as f64).cos() + 2.0 * delta)
        .collect();
    let mut rng = synth_rng(seed);
    let shift = DVector::from_iterator(d, (0..d).map(|i| standard_normal(&mut rng, i as u128)));
    Objective::quadratic(eigenvalues, shift)
}

/// Synthetic logistic-regression instance with standard normal data, labels
/// from a planted linear model, and the ridge weight chosen so the class
/// condition number `L/mu` equals `kappa_target` exactly.
pub fn synth_logistic(rows: usize, cols: usize, kappa_target: f64, seed: u64) -> Result<Objective> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument {
            arg: "rows",
            reason: format!("need rows >= 1 and cols >= 1, got {rows}x{cols}"),
        });
    }
    if !kappa_target.is_finite() || kappa_target <= 1.0 {
        return Err(Error::InvalidArgument {
            arg: "kappa_target",
            reason: format!("must be finite and > 1, got {kappa_target}"),
        });
    }
    let mut rng = synth_rng(seed);
    let data = DMatrix::from_fn(rows, cols, |r, c| {
        standard_normal(&mut rng, (r * cols + c) as u128)
    });
    let planted = DVector::from_iterator(
        cols,
        (0..cols).map(|j| standard_normal(&mut rng, (rows * cols + j) as u128)),
    );
    let scores = &data * &planted;
    let labels = scores.map(|s| if s >= 0.0 { 1.0 } else { -1.0 });

    // With s2 = sigma_max(data)^2 / 4 the class parameters are mu = 2 delta
    // and L = 2 delta + s2, so kappa = 1 + s2 / (2 delta).
    let mut gram = data.tr_mul(&data);
    let gram_t = gram.transpose();
    gram = (gram + gram_t) * 0.5;
    let gram_eigs = linsys::symmetric_eigenvalues(&gram)?;
    let s2 = gram_eigs.iter().cloned().fold(0.0, f64::max) / 4.0;
    if s2 <= 0.0 {
        return Err(Error::NumericalFailure {
            context: "synthetic logistic data has zero scale",
        });
    }
    let delta = s2 / (2.0 * (kappa_target - 1.0));
    Objective::logistic_l2(data, labels, delta)
}

// ---------------------------------------------------------------------------
// Noisy runs
// ---------------------------------------------------------------------------

/// One recorded step of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// `f(x_k) - f*`.
    pub subopt: f64,
    /// `||x_k - x*||^2`.
    pub dist2: f64,
}

/// Monte-Carlo estimator settings.
///
/// `burn_in = None` derives the burn-in from the quadratic rate when one is
/// available (`rho^{2k} <= 1e-6`, so the transient mean is negligible against
/// the stationary value) and falls back to `k_max / 2` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub replicas: usize,
    pub k_max: usize,
    pub burn_in: Option<usize>,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(replicas: usize, k_max: usize, burn_in: Option<usize>, seed: u64) -> Result<Self> {
        if replicas == 0 {
            return Err(Error::InvalidArgument {
                arg: "replicas",
                reason: "must be at least 1".into(),
            });
        }
        if k_max == 0 {
            return Err(Error::InvalidArgument {
                arg: "k_max",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(b) = burn_in {
            if b >= k_max {
                return Err(Error::InvalidArgument {
                    arg: "burn_in",
                    reason: format!("must be < k_max = {k_max}, got {b}"),
                });
            }
        }
        Ok(Self {
            replicas,
            k_max,
            burn_in,
            seed,
        })
    }
}

/// Exact worst-case rate when the objective is quadratic; `None` otherwise.
fn quadratic_rate(spec: &AlgorithmSpec, objective: &Objective) -> Option<f64> {
    objective.eigenvalues().map(|_| match spec.method {
        Method::Gd => quad::gd_rate(spec.alpha, objective.mu(), objective.l()),
        Method::Ag => quad::ag_rate(spec.alpha, spec.beta, objective.mu(), objective.l()),
    })
}

fn default_burn_in(rate: Option<f64>, k_max: usize) -> usize {
    let fallback = k_max / 2;
    let b = match rate {
        Some(rho) if (0.0..1.0).contains(&rho) => {
            // Smallest k with rho^{2k} <= 1e-6; at least one step so the
            // deterministic start at x* never enters the average.
            let needed = if rho == 0.0 {
                1.0
            } else {
                (1e-6f64).ln() / (2.0 * rho.ln())
            };
            let needed = needed.ceil().max(1.0) as usize;
            if needed >= k_max {
                fallback
            } else {
                needed
            }
        }
        _ => fallback,
    };
    b.min(k_max.saturating_sub(1))
}

fn observe(objective: &Objective, x: &DVector<f64>, k: usize) -> Result<TrajectoryPoint> {
    let subopt = objective.value(x) - objective.f_star();
    let dist2 = (x - objective.x_star()).norm_squared();
    if !subopt.is_finite() || !dist2.is_finite() {
        return Err(Error::NonFinite { index: k });
    }
    Ok(TrajectoryPoint { subopt, dist2 })
}

/// One noisy run on the given replica's noise stream.
///
/// Returns `k_max + 1` points covering `k = 0..=k_max`. With `sigma = 0` the
/// noise draws are skipped entirely, so the run is the deterministic method
/// bit for bit. Divergence surfaces as [`Error::NonFinite`] with the first
/// offending step index.
pub fn run_noisy_stream(
    spec: &AlgorithmSpec,
    objective: &Objective,
    x0: &DVector<f64>,
    noise: &NoiseModel,
    k_max: usize,
    seed: u64,
    replica: u64,
) -> Result<Vec<TrajectoryPoint>> {
    let d = objective.d();
    if x0.len() != d {
        return Err(Error::InvalidArgument {
            arg: "x0",
            reason: format!("dimension {} does not match objective dimension {d}", x0.len()),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            arg: "x0",
            reason: "must be finite".into(),
        });
    }
    if !noise.sigma.is_finite() || noise.sigma < 0.0 {
        return Err(Error::InvalidArgument {
            arg: "sigma",
            reason: format!("must be finite and nonnegative, got {}", noise.sigma),
        });
    }

    let sigma = noise.sigma;
    let mut rng = replica_rng(seed, replica);
    let mut points = Vec::with_capacity(k_max + 1);
    let mut x = x0.clone();
    let mut x_prev = x0.clone();
    points.push(observe(objective, &x, 0)?);
    for k in 0..k_max {
        let y = match spec.method {
            Method::Gd => x.clone(),
            Method::Ag => &x * (1.0 + spec.beta) - &x_prev * spec.beta,
        };
        let mut u = objective.gradient(&y);
        if sigma > 0.0 {
            let base = (k as u128) * (d as u128);
            for i in 0..d {
                u[i] += sigma * standard_normal(&mut rng, base + i as u128);
            }
        }
        let x_next = y - u * spec.alpha;
        x_prev = x;
        x = x_next;
        points.push(observe(objective, &x, k + 1)?);
    }
    Ok(points)
}

/// Single noisy run (replica stream 0). Warns on stderr when the parameters
/// are outside the quadratic stability region instead of refusing to run;
/// divergence then shows up as [`Error::NonFinite`].
pub fn run_noisy(
    spec: &AlgorithmSpec,
    objective: &Objective,
    x0: &DVector<f64>,
    noise: &NoiseModel,
    k_max: usize,
    seed: u64,
) -> Result<Vec<TrajectoryPoint>> {
    if let Some(rho) = quadratic_rate(spec, objective) {
        if rho >= 1.0 {
            eprintln!(
                "warning: (alpha, beta) = ({}, {}) is outside the stability region \
                 (rate {rho:.6}); the run may diverge",
                spec.alpha, spec.beta
            );
        }
    }
    run_noisy_stream(spec, objective, x0, noise, k_max, seed, 0)
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Moment {
    Suboptimality,
    IterateError,
}

fn estimate_moment(
    spec: &AlgorithmSpec,
    objective: &Objective,
    noise: &NoiseModel,
    config: &EstimatorConfig,
    moment: Moment,
) -> Result<(f64, f64)> {
    if !noise.sigma.is_finite() || noise.sigma <= 0.0 {
        return Err(Error::InvalidArgument {
            arg: "sigma",
            reason: format!(
                "noise-normalized estimation requires sigma > 0, got {}",
                noise.sigma
            ),
        });
    }
    // Re-validate in case the config was built as a literal.
    let config = EstimatorConfig::new(config.replicas, config.k_max, config.burn_in, config.seed)?;
    let burn = match config.burn_in {
        Some(b) => b,
        None => default_burn_in(quadratic_rate(spec, objective), config.k_max),
    };

    // Replicas start at the optimum, so the transient is purely the noise
    // reaching its stationary distribution.
    let x0 = objective.x_star().clone();
    let scale = 1.0 / (noise.sigma * noise.sigma);
    let per_replica: Vec<Result<f64>> = (0..config.replicas)
        .into_par_iter()
        .map(|r| {
            let traj =
                run_noisy_stream(spec, objective, &x0, noise, config.k_max, config.seed, r as u64)?;
            let window = &traj[burn..];
            let sum: f64 = window
                .iter()
                .map(|p| match moment {
                    Moment::Suboptimality => p.subopt,
                    Moment::IterateError => p.dist2,
                })
                .sum();
            Ok(sum * scale / window.len() as f64)
        })
        .collect();

    // Surface the lowest-index failure so errors are deterministic too.
    let mut means = Vec::with_capacity(config.replicas);
    for m in per_replica {
        means.push(m?);
    }
    let n = means.len() as f64;
    let jhat = means.iter().sum::<f64>() / n;
    let stderr = if means.len() >= 2 {
        let var = means.iter().map(|m| (m - jhat) * (m - jhat)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((jhat, stderr))
}

/// Monte-Carlo estimate of `J`: mean of `(f(x_k) - f*)/sigma^2` over
/// `k in [burn_in, k_max]` and over replicas, with the standard error of the
/// replica means.
pub fn estimate_j(
    spec: &AlgorithmSpec,
    objective: &Objective,
    noise: &NoiseModel,
    config: &EstimatorConfig,
) -> Result<(f64, f64)> {
    estimate_moment(spec, objective, noise, config, Moment::Suboptimality)
}

/// Monte-Carlo estimate of `J'`: as [`estimate_j`] on `||x_k - x*||^2 /
/// sigma^2`.
pub fn estimate_jprime(
    spec: &AlgorithmSpec,
    objective: &Objective,
    noise: &NoiseModel,
    config: &EstimatorConfig,
) -> Result<(f64, f64)> {
    estimate_moment(spec, objective, noise, config, Moment::IterateError)
}

// ---------------------------------------------------------------------------
// Impulse-response energy
// ---------------------------------------------------------------------------

/// A convergence rate the truncation argument may rely on.
///
/// Quadratics get their exact worst-case rate. Non-quadratic objectives get
/// the class rate: any `alpha` in `(0, 2/L)` for GD, and for AG only the
/// momentum matched to `beta = (1 - sqrt(alpha mu))/(1 + sqrt(alpha mu))`
/// with `alpha <= 1/L`, where the certified rate is `sqrt(1 - sqrt(alpha
/// mu))`; off that curve no convergence certificate exists here.
fn certified_rate(spec: &AlgorithmSpec, objective: &Objective) -> Result<f64> {
    if objective.eigenvalues().is_some() {
        let rho = quadratic_rate(spec, objective).expect("quadratic objective has a rate");
        if rho >= 1.0 {
            return Err(Error::NotStable {
                alpha: spec.alpha,
                beta: spec.beta,
            });
        }
        return Ok(rho);
    }
    let (mu, l) = (objective.mu(), objective.l());
    match spec.method {
        Method::Gd => {
            if spec.alpha >= 2.0 / l {
                return Err(Error::OutOfRange {
                    param: "alpha",
                    value: spec.alpha,
                    range: "(0, 2/L)",
                });
            }
            Ok(quad::gd_rate(spec.alpha, mu, l))
        }
        Method::Ag => {
            if spec.alpha > 1.0 / l {
                return Err(Error::OutOfRange {
                    param: "alpha",
                    value: spec.alpha,
                    range: "(0, 1/L]",
                });
            }
            let root = (spec.alpha * mu).sqrt();
            let beta_curve = (1.0 - root) / (1.0 + root);
            if (spec.beta - beta_curve).abs() > 1e-12 * (1.0 + beta_curve) {
                return Err(Error::Unsupported {
                    what: "impulse energy for accelerated parameters",
                    reason: format!(
                        "no convergence certificate for beta = {} off the curve \
                         beta(alpha) = {beta_curve} on non-quadratic objectives",
                        spec.beta
                    ),
                });
            }
            Ok((1.0 - root).sqrt())
        }
    }
}

fn impulse_energy(
    spec: &AlgorithmSpec,
    objective: &Objective,
    coord: usize,
    rho: f64,
) -> Result<f64> {
    let x_star = objective.x_star();
    // State right after the impulse w_0 = e_coord: x_1 = x* - alpha e_coord
    // while the momentum history stays at the equilibrium.
    let mut x_prev = x_star.clone();
    let mut x = x_star.clone();
    x[coord] -= spec.alpha;

    let tail_gain = IMPULSE_TAIL_MARGIN / (1.0 - rho * rho);
    let mut accum = (&x - x_star).norm_squared();
    let mut streak = 0usize;
    for k in 2..=IMPULSE_STEP_CAP {
        let y = match spec.method {
            Method::Gd => x.clone(),
            Method::Ag => &x * (1.0 + spec.beta) - &x_prev * spec.beta,
        };
        let x_next = &y - objective.gradient(&y) * spec.alpha;
        x_prev = std::mem::replace(&mut x, x_next);
        let dist2 = (&x - x_star).norm_squared();
        if !dist2.is_finite() {
            return Err(Error::NonFinite { index: k });
        }
        accum += dist2;
        if dist2 * tail_gain <= IMPULSE_TAIL_REL * accum {
            streak += 1;
            if streak >= IMPULSE_TAIL_STREAK {
                return Ok(accum);
            }
        } else {
            streak = 0;
        }
    }
    Err(Error::NoConvergence {
        what: "impulse-response energy truncation",
        iterations: IMPULSE_STEP_CAP,
    })
}

/// Perturbation-stability measure `J*`: total squared deviation energy of the
/// noiseless method after a unit gradient impulse at the optimum, summed over
/// one impulse per coordinate.
///
/// Each run is truncated once a geometric tail estimate (using the certified
/// rate, with a safety factor for transient growth) stays below 1e-12 of the
/// accumulated energy for 32 consecutive steps.
pub fn impulse_j_star(spec: &AlgorithmSpec, objective: &Objective) -> Result<f64> {
    let rho = certified_rate(spec, objective)?;
    let energies: Vec<Result<f64>> = (0..objective.d())
        .into_par_iter()
        .map(|i| impulse_energy(spec, objective, i, rho))
        .collect();
    let mut total = 0.0;
    for e in energies {
        total += e?;
    }
    Ok(total)
}
