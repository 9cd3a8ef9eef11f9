//! Analysis and tuning of first-order optimization methods driven by noisy
//! gradients.
//!
//! The library studies gradient descent (GD) and Nesterov's accelerated
//! gradient method (AG),
//!
//! ```text
//! GD:  x_{k+1} = x_k - alpha * (grad f(x_k) + w_k)
//! AG:  y_k     = (1 + beta) x_k - beta x_{k-1}
//!      x_{k+1} = y_k - alpha * (grad f(y_k) + w_k)
//! ```
//!
//! where `w_k` is additive white noise on the gradient. Both methods are
//! treated as linear systems in feedback with the gradient, which gives two
//! figures of merit for a parameter choice `(alpha, beta)`:
//!
//! * the worst-case linear convergence rate `rho`, and
//! * a robustness index `J`, the steady-state amplification of white noise
//!   into suboptimality `f(x_k) - f*` (an H2 norm squared). `J'` is the same
//!   index measured on squared iterate error instead.
//!
//! Module layout:
//!
//! * [`linsys`]: state-space form of GD/AG, closed loops on quadratics,
//!   spectral radii, discrete Lyapunov equations and H2 norms.
//! * [`quad`]: closed-form rate and robustness formulas on quadratic
//!   objectives, plus the AG stability region.
//! * [`tradeoff`]: scalarized and constrained tuning of the rate/robustness
//!   trade-off, Pareto curves, and the polynomial machinery they need.
//! * [`cert`]: matrix-inequality certificates giving rate and robustness
//!   bounds over the whole class of smooth strongly convex objectives,
//!   including a small interior-point SDP solver.
//! * [`sim`]: Monte-Carlo validation of the analytical quantities against
//!   simulated noisy runs on quadratic and logistic-regression objectives.

pub mod cert;
pub mod error;
pub mod linsys;
pub mod quad;
pub mod sim;
pub mod tradeoff;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
