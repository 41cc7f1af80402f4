//! Spatio-temporal transmit covariance design for multi-antenna radar
//! illuminating multilayer targets.
//!
//! The crate models an L-layer target as a finite impulse response seen by a
//! uniform linear array, builds the space-time quadratic form that maps a
//! transmit covariance to backscattered signal power, and designs that
//! covariance under power and clutter constraints:
//!
//! * [`multilayer`] — impedances, reflection coefficients, per-layer
//!   attenuation and the composite reflection coefficients of the stack.
//! * [`spacetime`] — steering vectors, the block steering operator, the
//!   banded Toeplitz response matrix and the backscatter quadratic form.
//! * [`sdp`] — a dense primal-dual interior-point solver for the Hermitian
//!   trace-constrained programs the designs reduce to.
//! * [`designs`] — the analytic single-target design, the robust max-min
//!   design over angle uncertainty grids, the weighted-sum Pareto sweep and
//!   precoder extraction.
//! * [`simulator`] — a seeded time-domain Monte Carlo estimator that checks
//!   designed covariances against the trace prediction.
//! * [`scenario`] — the TOML scenario format shared by the CLI and tests.
//!
//! The `parallel` feature (on by default) runs Pareto sweeps and Monte Carlo
//! batches on a rayon pool; disabling it falls back to sequential execution
//! with bit-identical results.

pub mod designs;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod multilayer;
pub mod scenario;
pub mod sdp;
pub mod simulator;
pub mod spacetime;

pub use error::{Error, Result};
