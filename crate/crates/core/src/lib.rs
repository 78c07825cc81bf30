//! Prescribed-time control laboratory.
//!
//! Feedback laws whose gains grow as a deadline approaches can drive a
//! system to zero at a terminal time chosen by the user, independent of
//! initial conditions. This crate collects the building blocks needed to
//! simulate and numerically verify that behavior:
//!
//! * [`scaling`] — the state-scaling gain `mu(t) = T/(T-t)` and the
//!   time-scaling rate `a'(t) = 1/(T-t)`, with saturation policies.
//! * [`settling`] — closed-form settling-time bounds for the standard
//!   finite-/fixed-/predefined-time Lyapunov differential inequalities plus
//!   brute-force inequality simulators that act as oracles for them.
//! * [`scalar`] — robust, adaptive, and Nussbaum-gain deadline controllers
//!   for the scalar plant `dx/dt = b(x,t) u + f(x,t)`.
//! * [`mimo`] — deadline regulation for vector plants with unknown square
//!   or factored non-square gain matrices.
//! * [`mas`] — graph/Laplacian machinery, consensus protocols, and
//!   leader-rooted containment for single-integrator agent networks.
//! * [`sim`] — a fixed-step RK4 engine with terminal-time guards, settling
//!   detection, and CSV trajectory output.
//! * [`compare`] — first-order and double-integrator benchmark controllers
//!   contrasting finite-, fixed-, predefined-, and prescribed-time designs.

pub mod compare;
pub mod error;
pub mod linalg;
pub mod mas;
pub mod mimo;
pub mod rng;
pub mod scalar;
pub mod scaling;
pub mod settling;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
pub use rng::Xorshift;
pub use scaling::TimeHorizon;
pub use settling::{DecayLaw, LyapunovSpec};
pub use sim::{Grid, SettlingReport, Trajectory};

/// Sign function with `sgn(0) = 0`, used everywhere a signum appears.
pub fn sgn(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum()
    }
}

/// Signed power `v^[a] = |v|^a * sgn(v)`, the odd extension of the real
/// power used by finite- and fixed-time feedback laws.
pub fn signed_pow(v: f64, a: f64) -> f64 {
    sgn(v) * v.abs().powf(a)
}
