//! Shared fixtures for the benchmarks.

use squeezed_bayes::{SessionConfig, SqueezedStateModel, StateFamily};

/// Noise-free adaptive phase session at `n` particles.
pub fn phase_session(n: usize, xi: f64, steps: usize) -> SessionConfig {
    let state = SqueezedStateModel::from_xi(n, xi, 1.0, StateFamily::Ansatz).expect("valid state");
    SessionConfig::new(state, 0.3, steps, 1)
}
