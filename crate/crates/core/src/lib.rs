//! Adaptive Bayesian phase estimation with spin-squeezed probes.
//!
//! The crate simulates a sequence of Ramsey-type measurements whose auxiliary
//! phase tracks the running estimate, for phase, gravity and clock-frequency
//! sensing, along with the colored-noise generators, Allan-deviation tools and
//! the fringe-fitting baseline used to compare against.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod clock;
pub mod collective_spin;
pub mod error;
pub mod fringe;
pub mod gravimetry;
pub mod noise;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod rng;
pub mod sequence;
pub mod session;
pub mod stats;

pub use bayes::{DomainKind, GridConfig, LikelihoodModel, Posterior};
pub use clock::{ClockConfig, FrequencyRecord};
pub use collective_spin::{GaussianAnsatz, OatParams, SqueezedStateModel, StateFamily};
pub use error::{Error, Result};
pub use fringe::{FringeConfig, FringePrecision, FringeSample, SineFit};
pub use gravimetry::{GravimetryConfig, GravimetryCurve, PhaseModel, Schedule};
pub use noise::{NoiseColor, NoiseSeries, NoiseSpec};
pub use session::{
    BatchSummary, Imperfection, SessionConfig, SweepConfig, SweepPoint, TrialRecord,
};
