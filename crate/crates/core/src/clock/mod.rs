//! Clock locking: a local oscillator with colored fractional-frequency noise
//! is steered each cycle by an adaptive Bayesian estimate of its detuning.
//!
//! Frequencies are fractional (`y = delta nu / nu0`) at the interface and
//! converted to angular detuning `omega = 2 pi nu0 y` for the interferometer.

mod allan;

pub use allan::{allan_deviation, log_spaced_factors, theoretical_adev};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::bayes::{GridConfig, LikelihoodModel};
use crate::collective_spin::SqueezedStateModel;
use crate::error::{domain, Error, Result};
use crate::gravimetry::{theoretical_precision, PhaseModel, Schedule};
use crate::noise::NoiseSpec;
use crate::rng::{stream, Lane, Rng};
use crate::sequence::SequenceSpec;
use crate::session::DepolarizationDraw;

/// Optical carrier of the reference lattice clock (Hz).
pub const DEFAULT_CARRIER_HZ: f64 = 429.228e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub state: SqueezedStateModel,
    pub schedule: Schedule,
    /// Fractional-frequency noise strengths and depolarization.
    pub noise: NoiseSpec,
    pub cycles: usize,
    /// Extra time per cycle beyond the interrogations (s).
    pub dead_time: f64,
    pub carrier_hz: f64,
    pub reshaped: bool,
    pub grid: GridConfig,
    pub depolarization: DepolarizationDraw,
    pub seed: u64,
}

impl ClockConfig {
    pub fn new(
        state: SqueezedStateModel,
        schedule: Schedule,
        noise: NoiseSpec,
        cycles: usize,
        seed: u64,
    ) -> Self {
        Self {
            state,
            schedule,
            noise,
            cycles,
            dead_time: 0.0,
            carrier_hz: DEFAULT_CARRIER_HZ,
            reshaped: true,
            grid: GridConfig::default(),
            depolarization: DepolarizationDraw::PerStep,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 32 {
            return domain(format!("need at least 32 cycles, got {}", self.cycles));
        }
        if !(self.dead_time >= 0.0) {
            return domain("dead time must be >= 0");
        }
        if !(self.carrier_hz > 0.0) {
            return domain("carrier frequency must be positive");
        }
        if self.schedule.is_empty() {
            return domain("schedule is empty");
        }
        self.noise.validate()?;
        self.grid.validate()
    }

    pub fn cycle_time(&self) -> f64 {
        self.schedule.duration() + self.dead_time
    }

    /// Angular detuning per unit fractional frequency.
    pub fn omega_per_fraction(&self) -> f64 {
        TAU * self.carrier_hz
    }

    /// Unambiguous detuning window in rad/s: one fringe of the first step.
    pub fn window(&self) -> (f64, f64) {
        let half = PI / self.schedule.t_first();
        (-half, half)
    }

    /// Noise-free single-cycle precision, fractional units.
    pub fn single_cycle_precision(&self) -> f64 {
        theoretical_precision(
            &self.schedule,
            self.schedule.len(),
            &self.state,
            &PhaseModel::clock(),
        )
        .expect("non-empty schedule")
            / self.omega_per_fraction()
    }

    fn sequence(&self) -> SequenceSpec {
        let pm = PhaseModel::clock();
        let base = if self.reshaped {
            LikelihoodModel::reshaped(self.state, 0.0)
        } else {
            LikelihoodModel::ideal(self.state)
        };
        SequenceSpec {
            state: self.state,
            likelihood: base.with_depolarization(self.noise.p_d),
            gains: self.schedule.times.iter().map(|&t| pm.gain(t)).collect(),
            sigma_param: 0.0,
            window: self.window(),
            grid: self.grid,
            p_d: self.noise.p_d,
            depolarization: self.depolarization,
        }
    }
}

/// Per-cycle record, all in fractional frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRecord {
    /// Free-running oscillator offset.
    pub lo_offset: Vec<f64>,
    /// Offset seen during the cycle, after the accumulated correction.
    pub true_offset: Vec<f64>,
    pub estimate: Vec<f64>,
    /// `true_offset - estimate`.
    pub residual: Vec<f64>,
    /// Accumulated correction after the cycle.
    pub correction: Vec<f64>,
    pub cycle_time: f64,
    /// Cycles whose offset left the unambiguous window.
    pub flagged: Vec<usize>,
}

impl FrequencyRecord {
    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    /// Allan deviation of the steering record at averaging factors `ms`.
    pub fn adev(&self, ms: &[usize]) -> Result<Vec<(f64, f64)>> {
        allan_deviation(&self.correction, self.cycle_time, ms)
    }
}

/// One locking cycle at fractional offset `lo_offset`; returns
/// `(estimate, residual)` in fractional units.
pub fn lock_cycle<R: Rng + ?Sized>(
    cfg: &ClockConfig,
    lo_offset: f64,
    proj: &mut R,
    depol: &mut R,
) -> Result<(f64, f64)> {
    lock_with(
        &cfg.sequence(),
        cfg.omega_per_fraction(),
        lo_offset,
        proj,
        depol,
    )
}

fn lock_with<R: Rng + ?Sized>(
    seq: &SequenceSpec,
    scale: f64,
    lo_offset: f64,
    proj: &mut R,
    depol: &mut R,
) -> Result<(f64, f64)> {
    let kicks = vec![0.0; seq.gains.len()];
    let out = seq.run(scale * lo_offset, &kicks, proj, depol)?;
    let est = out.estimates.last().copied().unwrap_or(0.0) / scale;
    Ok((est, lo_offset - est))
}

pub fn run_clock(cfg: &ClockConfig) -> Result<FrequencyRecord> {
    cfg.validate()?;
    let seq = cfg.sequence();
    let scale = cfg.omega_per_fraction();
    let n = cfg.cycles;
    let lo = cfg
        .noise
        .sample_series(n, &mut stream(cfg.seed, 0, Lane::Oscillator));
    let mut proj = stream(cfg.seed, 0, Lane::Projection);
    let mut depol = stream(cfg.seed, 0, Lane::Depolarization);
    let mut rec = FrequencyRecord {
        lo_offset: lo.clone(),
        true_offset: Vec::with_capacity(n),
        estimate: Vec::with_capacity(n),
        residual: Vec::with_capacity(n),
        correction: Vec::with_capacity(n),
        cycle_time: cfg.cycle_time(),
        flagged: Vec::new(),
    };
    let mut correction = 0.0;
    for (k, &n_k) in lo.iter().enumerate() {
        let seen = n_k - correction;
        let est = match lock_with(&seq, scale, seen, &mut proj, &mut depol) {
            Ok((est, _)) => est,
            Err(Error::DynamicRange { .. }) => {
                log::warn!("cycle {k}: offset {seen:e} outside the lock window");
                rec.flagged.push(k);
                0.0
            }
            Err(e) => return Err(e),
        };
        correction += est;
        rec.true_offset.push(seen);
        rec.estimate.push(est);
        rec.residual.push(seen - est);
        rec.correction.push(correction);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective_spin::{xi_from_db, StateFamily};
    use crate::gravimetry::build_schedule;
    use crate::stats;

    fn config(xi: f64, noise: NoiseSpec, cycles: usize) -> ClockConfig {
        let state = SqueezedStateModel::from_xi(30000, xi, 0.91, StateFamily::Ansatz).unwrap();
        let sched = build_schedule(0.141, 1.3, 6, 12).unwrap();
        ClockConfig::new(state, sched, noise, cycles, 5)
    }

    #[test]
    fn zero_offset_estimate() {
        let cfg = config(xi_from_db(-5.1), NoiseSpec::default(), 32);
        let sigma = cfg.single_cycle_precision();
        for i in 0..10 {
            let mut p = stream(9, i, Lane::Projection);
            let mut d = stream(9, i, Lane::Depolarization);
            let (est, res) = lock_cycle(&cfg, 0.0, &mut p, &mut d).unwrap();
            assert!(est.abs() < 3.0 * sigma, "{est} vs {sigma}");
            assert_eq!(res, -est);
        }
    }

    #[test]
    fn out_of_range_offset() {
        let cfg = config(0.6, NoiseSpec::default(), 32);
        let edge = cfg.window().1 / cfg.omega_per_fraction();
        let mut p = stream(1, 0, Lane::Projection);
        let mut d = stream(1, 0, Lane::Depolarization);
        assert!(matches!(
            lock_cycle(&cfg, 1.5 * edge, &mut p, &mut d),
            Err(Error::DynamicRange { .. })
        ));
    }

    #[test]
    fn record_shape_and_identity() {
        let cfg = config(0.6, NoiseSpec::white(5e-18), 64);
        let r = run_clock(&cfg).unwrap();
        assert_eq!(r.len(), 64);
        assert!(r.flagged.is_empty());
        for k in 0..64 {
            assert_eq!(r.residual[k], r.true_offset[k] - r.estimate[k]);
        }
        assert!((r.cycle_time - cfg.schedule.duration()).abs() < 1e-15);
        assert!(run_clock(&config(0.6, NoiseSpec::default(), 31)).is_err());
    }

    #[test]
    fn noise_free_residuals_at_qpn_floor() {
        let cfg = config(1.0, NoiseSpec::default(), 200);
        let r = run_clock(&cfg).unwrap();
        let ratio = stats::std_pop(&r.residual) / cfg.single_cycle_precision();
        assert!((0.5..1.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn squeezing_lowers_residuals() {
        let noise = NoiseSpec::white(2e-18);
        let sss = run_clock(&config(xi_from_db(-5.1), noise, 200)).unwrap();
        let scs = run_clock(&config(1.0, noise, 200)).unwrap();
        assert!(stats::std_pop(&sss.residual) < stats::std_pop(&scs.residual));
    }
}
