//! Gravity estimation with a growing interrogation-time schedule.
//!
//! The interferometer phase is `k_eff g T^2`; the chirp `g_c` plays the role
//! of the auxiliary phase and follows the running estimate.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{GridConfig, LikelihoodModel};
use crate::collective_spin::SqueezedStateModel;
use crate::error::{domain, Error, Result};
use crate::noise::NoiseSpec;
use crate::rng::{stream, Lane};
use crate::sequence::{SequenceOutcome, SequenceSpec};
use crate::session::DepolarizationDraw;
use crate::stats;

/// Effective wave number of the reference gravimeter (rad/m).
pub const K_EFF: f64 = 1.61e7;

/// `phi = D gamma T^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    pub coefficient: f64,
    pub exponent: i32,
}

impl PhaseModel {
    /// `D = k_eff`, `alpha = 2`, parameter `g` in m/s^2.
    pub fn gravimetry(k_eff: f64) -> Self {
        Self {
            coefficient: k_eff,
            exponent: 2,
        }
    }

    /// `D = 1`, `alpha = 1`, parameter `omega` in rad/s.
    pub fn clock() -> Self {
        Self {
            coefficient: 1.0,
            exponent: 1,
        }
    }

    /// Phase per unit parameter at interrogation time `t`.
    pub fn gain(&self, t: f64) -> f64 {
        self.coefficient * t.powi(self.exponent)
    }

    pub fn phase(&self, gamma: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("interrogation time must be positive, got {t}"));
        }
        Ok(self.gain(t) * gamma)
    }
}

pub fn phase_from_parameter(pm: &PhaseModel, gamma: f64, t: f64) -> Result<f64> {
    pm.phase(gamma, t)
}

/// Interrogation times: geometric ramp by `a` up to `t_max` over the first
/// `m_a` steps, then constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub t_max: f64,
    pub a: f64,
    pub m_a: usize,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Shortest (first) interrogation time.
    pub fn t_first(&self) -> f64 {
        self.times[0]
    }

    /// Cumulative interrogation time after each step.
    pub fn total_times(&self) -> Vec<f64> {
        self.times
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }

    /// Sum of all interrogation times.
    pub fn duration(&self) -> f64 {
        self.times.iter().sum()
    }
}

pub fn build_schedule(t_max: f64, a: f64, m_a: usize, m: usize) -> Result<Schedule> {
    if !(a > 1.0) || !a.is_finite() {
        return domain(format!("growth ratio a must exceed 1, got {a}"));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return domain(format!("T_max must be positive, got {t_max}"));
    }
    if m_a < 1 || m_a > m {
        return domain(format!(
            "ramp length must satisfy 1 <= M_a <= M, got M_a = {m_a}, M = {m}"
        ));
    }
    let times = (1..=m)
        .map(|l| {
            if l < m_a {
                t_max / a.powi((m_a - l) as i32)
            } else {
                t_max
            }
        })
        .collect();
    Ok(Schedule {
        times,
        t_max,
        a,
        m_a,
    })
}

/// Noise-free precision after `l` steps (1-based):
/// `xi / (C D sqrt(N) sqrt(sum_j (T_j^alpha)^2))`.
pub fn theoretical_precision(
    sched: &Schedule,
    l: usize,
    state: &SqueezedStateModel,
    pm: &PhaseModel,
) -> Result<f64> {
    if l < 1 || l > sched.len() {
        return domain(format!("step {l} outside 1..={}", sched.len()));
    }
    let info: f64 = sched.times[..l].iter().map(|&t| pm.gain(t).powi(2)).sum();
    Ok(state.xi / (state.contrast * state.nf().sqrt() * info.sqrt()))
}

/// Theoretical curve for every step.
pub fn theoretical_curve(
    sched: &Schedule,
    state: &SqueezedStateModel,
    pm: &PhaseModel,
) -> Vec<f64> {
    (1..=sched.len())
        .map(|l| theoretical_precision(sched, l, state, pm).expect("l in range"))
        .collect()
}

/// Log-log slope of `y` against `x` over the 1-based inclusive step window.
pub fn fit_scaling_exponent(x: &[f64], y: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if lo < 1 || hi > x.len().min(y.len()) || hi < lo || hi + 1 - lo < 5 {
        return Err(Error::InsufficientData(format!(
            "window {lo}..={hi} must hold at least 5 points within 1..={}",
            x.len().min(y.len())
        )));
    }
    stats::loglog_slope(&x[lo - 1..hi], &y[lo - 1..hi])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravimetryConfig {
    pub state: SqueezedStateModel,
    pub k_eff: f64,
    pub schedule: Schedule,
    pub true_g: f64,
    /// Centre of the prior window.
    pub g_prior: f64,
    /// Acceleration noise (m/s^2) and depolarization.
    pub noise: NoiseSpec,
    pub reshaped: bool,
    pub grid: GridConfig,
    pub depolarization: DepolarizationDraw,
    pub trials: usize,
    pub seed: u64,
}

impl GravimetryConfig {
    pub fn phase_model(&self) -> PhaseModel {
        PhaseModel::gravimetry(self.k_eff)
    }

    /// Unambiguous window: one fringe period of the shortest time.
    pub fn window(&self) -> (f64, f64) {
        let period = TAU / self.phase_model().gain(self.schedule.t_first());
        (self.g_prior - 0.5 * period, self.g_prior + 0.5 * period)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_eff > 0.0) {
            return domain(format!("k_eff must be positive, got {}", self.k_eff));
        }
        if self.trials < 2 {
            return domain(format!("need at least 2 trials, got {}", self.trials));
        }
        self.noise.validate()?;
        self.grid.validate()?;
        let (lo, hi) = self.window();
        if !(self.true_g >= lo && self.true_g < hi) {
            return Err(Error::DynamicRange {
                value: self.true_g,
                lo,
                hi,
            });
        }
        Ok(())
    }

    fn sequence(&self) -> SequenceSpec {
        let pm = self.phase_model();
        let base = if self.reshaped {
            LikelihoodModel::reshaped(self.state, 0.0)
        } else {
            LikelihoodModel::ideal(self.state)
        };
        SequenceSpec {
            state: self.state,
            likelihood: base.with_depolarization(self.noise.p_d),
            gains: self.schedule.times.iter().map(|&t| pm.gain(t)).collect(),
            sigma_param: if self.reshaped {
                self.noise.sigma_total()
            } else {
                0.0
            },
            window: self.window(),
            grid: self.grid,
            p_d: self.noise.p_d,
            depolarization: self.depolarization,
        }
    }

    /// One trial: the acceleration noise series is drawn per trial, one
    /// sample per step.
    pub fn run_trial(&self, index: u64) -> Result<SequenceOutcome> {
        let seq = self.sequence();
        let m = self.schedule.len();
        let kicks = self
            .noise
            .sample_series(m, &mut stream(self.seed, index, Lane::PhaseNoise));
        let mut proj = stream(self.seed, index, Lane::Projection);
        let mut depol = stream(self.seed, index, Lane::Depolarization);
        seq.run(self.true_g, &kicks, &mut proj, &mut depol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub t: f64,
    pub total_t: f64,
    pub dg_theory: f64,
    /// Standard deviation of `g_est` across trials.
    pub dg_batch: f64,
    /// Mean posterior width across trials.
    pub dg_posterior: f64,
    pub g_est_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravimetryCurve {
    pub points: Vec<CurvePoint>,
    pub final_estimates: Vec<f64>,
    pub resets: usize,
}

impl GravimetryCurve {
    pub fn total_times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.total_t).collect()
    }

    pub fn dg_theory(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.dg_theory).collect()
    }

    pub fn dg_batch(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.dg_batch).collect()
    }
}

pub fn run_gravimetry(cfg: &GravimetryConfig) -> Result<GravimetryCurve> {
    cfg.validate()?;
    let runs: Vec<SequenceOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| cfg.run_trial(i))
        .collect::<Result<_>>()?;
    let theory = theoretical_curve(&cfg.schedule, &cfg.state, &cfg.phase_model());
    let totals = cfg.schedule.total_times();
    let points = (0..cfg.schedule.len())
        .map(|l| {
            let est: Vec<f64> = runs.iter().map(|r| r.estimates[l]).collect();
            let sig: Vec<f64> = runs.iter().map(|r| r.sigmas[l]).collect();
            CurvePoint {
                step: l + 1,
                t: cfg.schedule.times[l],
                total_t: totals[l],
                dg_theory: theory[l],
                dg_batch: stats::std_sample(&est),
                dg_posterior: stats::mean(&sig),
                g_est_mean: stats::mean(&est),
            }
        })
        .collect();
    Ok(GravimetryCurve {
        points,
        final_estimates: runs.iter().map(|r| *r.estimates.last().unwrap()).collect(),
        resets: runs.iter().map(|r| r.resets).sum(),
    })
}
