//! Adaptive phase estimation: measure, update, move the auxiliary phase to
//! the running estimate, repeat.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{wrap_phase, DeltaPhiForm, GridConfig, LikelihoodModel, NoiseDraws, Posterior};
use crate::collective_spin::{optimal_rotation_angle, OatParams, SqueezedStateModel};
use crate::error::{domain, Result};
use crate::noise::{sample_depolarization, NoiseSpec};
use crate::rng::{normal, stream, Lane, Rng};
use crate::stats;

/// When depolarization is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepolarizationDraw {
    #[default]
    PerStep,
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Probe actually prepared.
    pub state: SqueezedStateModel,
    /// Probe assumed by the likelihood; `None` means the true one.
    pub assumed_state: Option<SqueezedStateModel>,
    pub true_phi: f64,
    pub steps: usize,
    pub noise: NoiseSpec,
    pub reshaped: bool,
    pub delta_phi: DeltaPhiForm,
    pub depolarization: DepolarizationDraw,
    pub grid: GridConfig,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(state: SqueezedStateModel, true_phi: f64, steps: usize, seed: u64) -> Self {
        Self {
            state,
            assumed_state: None,
            true_phi,
            steps,
            noise: NoiseSpec::default(),
            reshaped: false,
            delta_phi: DeltaPhiForm::default(),
            depolarization: DepolarizationDraw::default(),
            grid: GridConfig::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return domain("at least one measurement step is required");
        }
        if !(-PI..PI).contains(&self.true_phi) {
            return domain(format!(
                "true phase must lie in [-pi, pi), got {}",
                self.true_phi
            ));
        }
        self.noise.validate()?;
        self.grid.validate()
    }

    /// Likelihood model used by the estimator.
    pub fn likelihood(&self) -> LikelihoodModel {
        let state = self.assumed_state.unwrap_or(self.state);
        let base = if self.reshaped {
            LikelihoodModel::reshaped(state, self.noise.sigma_total())
        } else {
            LikelihoodModel::ideal(state)
        };
        base.with_depolarization(self.noise.p_d)
            .with_delta_phi(self.delta_phi)
    }
}

/// Trajectory of one adaptive run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub big_phi: Vec<f64>,
    pub m_z: Vec<f64>,
    pub phi_est: Vec<f64>,
    pub sigma_phi: Vec<f64>,
    /// Wrapped `phi_est - phi_true` after the last step.
    pub final_error: f64,
    /// Posterior resets to the initial prior after a degenerate update.
    pub resets: usize,
}

/// Draws one outcome `m_z` at true phase `phi` and auxiliary phase `Phi`.
///
/// The spread is the projection noise of `state` at the shifted working
/// phase; contrast and depolarization scale the mean only.
pub fn simulate_measurement<R: Rng + ?Sized>(
    state: &SqueezedStateModel,
    true_phi: f64,
    big_phi: f64,
    draws: NoiseDraws,
    rng: &mut R,
) -> f64 {
    let p = true_phi - big_phi + draws.sigma_draw;
    let mean = (1.0 - draws.p_tilde) * state.contrast * state.amplitude * p.sin();
    normal(rng, mean, state.outcome_spread(p))
}

/// Folds one outcome into the posterior whose nodes map to working phase
/// `gain * (x - control)`; resets to `initial` if the update degenerates.
pub(crate) fn absorb(
    post: &mut Posterior,
    initial: &Posterior,
    likelihood: &LikelihoodModel,
    m_z: f64,
    gain: f64,
    control: f64,
    grid: &GridConfig,
) -> bool {
    let ok = post
        .update_log(|x| likelihood.log_likelihood(m_z, gain * (x - control)))
        .is_ok();
    if !ok {
        log::warn!("degenerate posterior, resetting to the initial prior");
        *post = initial.clone();
    }
    post.refocus(grid);
    !ok
}

/// Runs trial `index` of `cfg`.
pub fn run_trial(cfg: &SessionConfig, index: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    let m = cfg.steps;
    let mut proj = stream(cfg.seed, index, Lane::Projection);
    let mut depol = stream(cfg.seed, index, Lane::Depolarization);
    let kicks = cfg
        .noise
        .sample_series(m, &mut stream(cfg.seed, index, Lane::PhaseNoise));
    let likelihood = cfg.likelihood();
    let initial = Posterior::uniform_phase(cfg.grid.nodes)?;
    let mut post = initial.clone();
    let trial_p = sample_depolarization(cfg.noise.p_d, &mut depol);

    let mut rec = TrialRecord {
        big_phi: Vec::with_capacity(m),
        m_z: Vec::with_capacity(m),
        phi_est: Vec::with_capacity(m),
        sigma_phi: Vec::with_capacity(m),
        final_error: 0.0,
        resets: 0,
    };
    let mut big_phi = 0.0;
    for &kick in &kicks {
        let p_tilde = match cfg.depolarization {
            DepolarizationDraw::PerStep => sample_depolarization(cfg.noise.p_d, &mut depol),
            DepolarizationDraw::PerTrial => trial_p,
        };
        let draws = NoiseDraws {
            p_tilde,
            sigma_draw: kick,
        };
        let m_z = simulate_measurement(&cfg.state, cfg.true_phi, big_phi, draws, &mut proj);
        if absorb(
            &mut post,
            &initial,
            &likelihood,
            m_z,
            1.0,
            big_phi,
            &cfg.grid,
        ) {
            rec.resets += 1;
        }
        let (mean, sd) = post.stats();
        rec.big_phi.push(big_phi);
        rec.m_z.push(m_z);
        rec.phi_est.push(wrap_phase(mean));
        rec.sigma_phi.push(sd);
        big_phi = wrap_phase(mean);
    }
    rec.final_error = wrap_phase(rec.phi_est[m - 1] - cfg.true_phi);
    Ok(rec)
}

/// Runs `trials` independent trials in parallel; results are in index order.
pub fn run_trials(cfg: &SessionConfig, trials: usize) -> Result<Vec<TrialRecord>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect()
}

/// Per-step aggregates over a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub mean_sigma: Vec<f64>,
    pub median_sigma: Vec<f64>,
    pub err_mean: Vec<f64>,
    pub err_std: Vec<f64>,
    /// Median of `|phi_true - Phi_l|` per step.
    pub median_lock_error: Vec<f64>,
    pub final_errors: Vec<f64>,
    pub resets: usize,
}

impl BatchSummary {
    pub fn from_records(records: &[TrialRecord], true_phi: f64) -> Self {
        let m = records.first().map_or(0, |r| r.phi_est.len());
        let column = |f: &dyn Fn(&TrialRecord, usize) -> f64, l: usize| -> Vec<f64> {
            records.iter().map(|r| f(r, l)).collect()
        };
        let mut s = Self {
            mean_sigma: Vec::with_capacity(m),
            median_sigma: Vec::with_capacity(m),
            err_mean: Vec::with_capacity(m),
            err_std: Vec::with_capacity(m),
            median_lock_error: Vec::with_capacity(m),
            final_errors: records.iter().map(|r| r.final_error).collect(),
            resets: records.iter().map(|r| r.resets).sum(),
        };
        for l in 0..m {
            let sig = column(&|r, l| r.sigma_phi[l], l);
            let err = column(&|r, l| wrap_phase(r.phi_est[l] - true_phi), l);
            let lock = column(&|r, l| wrap_phase(true_phi - r.big_phi[l]).abs(), l);
            s.mean_sigma.push(stats::mean(&sig));
            s.median_sigma.push(stats::median(&sig));
            s.err_mean.push(stats::mean(&err));
            s.err_std.push(stats::std_sample(&err));
            s.median_lock_error.push(stats::median(&lock));
        }
        s
    }

    pub fn final_error_std(&self) -> f64 {
        stats::std_sample(&self.final_errors)
    }
}

pub fn run_batch(cfg: &SessionConfig, trials: usize) -> Result<BatchSummary> {
    if trials < 2 {
        return domain(format!("a batch needs at least 2 trials, got {trials}"));
    }
    Ok(BatchSummary::from_records(
        &run_trials(cfg, trials)?,
        cfg.true_phi,
    ))
}

/// Preparation error swept by [`sweep_imperfection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imperfection {
    /// Additive offset of the rotation angle (rad).
    AlphaError,
    /// Relative offset of the twisting time, rotation kept at its nominal
    /// optimum.
    TError,
}

/// Nominal OAT preparation and session settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    /// Twist at zero error, normally the squeezing-optimal one from
    /// [`best_twist`](crate::collective_spin::best_twist).
    pub chi_t: f64,
    pub contrast: f64,
    pub session: SessionConfig,
    pub trials: usize,
}

impl SweepConfig {
    /// Preparation for a given error value.
    pub fn params(&self, kind: Imperfection, value: f64) -> Result<OatParams> {
        let alpha = optimal_rotation_angle(self.n, self.chi_t)?;
        match kind {
            Imperfection::AlphaError => OatParams::new(self.n, self.chi_t, alpha + value),
            Imperfection::TError => OatParams::new(self.n, self.chi_t * (1.0 + value), alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub xi: f64,
    /// Median final posterior width across trials.
    pub precision: f64,
    pub mean_sigma: f64,
    pub err_std: f64,
}

/// Runs a batch per error value with identical seeds (common random
/// numbers), the estimator modelling the imperfect probe it was given.
pub fn sweep_imperfection(
    cfg: &SweepConfig,
    kind: Imperfection,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            if !value.is_finite() {
                return domain(format!("sweep value must be finite, got {value}"));
            }
            let state = SqueezedStateModel::from_oat(&cfg.params(kind, value)?, cfg.contrast)?;
            let session = SessionConfig {
                state,
                assumed_state: None,
                ..cfg.session
            };
            let records = run_trials(&session, cfg.trials)?;
            let finals: Vec<f64> = records
                .iter()
                .map(|r| *r.sigma_phi.last().unwrap())
                .collect();
            let summary = BatchSummary::from_records(&records, session.true_phi);
            Ok(SweepPoint {
                value,
                xi: state.xi,
                precision: stats::median(&finals),
                mean_sigma: stats::mean(&finals),
                err_std: summary.final_error_std(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::analytic_posterior_std;
    use crate::collective_spin::StateFamily;

    fn state(xi: f64) -> SqueezedStateModel {
        SqueezedStateModel::from_xi(200, xi, 1.0, StateFamily::Ansatz).unwrap()
    }

    #[test]
    fn measurement_spread_at_working_point() {
        let s = SqueezedStateModel::from_xi(10_000, 0.05, 1.0, StateFamily::Ansatz).unwrap();
        let mut r = stream(1, 0, Lane::Projection);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| simulate_measurement(&s, 0.2, 0.2, NoiseDraws::default(), &mut r))
            .collect();
        let expected = s.amplitude * s.xi / s.nf().sqrt();
        assert!((stats::std_pop(&draws) / expected - 1.0).abs() < 0.03);
        assert!(stats::mean(&draws).abs() < 4.0 * expected / (20_000f64).sqrt());
    }

    #[test]
    fn coherent_spread_scales_with_root_n() {
        let s = SqueezedStateModel::coherent(400, 0.8).unwrap();
        let mut r = stream(2, 0, Lane::Projection);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| simulate_measurement(&s, 0.0, 0.0, NoiseDraws::default(), &mut r))
            .collect();
        assert!((stats::std_pop(&draws) / 10.0 - 1.0).abs() < 0.03);
    }

    #[test]
    fn sample_mean_matches_outcome_mean() {
        let s = state(0.53);
        let lik = LikelihoodModel::ideal(s);
        let d = NoiseDraws {
            p_tilde: 0.1,
            sigma_draw: 0.05,
        };
        let mut r = stream(3, 0, Lane::Projection);
        let draws: Vec<f64> = (0..10_000)
            .map(|_| simulate_measurement(&s, 0.7, 0.3, d, &mut r))
            .collect();
        let se = stats::std_pop(&draws) / 100.0;
        assert!((stats::mean(&draws) - lik.outcome_mean(0.7, 0.3, d)).abs() < 4.0 * se);
    }

    #[test]
    fn trial_record_shape_and_adaptive_rule() {
        let cfg = SessionConfig::new(state(0.53), 0.4, 20, 11);
        let rec = run_trial(&cfg, 0).unwrap();
        assert_eq!(rec.big_phi.len(), 20);
        assert_eq!(rec.m_z.len(), 20);
        assert_eq!(rec.sigma_phi.len(), 20);
        assert_eq!(rec.big_phi[0], 0.0);
        for l in 1..20 {
            assert_eq!(rec.big_phi[l], rec.phi_est[l - 1]);
        }
        assert_eq!(rec, run_trial(&cfg, 0).unwrap());
        assert_ne!(rec.m_z, run_trial(&cfg, 1).unwrap().m_z);
    }

    #[test]
    fn noise_free_precision_near_analytic() {
        let cfg = SessionConfig::new(state(0.15), 0.4, 50, 5);
        let s = run_batch(&cfg, 20).unwrap();
        let ratio = s.mean_sigma[49] / analytic_posterior_std(0.15, 200, 50);
        assert!(ratio > 1.0 / 1.5 && ratio < 1.5, "{ratio}");
        assert_eq!(s.resets, 0);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = SessionConfig::new(state(0.53), 0.4, 0, 1);
        assert!(run_trial(&cfg, 0).is_err());
        cfg.steps = 5;
        cfg.true_phi = PI;
        assert!(run_trial(&cfg, 0).is_err());
        cfg.true_phi = 0.0;
        assert!(run_batch(&cfg, 1).is_err());
    }

    #[test]
    fn sweep_preparations() {
        let base = SessionConfig::new(state(0.53), 0.4, 10, 1);
        let ct = crate::collective_spin::optimal_twist_time(200, 1.0).unwrap();
        let cfg = SweepConfig {
            n: 200,
            chi_t: ct,
            contrast: 1.0,
            session: base,
            trials: 4,
        };
        let a0 = optimal_rotation_angle(200, ct).unwrap();
        let p = cfg.params(Imperfection::TError, 0.2).unwrap();
        assert_eq!(p.alpha, a0);
        assert!((p.chi_t - 1.2 * ct).abs() < 1e-15);
        let p = cfg.params(Imperfection::AlphaError, -0.05).unwrap();
        assert!((p.alpha - a0 + 0.05).abs() < 1e-15);
        let pts = sweep_imperfection(&cfg, Imperfection::AlphaError, &[0.0, 0.1]).unwrap();
        assert!(pts[1].xi > pts[0].xi);
        assert!(sweep_imperfection(&cfg, Imperfection::AlphaError, &[f64::NAN]).is_err());
    }
}
