//! Subcommand configurations and their runs.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use squeezed_bayes::bayes::DeltaPhiForm;
use squeezed_bayes::clock::{log_spaced_factors, run_clock, theoretical_adev, DEFAULT_CARRIER_HZ};
use squeezed_bayes::collective_spin::best_twist;
use squeezed_bayes::fringe::precision_vs_squeezing;
use squeezed_bayes::gravimetry::{build_schedule, fit_scaling_exponent, run_gravimetry, K_EFF};
use squeezed_bayes::noise::{
    fit_psd_slope, flicker_noise, periodogram, random_walk_noise, white_noise,
};
use squeezed_bayes::rng::{stream, Lane, Rng};
use squeezed_bayes::session::{run_trials, sweep_imperfection, DepolarizationDraw};
use squeezed_bayes::stats::{loglog_slope, median};
use squeezed_bayes::{
    BatchSummary, ClockConfig, FringeConfig, GravimetryConfig, GridConfig, Imperfection, NoiseSpec,
    SessionConfig, SqueezedStateModel, StateFamily, SweepConfig,
};

use crate::config::{check, Scenario, StateKeys};
use crate::error::{CliError, CliResult};
use crate::output::Output;
use crate::row;
use crate::svg::{Plot, Series};

fn core_check(r: squeezed_bayes::Result<()>, key: &str) -> CliResult<()> {
    r.map_err(|e| CliError::config(format!("`{key}`: {e}")))
}

/// Independent seed for run `r` of a multi-run scenario.
fn sub_seed(seed: u64, r: u64) -> u64 {
    stream(seed, r, Lane::Auxiliary).random::<u64>()
}

fn default_state_xi(xi: &mut Option<f64>, xi_db: Option<f64>, chi_t: Option<f64>, default: f64) {
    if xi.is_none() && xi_db.is_none() && chi_t.is_none() {
        *xi = Some(default);
    }
}

// ---------------------------------------------------------------- phase

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodChoice {
    #[default]
    Both,
    Ideal,
    Reshaped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseRun {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub contrast: f64,
    pub family: StateFamily,
    pub true_phi: f64,
    pub steps: usize,
    pub trials: usize,
    pub likelihood: LikelihoodChoice,
    pub delta_phi: DeltaPhiForm,
    pub depolarization: DepolarizationDraw,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub noise: NoiseSpec,
    pub grid: GridConfig,
}

impl Default for PhaseRun {
    fn default() -> Self {
        Self {
            n: 200,
            xi: None,
            xi_db: None,
            chi_t: None,
            alpha: None,
            contrast: 1.0,
            family: StateFamily::Ansatz,
            true_phi: 0.3,
            steps: 50,
            trials: 100,
            likelihood: LikelihoodChoice::Both,
            delta_phi: DeltaPhiForm::default(),
            depolarization: DepolarizationDraw::default(),
            seed: None,
            noise: NoiseSpec::default(),
            grid: GridConfig::default(),
        }
    }
}

impl PhaseRun {
    fn keys(&self) -> StateKeys {
        StateKeys {
            n: self.n,
            xi: self.xi,
            xi_db: self.xi_db,
            chi_t: self.chi_t,
            alpha: self.alpha,
            contrast: self.contrast,
            family: self.family,
        }
    }
}

impl Scenario for PhaseRun {
    const NAME: &'static str = "phase";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        Some(&mut self.trials)
    }

    fn materialize(&mut self) -> CliResult<()> {
        default_state_xi(&mut self.xi, self.xi_db, self.chi_t, 0.15);
        self.keys().check()?;
        check(
            (-PI..PI).contains(&self.true_phi),
            "true_phi",
            format!("must lie in [-pi, pi), got {}", self.true_phi),
        )?;
        check(self.steps >= 1, "steps", "need at least one step")?;
        check(
            self.trials >= 2,
            "trials",
            format!("need at least 2, got {}", self.trials),
        )?;
        core_check(self.noise.validate(), "noise")?;
        core_check(self.grid.validate(), "grid")
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let state = self.keys().resolve()?;
        let mut base = SessionConfig::new(state, self.true_phi, self.steps, seed);
        base.noise = self.noise;
        base.delta_phi = self.delta_phi;
        base.depolarization = self.depolarization;
        base.grid = self.grid;
        let variants: &[(&str, bool)] = match self.likelihood {
            LikelihoodChoice::Both => &[("ideal", false), ("reshaped", true)],
            LikelihoodChoice::Ideal => &[("ideal", false)],
            LikelihoodChoice::Reshaped => &[("reshaped", true)],
        };
        let analytic: Vec<(f64, f64)> = (1..=self.steps)
            .map(|l| (l as f64, state.xi / (state.nf().sqrt() * (l as f64).sqrt())))
            .collect();
        let mut plot = Plot::new(
            "Posterior width per step",
            "step l",
            "sigma_phi (rad)",
            true,
            true,
        )
        .with(Series::line("xi / sqrt(N l)", analytic.clone()));
        for &(label, reshaped) in variants {
            let cfg = SessionConfig { reshaped, ..base };
            let records = run_trials(&cfg, self.trials)?;
            let summary = BatchSummary::from_records(&records, self.true_phi);
            let first = &records[0];
            out.csv(
                &format!("{label}_trace.csv"),
                &["l", "big_phi", "m_z", "phi_est", "sigma_phi"],
                (0..self.steps).map(|l| {
                    row![
                        l + 1,
                        first.big_phi[l],
                        first.m_z[l],
                        first.phi_est[l],
                        first.sigma_phi[l]
                    ]
                }),
            )?;
            out.csv(
                &format!("{label}_precision.csv"),
                &[
                    "l",
                    "mean_sigma",
                    "median_sigma",
                    "analytic_sigma",
                    "err_mean",
                    "err_std",
                    "median_lock_error",
                ],
                (0..self.steps).map(|l| {
                    row![
                        l + 1,
                        summary.mean_sigma[l],
                        summary.median_sigma[l],
                        analytic[l].1,
                        summary.err_mean[l],
                        summary.err_std[l],
                        summary.median_lock_error[l]
                    ]
                }),
            )?;
            out.csv(
                &format!("{label}_errors.csv"),
                &["trial", "final_error", "final_sigma", "resets"],
                records
                    .iter()
                    .enumerate()
                    .map(|(i, r)| row![i, r.final_error, r.sigma_phi[self.steps - 1], r.resets]),
            )?;
            println!(
                "{label}: final mean sigma {:e}, final error std {:e}, resets {}",
                summary.mean_sigma[self.steps - 1],
                summary.final_error_std(),
                summary.resets
            );
            plot = plot.with(Series::line(
                &format!("{label} mean"),
                summary
                    .mean_sigma
                    .iter()
                    .enumerate()
                    .map(|(l, s)| ((l + 1) as f64, *s))
                    .collect(),
            ));
        }
        out.svg("phase_precision.svg", &plot)
    }
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepRun {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_t: Option<f64>,
    pub contrast: f64,
    pub true_phi: f64,
    pub steps: usize,
    pub trials: usize,
    pub reshaped: bool,
    pub alpha_errors: Vec<f64>,
    pub t_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub noise: NoiseSpec,
    pub grid: GridConfig,
}

impl Default for SweepRun {
    fn default() -> Self {
        Self {
            n: 200,
            chi_t: None,
            contrast: 1.0,
            true_phi: 0.3,
            steps: 50,
            trials: 20,
            reshaped: false,
            alpha_errors: vec![-0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1],
            t_errors: vec![-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6],
            seed: None,
            noise: NoiseSpec::default(),
            grid: GridConfig::default(),
        }
    }
}

impl Scenario for SweepRun {
    const NAME: &'static str = "sweep";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        Some(&mut self.trials)
    }

    fn materialize(&mut self) -> CliResult<()> {
        check(
            self.n >= 2,
            "n",
            format!("particle number must be >= 2, got {}", self.n),
        )?;
        if self.chi_t.is_none() {
            self.chi_t = Some(best_twist(self.n).0);
        }
        let ct = self.chi_t.unwrap_or_default();
        check(
            ct > 0.0 && ct.is_finite(),
            "chi_t",
            format!("must be positive, got {ct}"),
        )?;
        check(
            self.contrast > 0.0 && self.contrast <= 1.0,
            "contrast",
            "must lie in (0, 1]",
        )?;
        check(
            (-PI..PI).contains(&self.true_phi),
            "true_phi",
            "must lie in [-pi, pi)",
        )?;
        check(self.steps >= 1, "steps", "need at least one step")?;
        check(
            self.trials >= 2,
            "trials",
            format!("need at least 2, got {}", self.trials),
        )?;
        check(
            self.t_errors.iter().all(|t| *t > -1.0),
            "t_errors",
            "relative errors must exceed -1",
        )?;
        core_check(self.noise.validate(), "noise")?;
        core_check(self.grid.validate(), "grid")
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let chi_t = self.chi_t.unwrap_or_else(|| best_twist(self.n).0);
        let nominal = SqueezedStateModel::coherent(self.n, self.contrast)?;
        let mut session = SessionConfig::new(nominal, self.true_phi, self.steps, seed);
        session.noise = self.noise;
        session.reshaped = self.reshaped;
        session.grid = self.grid;
        let cfg = SweepConfig {
            n: self.n,
            chi_t,
            contrast: self.contrast,
            session,
            trials: self.trials,
        };
        let sql = 1.0 / (self.n as f64).sqrt();
        for (kind, label, values) in [
            (Imperfection::AlphaError, "alpha", &self.alpha_errors),
            (Imperfection::TError, "t", &self.t_errors),
        ] {
            let points = sweep_imperfection(&cfg, kind, values)?;
            out.csv(
                &format!("sweep_{label}.csv"),
                &["value", "xi", "precision", "mean_sigma", "err_std"],
                points
                    .iter()
                    .map(|p| row![p.value, p.xi, p.precision, p.mean_sigma, p.err_std]),
            )?;
            let plot = Plot::new(
                &format!("Precision vs {label} error"),
                &format!("{label} error"),
                "precision (rad)",
                false,
                true,
            )
            .with(Series::line(
                "median final sigma",
                points.iter().map(|p| (p.value, p.precision)).collect(),
            ))
            .with(Series::line(
                "1/sqrt(N)",
                points.iter().map(|p| (p.value, sql)).collect(),
            ));
            out.svg(&format!("sweep_{label}.svg"), &plot)?;
            if let Some(best) = points
                .iter()
                .min_by(|a, b| a.precision.total_cmp(&b.precision))
            {
                println!(
                    "{label}: best precision {:e} at error {}",
                    best.precision, best.value
                );
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- gravimetry

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GravimetryRun {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub contrast: f64,
    pub family: StateFamily,
    pub k_eff: f64,
    pub t_max: f64,
    pub a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_a: Option<usize>,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_prior: Option<f64>,
    pub trials: usize,
    pub reshaped: bool,
    pub depolarization: DepolarizationDraw,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub noise: NoiseSpec,
    pub grid: GridConfig,
}

impl Default for GravimetryRun {
    fn default() -> Self {
        Self {
            n: 6000,
            xi: None,
            xi_db: None,
            chi_t: None,
            alpha: None,
            contrast: 0.98,
            family: StateFamily::Ansatz,
            k_eff: K_EFF,
            t_max: 455e-6,
            a: 1.3,
            m_a: None,
            m: 50,
            true_g: None,
            g_prior: None,
            trials: 100,
            reshaped: true,
            depolarization: DepolarizationDraw::default(),
            seed: None,
            noise: NoiseSpec::default(),
            grid: GridConfig::default(),
        }
    }
}

impl GravimetryRun {
    fn keys(&self) -> StateKeys {
        StateKeys {
            n: self.n,
            xi: self.xi,
            xi_db: self.xi_db,
            chi_t: self.chi_t,
            alpha: self.alpha,
            contrast: self.contrast,
            family: self.family,
        }
    }
}

fn check_schedule(t_max: f64, a: f64, m_a: usize, m: usize) -> CliResult<()> {
    check(
        t_max > 0.0 && t_max.is_finite(),
        "t_max",
        format!("must be positive, got {t_max}"),
    )?;
    check(
        a > 1.0 && a.is_finite(),
        "a",
        format!("growth ratio must exceed 1, got {a}"),
    )?;
    check(m >= 1, "m", "need at least one step")?;
    check(
        (1..=m).contains(&m_a),
        "m_a",
        format!("must lie in 1..={m}, got {m_a}"),
    )
}

impl Scenario for GravimetryRun {
    const NAME: &'static str = "gravimetry";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        Some(&mut self.trials)
    }

    fn materialize(&mut self) -> CliResult<()> {
        default_state_xi(&mut self.xi, self.xi_db, self.chi_t, 0.5);
        self.keys().check()?;
        let Some(g) = self.true_g else {
            return Err(CliError::config(
                "`true_g`: required (true gravity value in m/s^2)",
            ));
        };
        check(g.is_finite(), "true_g", "must be finite")?;
        self.g_prior.get_or_insert(g);
        let m_a = *self.m_a.get_or_insert((self.m / 2).max(1));
        check_schedule(self.t_max, self.a, m_a, self.m)?;
        check(self.k_eff > 0.0, "k_eff", "must be positive")?;
        check(
            self.trials >= 2,
            "trials",
            format!("need at least 2, got {}", self.trials),
        )?;
        core_check(self.noise.validate(), "noise")?;
        core_check(self.grid.validate(), "grid")
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let true_g = self
            .true_g
            .ok_or_else(|| CliError::config("`true_g`: required"))?;
        let cfg = GravimetryConfig {
            state: self.keys().resolve()?,
            k_eff: self.k_eff,
            schedule: build_schedule(
                self.t_max,
                self.a,
                self.m_a.unwrap_or((self.m / 2).max(1)),
                self.m,
            )?,
            true_g,
            g_prior: self.g_prior.unwrap_or(true_g),
            noise: self.noise,
            reshaped: self.reshaped,
            grid: self.grid,
            depolarization: self.depolarization,
            trials: self.trials,
            seed,
        };
        let curve = run_gravimetry(&cfg)?;
        out.csv(
            "gravimetry.csv",
            &[
                "step",
                "t",
                "total_t",
                "dg_theory",
                "dg_batch",
                "dg_posterior",
                "g_est_mean",
            ],
            curve.points.iter().map(|p| {
                row![
                    p.step,
                    p.t,
                    p.total_t,
                    p.dg_theory,
                    p.dg_batch,
                    p.dg_posterior,
                    p.g_est_mean
                ]
            }),
        )?;
        let totals = curve.total_times();
        let plot = Plot::new(
            "Gravity precision",
            "total interrogation time (s)",
            "dg (m/s^2)",
            true,
            true,
        )
        .with(Series::line(
            "theory",
            totals.iter().copied().zip(curve.dg_theory()).collect(),
        ))
        .with(Series::markers(
            "Monte-Carlo",
            totals.iter().copied().zip(curve.dg_batch()).collect(),
        ));
        out.svg("gravimetry.svg", &plot)?;
        let last = curve.points.last().expect("non-empty schedule");
        println!(
            "final precision {:e} m/s^2 (theory {:e}), resets {}",
            last.dg_batch, last.dg_theory, curve.resets
        );
        let m_a = cfg.schedule.m_a;
        if m_a >= 5 {
            let slope = fit_scaling_exponent(&totals, &curve.dg_theory(), (1, m_a))?;
            println!("ramp-region theory slope {slope:.3}");
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- clock

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockRun {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub contrast: f64,
    pub family: StateFamily,
    pub t_max: f64,
    pub a: f64,
    pub m_a: usize,
    pub m: usize,
    pub cycles: usize,
    /// Independent runs whose Allan deviations are median-combined.
    pub runs: usize,
    pub carrier_hz: f64,
    pub dead_time: f64,
    pub reshaped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fractional-frequency noise.
    pub noise: NoiseSpec,
    pub grid: GridConfig,
}

impl Default for ClockRun {
    fn default() -> Self {
        Self {
            n: 30000,
            xi: None,
            xi_db: None,
            chi_t: None,
            alpha: None,
            contrast: 0.91,
            family: StateFamily::Ansatz,
            t_max: 0.141,
            a: 1.3,
            m_a: 6,
            m: 12,
            cycles: 400,
            runs: 20,
            carrier_hz: DEFAULT_CARRIER_HZ,
            dead_time: 0.0,
            reshaped: true,
            seed: None,
            noise: NoiseSpec::default(),
            grid: GridConfig::default(),
        }
    }
}

impl ClockRun {
    fn keys(&self) -> StateKeys {
        StateKeys {
            n: self.n,
            xi: self.xi,
            xi_db: self.xi_db,
            chi_t: self.chi_t,
            alpha: self.alpha,
            contrast: self.contrast,
            family: self.family,
        }
    }

    fn config(&self, state: SqueezedStateModel, seed: u64) -> CliResult<ClockConfig> {
        let mut cfg = ClockConfig::new(
            state,
            build_schedule(self.t_max, self.a, self.m_a, self.m)?,
            self.noise,
            self.cycles,
            seed,
        );
        cfg.carrier_hz = self.carrier_hz;
        cfg.dead_time = self.dead_time;
        cfg.reshaped = self.reshaped;
        cfg.grid = self.grid;
        Ok(cfg)
    }
}

impl Scenario for ClockRun {
    const NAME: &'static str = "clock";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        Some(&mut self.runs)
    }

    fn materialize(&mut self) -> CliResult<()> {
        if self.xi.is_none() && self.xi_db.is_none() && self.chi_t.is_none() {
            self.xi_db = Some(-5.1);
        }
        self.keys().check()?;
        check_schedule(self.t_max, self.a, self.m_a, self.m)?;
        check(
            self.cycles >= 32,
            "cycles",
            format!("need at least 32, got {}", self.cycles),
        )?;
        check(self.runs >= 1, "runs", "need at least one run")?;
        check(self.carrier_hz > 0.0, "carrier_hz", "must be positive")?;
        check(self.dead_time >= 0.0, "dead_time", "must be >= 0")?;
        core_check(self.noise.validate(), "noise")?;
        core_check(self.grid.validate(), "grid")
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let sss = self.keys().resolve()?;
        let scs = SqueezedStateModel::coherent(self.n, self.contrast)?;
        let ms = log_spaced_factors(self.cycles, 5);
        let results: Vec<_> = (0..self.runs as u64)
            .into_par_iter()
            .map(|r| -> CliResult<_> {
                let s = sub_seed(seed, r);
                let a = run_clock(&self.config(sss, s)?)?;
                let b = run_clock(&self.config(scs, s)?)?;
                let (da, db) = (a.adev(&ms)?, b.adev(&ms)?);
                Ok((a, b, da, db))
            })
            .collect::<CliResult<_>>()?;
        for (label, rec) in [("sss", &results[0].0), ("scs", &results[0].1)] {
            out.csv(
                &format!("clock_{label}.csv"),
                &[
                    "cycle",
                    "lo_offset",
                    "true_offset",
                    "estimate",
                    "residual",
                    "correction",
                    "flagged",
                ],
                (0..rec.len()).map(|k| {
                    let flagged = u8::from(rec.flagged.contains(&k));
                    row![
                        k,
                        rec.lo_offset[k],
                        rec.true_offset[k],
                        rec.estimate[k],
                        rec.residual[k],
                        rec.correction[k],
                        flagged
                    ]
                }),
            )?;
        }
        let tau0 = results[0].0.cycle_time;
        let median_at = |i: usize, scs: bool| {
            median(
                &results
                    .iter()
                    .map(|r| if scs { r.3[i].1 } else { r.2[i].1 })
                    .collect::<Vec<_>>(),
            )
        };
        let mut rows = Vec::with_capacity(ms.len());
        for (i, &m) in ms.iter().enumerate() {
            let tau = m as f64 * tau0;
            let mut var = 0.0;
            for (beta, s) in [
                (0, self.noise.sigma_w),
                (1, self.noise.sigma_f),
                (2, self.noise.sigma_r),
            ] {
                if s > 0.0 {
                    var += theoretical_adev(beta, s, tau, tau0)?.powi(2);
                }
            }
            rows.push((tau, median_at(i, false), median_at(i, true), var.sqrt()));
        }
        out.csv(
            "clock_adev.csv",
            &["tau", "adev_sss", "adev_scs", "adev_theory"],
            rows.iter().map(|r| row![r.0, r.1, r.2, r.3]),
        )?;
        let mut plot = Plot::new("Allan deviation", "tau (s)", "sigma_y", true, true)
            .with(Series::line(
                "SSS",
                rows.iter().map(|r| (r.0, r.1)).collect(),
            ))
            .with(Series::line(
                "SCS",
                rows.iter().map(|r| (r.0, r.2)).collect(),
            ));
        if self.noise.has_phase_noise() {
            plot = plot.with(Series::line(
                "oscillator model",
                rows.iter().map(|r| (r.0, r.3)).collect(),
            ));
        }
        out.svg("clock_adev.svg", &plot)?;
        let flagged: usize = results
            .iter()
            .map(|r| r.0.flagged.len() + r.1.flagged.len())
            .sum();
        println!(
            "tau0 {tau0} s, short-term ADEV SSS {:e} SCS {:e}, flagged cycles {flagged}",
            rows[0].1, rows[0].2
        );
        Ok(())
    }
}

// ---------------------------------------------------------------- fringe

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeRun {
    pub n: usize,
    pub contrast: f64,
    pub family: StateFamily,
    pub k_eff: f64,
    pub t: f64,
    pub points: usize,
    pub shots: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_center: Option<f64>,
    pub xis: Vec<f64>,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub noise: NoiseSpec,
}

impl Default for FringeRun {
    fn default() -> Self {
        Self {
            n: 6000,
            contrast: 0.98,
            family: StateFamily::Oat,
            k_eff: K_EFF,
            t: 455e-6,
            points: 50,
            shots: 1,
            true_g: None,
            g_center: None,
            xis: vec![1.0, 0.53, 0.15, 0.06],
            trials: 50,
            seed: None,
            noise: NoiseSpec::default(),
        }
    }
}

impl Scenario for FringeRun {
    const NAME: &'static str = "fringe";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        Some(&mut self.trials)
    }

    fn materialize(&mut self) -> CliResult<()> {
        let Some(g) = self.true_g else {
            return Err(CliError::config(
                "`true_g`: required (true gravity value in m/s^2)",
            ));
        };
        self.g_center.get_or_insert(g);
        check(self.n >= 2, "n", "particle number must be >= 2")?;
        check(
            self.contrast > 0.0 && self.contrast <= 1.0,
            "contrast",
            "must lie in (0, 1]",
        )?;
        check(self.k_eff > 0.0, "k_eff", "must be positive")?;
        check(self.t > 0.0, "t", "must be positive")?;
        check(self.points >= 4, "points", "need at least 4 scan points")?;
        check(self.shots >= 1, "shots", "need at least 1 shot per point")?;
        check(
            self.trials >= 10,
            "trials",
            format!("need at least 10, got {}", self.trials),
        )?;
        check(
            !self.xis.is_empty(),
            "xis",
            "need at least one squeezing level",
        )?;
        check(
            self.xis.iter().all(|x| *x > 0.0 && *x <= 1.0),
            "xis",
            "values must lie in (0, 1]",
        )?;
        core_check(self.noise.validate(), "noise")
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let true_g = self
            .true_g
            .ok_or_else(|| CliError::config("`true_g`: required"))?;
        let mut cfg = FringeConfig::new(self.n, self.contrast, self.t, true_g, seed);
        cfg.family = self.family;
        cfg.k_eff = self.k_eff;
        cfg.points = self.points;
        cfg.shots = self.shots;
        cfg.g_center = self.g_center.unwrap_or(true_g);
        cfg.noise = self.noise;
        cfg.trials = self.trials;
        cfg.validate()
            .map_err(|e| CliError::config(format!("`true_g`: {e}")))?;
        let results = precision_vs_squeezing(&cfg, &self.xis)?;
        let sql = cfg.sql();
        out.csv(
            "fringe_precision.csv",
            &[
                "xi",
                "precision_mean",
                "precision_std",
                "excluded",
                "bayes_mean",
                "bayes_std",
                "sql",
            ],
            results.iter().map(|p| {
                row![
                    p.xi,
                    p.precision_mean,
                    p.precision_std,
                    p.excluded,
                    p.bayes_mean,
                    p.bayes_std,
                    sql
                ]
            }),
        )?;
        let mut data = Vec::new();
        let mut shown = None;
        for &xi in &self.xis {
            let state = cfg.state(xi)?;
            match cfg.run_trial(&state, 0) {
                Ok((sample, fit)) => {
                    let model = |g: f64| {
                        fit.offset + fit.amplitude * (sample.kappa * (fit.g_est - g)).sin()
                    };
                    for (g, p) in sample.g.iter().zip(&sample.p_e) {
                        data.push(row![xi, g, p, model(*g)]);
                    }
                    shown = Some((xi, sample, fit));
                }
                Err(squeezed_bayes::Error::NonConvergence { .. }) => {
                    log::warn!("xi = {xi}: example fit did not converge")
                }
                Err(e) => return Err(e.into()),
            }
        }
        out.csv("fringe_data.csv", &["xi", "g", "p_e", "p_fit"], data)?;
        if let Some((xi, sample, fit)) = shown {
            let (lo, hi) = (sample.g[0], sample.g[sample.g.len() - 1]);
            let dense: Vec<(f64, f64)> = (0..=200)
                .map(|i| {
                    let g = lo + (hi - lo) * i as f64 / 200.0;
                    (
                        g,
                        fit.offset + fit.amplitude * (sample.kappa * (fit.g_est - g)).sin(),
                    )
                })
                .collect();
            let plot = Plot::new(
                &format!("Fringe scan, xi = {xi}"),
                "g (m/s^2)",
                "P_e",
                false,
                false,
            )
            .with(Series::markers(
                "simulated",
                sample
                    .g
                    .iter()
                    .copied()
                    .zip(sample.p_e.iter().copied())
                    .collect(),
            ))
            .with(Series::line("sine fit", dense));
            out.svg("fringe.svg", &plot)?;
        }
        for p in &results {
            println!(
                "xi {}: fringe fit {:e} +- {:e}, Bayesian {:e}, SQL {sql:e}",
                p.xi, p.precision_mean, p.precision_std, p.bayes_mean
            );
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- noise-check

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCheckRun {
    pub n: usize,
    pub sigma_w: f64,
    pub sigma_f: f64,
    pub sigma_r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseCheckRun {
    fn default() -> Self {
        Self {
            n: 1 << 16,
            sigma_w: 1.0,
            sigma_f: 1.0,
            sigma_r: 1.0,
            seed: None,
        }
    }
}

impl Scenario for NoiseCheckRun {
    const NAME: &'static str = "noise-check";

    fn seed_mut(&mut self) -> &mut Option<u64> {
        &mut self.seed
    }

    fn trials_mut(&mut self) -> Option<&mut usize> {
        None
    }

    fn materialize(&mut self) -> CliResult<()> {
        check(
            self.n >= 1024,
            "n",
            format!("need at least 1024 samples, got {}", self.n),
        )?;
        for (key, v) in [
            ("sigma_w", self.sigma_w),
            ("sigma_f", self.sigma_f),
            ("sigma_r", self.sigma_r),
        ] {
            check(
                v > 0.0 && v.is_finite(),
                key,
                format!("must be positive, got {v}"),
            )?;
        }
        Ok(())
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let n = self.n;
        let series = [
            white_noise(n, self.sigma_w, &mut stream(seed, 0, Lane::Auxiliary)),
            flicker_noise(n, self.sigma_f, &mut stream(seed, 1, Lane::Auxiliary))?,
            random_walk_noise(n, self.sigma_r, &mut stream(seed, 2, Lane::Auxiliary)),
        ];
        out.csv(
            "noise_series.csv",
            &["index", "white", "flicker", "random_walk"],
            (0..n).map(|k| {
                row![
                    k,
                    series[0].samples[k],
                    series[1].samples[k],
                    series[2].samples[k]
                ]
            }),
        )?;
        let ms: Vec<usize> = (0..=6)
            .map(|k| (4.0 * 10f64.powf(0.25 * k as f64)).round() as usize)
            .collect();
        let mut psd_rows = Vec::new();
        let mut plot = Plot::new("Periodograms", "frequency (1/sample)", "power", true, true);
        for s in &series {
            let spec = periodogram(s)?;
            let fit = fit_psd_slope(&spec)?;
            let adev = squeezed_bayes::clock::allan_deviation(&s.samples, 1.0, &ms)?;
            let (t, a): (Vec<f64>, Vec<f64>) = adev.into_iter().unzip();
            let name = s.color.name();
            println!(
                "{name}: psd_slope {:.4} adev_slope {:.4}",
                fit.beta,
                loglog_slope(&t, &a)?
            );
            for (f, p) in spec.frequency.iter().zip(&spec.power) {
                psd_rows.push(row![f, p, name]);
            }
            plot = plot.with(Series::line(
                name,
                spec.frequency
                    .iter()
                    .copied()
                    .zip(spec.power.iter().copied())
                    .collect(),
            ));
        }
        out.csv("noise_psd.csv", &["frequency", "power", "color"], psd_rows)?;
        out.svg("noise_psd.svg", &plot)
    }
}
