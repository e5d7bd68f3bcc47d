//! Fringe-fitting baseline: scan the chirp across one fringe at fixed
//! interrogation time, fit a sinusoid, read `g` off its phase.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{GridConfig, NoiseDraws};
use crate::collective_spin::{SqueezedStateModel, StateFamily};
use crate::error::{domain, Error, Result};
use crate::gravimetry::{build_schedule, run_gravimetry, GravimetryConfig, K_EFF};
use crate::noise::{sample_depolarization, NoiseSpec};
use crate::rng::{stream, Lane, Rng};
use crate::session::{simulate_measurement, DepolarizationDraw};
use crate::stats;

const MAX_ITERATIONS: usize = 200;
const COARSE_STEPS: usize = 72;

/// Scanned fringe: excited-state probability against chirp value `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeSample {
    pub g: Vec<f64>,
    pub p_e: Vec<f64>,
    pub t: f64,
    pub shots: usize,
    /// Phase per unit `g`, `k_eff T^2`.
    pub kappa: f64,
}

/// `points` chirp values evenly covering one fringe period around `center`.
pub fn fringe_grid(center: f64, kappa: f64, points: usize) -> Vec<f64> {
    let period = TAU / kappa;
    (0..points)
        .map(|i| center - 0.5 * period + (i as f64 + 0.5) * period / points as f64)
        .collect()
}

fn check_coverage(g_grid: &[f64], kappa: f64) -> Result<()> {
    let n = g_grid.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "fringe scan needs at least 2 points, got {n}"
        )));
    }
    let lo = g_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let covered = (hi - lo) * n as f64 / (n - 1) as f64;
    if covered * kappa < TAU * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "scan covers {:.3} of one fringe",
            covered * kappa / TAU
        )));
    }
    Ok(())
}

/// Simulates the scan: each point is the average of `shots` outcomes at
/// working phase `kappa (g_true - g)`, mapped to `P_e = 1/2 + m_z / N`.
/// `noise` is in the units of `g` and is drawn once per shot.
#[allow(clippy::too_many_arguments)]
pub fn simulate_fringe<R: Rng + ?Sized>(
    state: &SqueezedStateModel,
    kappa: f64,
    t: f64,
    g_true: f64,
    g_grid: &[f64],
    shots: usize,
    noise: &NoiseSpec,
    proj: &mut R,
    kicks: &mut R,
) -> Result<FringeSample> {
    check_coverage(g_grid, kappa)?;
    if shots == 0 {
        return domain("shots per point must be positive");
    }
    let total = g_grid.len() * shots;
    let series = noise.sample_series(total, kicks);
    let nf = state.nf();
    let mut k = 0;
    let p_e = g_grid
        .iter()
        .map(|&g| {
            let mut acc = 0.0;
            for _ in 0..shots {
                let draws = NoiseDraws {
                    p_tilde: sample_depolarization(noise.p_d, kicks),
                    sigma_draw: kappa * series[k],
                };
                k += 1;
                acc += simulate_measurement(state, kappa * (g_true - g), 0.0, draws, proj);
            }
            (0.5 + acc / shots as f64 / nf).clamp(0.0, 1.0)
        })
        .collect();
    Ok(FringeSample {
        g: g_grid.to_vec(),
        p_e,
        t,
        shots,
        kappa,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub g_est: f64,
    /// Standard error of `g_est` from the fit covariance.
    pub dg_fit: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub iterations: usize,
}

/// Least-squares fit of `b + A sin(kappa (g0 - g))`, `A > 0`, with `g0`
/// returned within half a fringe of `init`.
pub fn fit_sine(sample: &FringeSample, init: f64) -> Result<SineFit> {
    let n = sample.g.len();
    if n < 4 || sample.p_e.len() != n {
        return Err(Error::InsufficientData(format!(
            "sine fit needs at least 4 points, got {n}"
        )));
    }
    let kappa = sample.kappa;
    let x: Vec<f64> = sample.g.iter().map(|g| kappa * g).collect();
    let y = &sample.p_e;

    // Coarse search over the fringe phase; amplitude and offset are linear.
    let p0 = kappa * init;
    let mut best = (f64::INFINITY, 0.0, 0.0, p0);
    for j in 0..COARSE_STEPS {
        let p = p0 - PI + TAU * j as f64 / COARSE_STEPS as f64;
        if let Some((a, b, sse)) = linear_amp_offset(&x, y, p) {
            if sse < best.0 {
                best = (sse, a, b, p);
            }
        }
    }
    let (_, mut a, mut b, mut p) = best;
    if !a.is_finite() {
        return Err(Error::NonConvergence { iterations: 0 });
    }

    let sse_of = |a: f64, b: f64, p: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(xi, yi)| (yi - b - a * (p - xi).sin()).powi(2))
            .sum()
    };
    let normal_eq = |a: f64, b: f64, p: f64| -> (Matrix3<f64>, Vector3<f64>) {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (xi, yi) in x.iter().zip(y) {
            let (s, c) = (p - xi).sin_cos();
            let row = Vector3::new(s, 1.0, a * c);
            let r = yi - b - a * s;
            jtj += row * row.transpose();
            jtr += row * r;
        }
        (jtj, jtr)
    };

    let mut sse = sse_of(a, b, p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = sse == 0.0;
    while !converged {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations });
        }
        iterations += 1;
        let (jtj, jtr) = normal_eq(a, b, p);
        let mut damped = jtj;
        for d in 0..3 {
            damped[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let (na, nb, np) = (a + step[0], b + step[1], p + step[2]);
        let nsse = sse_of(na, nb, np);
        if nsse <= sse {
            let tiny = step.norm() <= 1e-13 * (1.0 + a.abs() + b.abs() + p.abs());
            let flat = sse - nsse <= 1e-15 * sse;
            a = na;
            b = nb;
            p = np;
            sse = nsse;
            lambda = (lambda / 10.0).max(1e-12);
            converged = tiny || flat || sse == 0.0;
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // No descent direction left: at a minimum to working precision.
                converged = true;
            }
        }
    }

    if a < 0.0 {
        a = -a;
        p += PI;
    }
    p = p0 + (p - p0 + PI).rem_euclid(TAU) - PI;

    let (jtj, _) = normal_eq(a, b, p);
    let dof = (n - 3) as f64;
    let var_p = jtj
        .try_inverse()
        .map(|inv| inv[(2, 2)] * sse / dof)
        .unwrap_or(f64::INFINITY);
    Ok(SineFit {
        g_est: p / kappa,
        dg_fit: var_p.max(0.0).sqrt() / kappa,
        amplitude: a,
        offset: b,
        iterations,
    })
}

/// Best amplitude and offset for fixed phase `p`; `None` if degenerate.
fn linear_amp_offset(x: &[f64], y: &[f64], p: f64) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    let (mut ss, mut s, mut sy, mut y1, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let v = (p - xi).sin();
        ss += v * v;
        s += v;
        sy += v * yi;
        y1 += yi;
        yy += yi * yi;
    }
    let det = ss * n - s * s;
    if det.abs() < 1e-12 * n * n {
        return None;
    }
    let a = (n * sy - s * y1) / det;
    let b = (ss * y1 - s * sy) / det;
    let sse = yy - a * sy - b * y1;
    Some((a, b, sse))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeConfig {
    pub n: usize,
    pub contrast: f64,
    pub family: StateFamily,
    pub k_eff: f64,
    pub t: f64,
    pub points: usize,
    pub shots: usize,
    pub g_true: f64,
    /// Centre of the scanned fringe and of the Bayesian prior.
    pub g_center: f64,
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
}

impl FringeConfig {
    pub fn new(n: usize, contrast: f64, t: f64, g_true: f64, seed: u64) -> Self {
        Self {
            n,
            contrast,
            family: StateFamily::Oat,
            k_eff: K_EFF,
            t,
            points: 50,
            shots: 1,
            g_true,
            g_center: g_true,
            noise: NoiseSpec::default(),
            trials: 50,
            seed,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.k_eff * self.t * self.t
    }

    pub fn state(&self, xi: f64) -> Result<SqueezedStateModel> {
        SqueezedStateModel::from_xi(self.n, xi, self.contrast, self.family)
    }

    pub fn grid(&self) -> Vec<f64> {
        fringe_grid(self.g_center, self.kappa(), self.points)
    }

    /// Standard quantum limit for the whole scan,
    /// `1 / (C sqrt(N) kappa sqrt(points * shots))`.
    pub fn sql(&self) -> f64 {
        1.0 / (self.contrast
            * (self.n as f64).sqrt()
            * self.kappa()
            * ((self.points * self.shots) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 10 {
            return domain(format!("need at least 10 trials, got {}", self.trials));
        }
        if !(self.k_eff > 0.0 && self.t > 0.0) {
            return domain("k_eff and T must be positive");
        }
        if self.points < 4 || self.shots == 0 {
            return domain("need at least 4 scan points and 1 shot per point");
        }
        let half = PI / self.kappa();
        if (self.g_true - self.g_center).abs() >= half {
            return Err(Error::DynamicRange {
                value: self.g_true,
                lo: self.g_center - half,
                hi: self.g_center + half,
            });
        }
        self.noise.validate()
    }

    /// Scan and fit for trial `index`.
    pub fn run_trial(
        &self,
        state: &SqueezedStateModel,
        index: u64,
    ) -> Result<(FringeSample, SineFit)> {
        let mut proj = stream(self.seed, index, Lane::Projection);
        let mut kicks = stream(self.seed, index, Lane::PhaseNoise);
        let sample = simulate_fringe(
            state,
            self.kappa(),
            self.t,
            self.g_true,
            &self.grid(),
            self.shots,
            &self.noise,
            &mut proj,
            &mut kicks,
        )?;
        let fit = fit_sine(&sample, self.g_center)?;
        Ok((sample, fit))
    }

    /// Bayesian run with the same number of shots, all at `T`, and a prior
    /// over the scanned fringe.
    pub fn matched_bayesian(&self, state: &SqueezedStateModel) -> Result<Vec<f64>> {
        let shots = self.points * self.shots;
        let cfg = GravimetryConfig {
            state: *state,
            k_eff: self.k_eff,
            schedule: build_schedule(self.t, 2.0, 1, shots)?,
            true_g: self.g_true,
            g_prior: self.g_center,
            noise: self.noise,
            reshaped: true,
            grid: GridConfig::default(),
            depolarization: DepolarizationDraw::PerStep,
            trials: self.trials,
            seed: self.seed,
        };
        Ok(run_gravimetry(&cfg)?.final_estimates)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePrecision {
    pub xi: f64,
    /// Mean of `|g_est - g_true|` over fitted trials.
    pub precision_mean: f64,
    pub precision_std: f64,
    pub excluded: usize,
    pub bayes_mean: f64,
    pub bayes_std: f64,
}

fn abs_error_stats(est: &[f64], truth: f64) -> (f64, f64) {
    let err: Vec<f64> = est.iter().map(|g| (g - truth).abs()).collect();
    (stats::mean(&err), stats::std_sample(&err))
}

/// Fringe-fit and matched Bayesian precision for each squeezing level.
pub fn precision_vs_squeezing(cfg: &FringeConfig, xis: &[f64]) -> Result<Vec<FringePrecision>> {
    cfg.validate()?;
    xis.iter()
        .map(|&xi| {
            let state = cfg.state(xi)?;
            let fits: Vec<Result<(FringeSample, SineFit)>> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|i| cfg.run_trial(&state, i))
                .collect();
            let mut est = Vec::with_capacity(cfg.trials);
            let mut excluded = 0;
            for r in fits {
                match r {
                    Ok((_, fit)) => est.push(fit.g_est),
                    Err(Error::NonConvergence { .. }) => excluded += 1,
                    Err(e) => return Err(e),
                }
            }
            if excluded > 0 {
                log::warn!("xi = {xi}: {excluded} fits did not converge");
            }
            if est.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "xi = {xi}: fewer than 2 converged fits"
                )));
            }
            let (precision_mean, precision_std) = abs_error_stats(&est, cfg.g_true);
            let (bayes_mean, bayes_std) =
                abs_error_stats(&cfg.matched_bayesian(&state)?, cfg.g_true);
            Ok(FringePrecision {
                xi,
                precision_mean,
                precision_std,
                excluded,
                bayes_mean,
                bayes_std,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const G: f64 = 9.8;

    fn cfg() -> FringeConfig {
        FringeConfig::new(6000, 0.98, 455e-6, G, 3)
    }

    fn synthetic(kappa: f64, g0: f64, a: f64, b: f64) -> FringeSample {
        let g = fringe_grid(G, kappa, 40);
        let p_e = g.iter().map(|x| b + a * (kappa * (g0 - x)).sin()).collect();
        FringeSample {
            g,
            p_e,
            t: 455e-6,
            shots: 1,
            kappa,
        }
    }

    #[test]
    fn exact_recovery() {
        let kappa = cfg().kappa();
        let g0 = G + 0.37 / kappa;
        let fit = fit_sine(&synthetic(kappa, g0, 0.45, 0.52), G).unwrap();
        assert_relative_eq!(fit.g_est, g0, max_relative = 1e-9);
        assert_relative_eq!(fit.amplitude, 0.45, max_relative = 1e-9);
        assert_relative_eq!(fit.offset, 0.52, max_relative = 1e-9);
        assert!(fit.dg_fit < 1e-9);
    }

    #[test]
    fn negative_amplitude_normalized() {
        let kappa = cfg().kappa();
        let g0 = G - 1.0 / kappa;
        // -A sin(u) = A sin(u + pi): the returned phase is shifted by half a fringe.
        let fit = fit_sine(&synthetic(kappa, g0, -0.3, 0.5), G).unwrap();
        assert!(fit.amplitude > 0.0);
        assert_relative_eq!(fit.g_est, g0 + PI / kappa, max_relative = 1e-9);
    }

    #[test]
    fn coherent_mean_curve() {
        let c = cfg();
        let state = SqueezedStateModel::coherent(c.n, c.contrast).unwrap();
        let kappa = c.kappa();
        let grid = c.grid();
        let shots = 2000;
        let mut p = stream(1, 0, Lane::Projection);
        let mut k = stream(1, 0, Lane::PhaseNoise);
        let s = simulate_fringe(
            &state,
            kappa,
            c.t,
            G,
            &grid,
            shots,
            &NoiseSpec::default(),
            &mut p,
            &mut k,
        )
        .unwrap();
        for (g, pe) in s.g.iter().zip(&s.p_e) {
            let expected = 0.5 * (1.0 + c.contrast * (kappa * (G - g)).sin());
            assert!((pe - expected).abs() < 5e-4, "{pe} vs {expected}");
        }
    }

    #[test]
    fn squeezed_scatter_grows_off_working_point() {
        let c = cfg();
        let state = c.state(0.06).unwrap();
        let kappa = c.kappa();
        let at = |phi: f64| G - phi / kappa;
        let var_at = |phi: f64| {
            let grid: Vec<f64> = (0..400)
                .map(|i| at(phi) + (i % 2) as f64 * TAU / kappa)
                .collect();
            let mut p = stream(2, phi.to_bits(), Lane::Projection);
            let mut k = stream(2, 0, Lane::PhaseNoise);
            let s = simulate_fringe(
                &state,
                kappa,
                c.t,
                G,
                &grid,
                1,
                &NoiseSpec::default(),
                &mut p,
                &mut k,
            )
            .unwrap();
            stats::std_pop(&s.p_e).powi(2)
        };
        let v0 = var_at(0.0);
        assert!(var_at(PI / 4.0) > 10.0 * v0);
        assert!(var_at(-PI / 4.0) > 10.0 * v0);
    }

    #[test]
    fn coverage_required() {
        let c = cfg();
        let state = SqueezedStateModel::coherent(c.n, c.contrast).unwrap();
        let mut p = stream(1, 0, Lane::Projection);
        let mut k = stream(1, 0, Lane::PhaseNoise);
        let noise = NoiseSpec::default();
        assert!(
            simulate_fringe(&state, c.kappa(), c.t, G, &[G], 1, &noise, &mut p, &mut k).is_err()
        );
        let half = fringe_grid(G, 2.0 * c.kappa(), 20);
        assert!(
            simulate_fringe(&state, c.kappa(), c.t, G, &half, 1, &noise, &mut p, &mut k).is_err()
        );
    }

    #[test]
    fn coherent_fit_near_sql() {
        let mut c = cfg();
        c.trials = 40;
        let state = SqueezedStateModel::coherent(c.n, c.contrast).unwrap();
        let est: Vec<f64> = (0..40)
            .map(|i| c.run_trial(&state, i).unwrap().1.g_est)
            .collect();
        let (mean_abs, _) = abs_error_stats(&est, G);
        let ratio = mean_abs / c.sql();
        assert!((0.67..1.5).contains(&ratio), "{ratio}");
    }
}
