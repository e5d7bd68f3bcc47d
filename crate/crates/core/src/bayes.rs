//! Outcome likelihoods and grid posteriors.
//!
//! A measurement at working phase `p` returns the half-population difference
//! `m_z`, modelled as Gaussian with mean `(1 - p_d) C A sin(p)` and a spread
//! that is either the constant working-point value (ideal model) or the
//! phase-dependent, noise-broadened value (reshaped model).
//!
//! Posteriors live on uniform grids and are updated in the log domain.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::collective_spin::SqueezedStateModel;
use crate::error::{domain, Error, Result};
use crate::noise::expected_depolarization;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// How the reshaped spread evaluates the bare phase uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPhiForm {
    /// Working-point value `xi / sqrt(N)` at every phase.
    SmallAngle,
    /// Full `sqrt(A tan^2 + xi^2 / N)` of the probe state.
    #[default]
    PhaseDependent,
}

/// Per-shot noise realizations entering the outcome mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseDraws {
    /// Depolarization `p~_d` in `[0, 1]`.
    pub p_tilde: f64,
    /// Phase kick `sigma~_n` in radians.
    pub sigma_draw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodModel {
    pub state: SqueezedStateModel,
    /// Phase-noise strength (rad) folded into the reshaped spread.
    pub sigma_n: f64,
    pub reshaped: bool,
    pub sigma_floor: f64,
    /// Depolarization strength whose expected value scales the mean.
    pub p_d: f64,
    pub delta_phi: DeltaPhiForm,
}

impl LikelihoodModel {
    /// Constant-spread model at the working point.
    pub fn ideal(state: SqueezedStateModel) -> Self {
        Self {
            state,
            sigma_n: 0.0,
            reshaped: false,
            sigma_floor: Self::default_floor(&state),
            p_d: 0.0,
            delta_phi: DeltaPhiForm::default(),
        }
    }

    /// Phase-dependent model broadened by phase noise of strength `sigma_n`.
    pub fn reshaped(state: SqueezedStateModel, sigma_n: f64) -> Self {
        Self {
            sigma_n,
            reshaped: true,
            ..Self::ideal(state)
        }
    }

    /// `A xi / (10 sqrt(N))`.
    pub fn default_floor(state: &SqueezedStateModel) -> f64 {
        state.amplitude * state.working_point_uncertainty() / 10.0
    }

    pub fn with_depolarization(mut self, p_d: f64) -> Self {
        self.p_d = p_d;
        self
    }

    pub fn with_delta_phi(mut self, form: DeltaPhiForm) -> Self {
        self.delta_phi = form;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.sigma_floor = floor;
        self
    }

    pub fn with_sigma_n(mut self, sigma_n: f64) -> Self {
        self.sigma_n = sigma_n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_n >= 0.0) {
            return domain(format!("sigma_n must be >= 0, got {}", self.sigma_n));
        }
        if !(self.sigma_floor > 0.0) {
            return domain(format!("sigma_floor must be > 0, got {}", self.sigma_floor));
        }
        if !(self.p_d >= 0.0) {
            return domain(format!("p_d must be >= 0, got {}", self.p_d));
        }
        Ok(())
    }

    /// Full-fringe amplitude `C A` seen by the outcome mean.
    pub fn fringe_amplitude(&self) -> f64 {
        self.state.contrast * self.state.amplitude
    }

    /// Outcome mean for a given shot: `(1 - p~) C A sin(phi - Phi + sigma~)`.
    pub fn outcome_mean(&self, phi: f64, big_phi: f64, draws: NoiseDraws) -> f64 {
        (1.0 - draws.p_tilde) * self.fringe_amplitude() * (phi - big_phi + draws.sigma_draw).sin()
    }

    /// Mean assumed by the estimator, with depolarization at its expectation.
    pub fn expected_mean(&self, phi_tilde: f64) -> f64 {
        (1.0 - expected_depolarization(self.p_d)) * self.fringe_amplitude() * phi_tilde.sin()
    }

    /// Working-point spread `A xi / sqrt(N)`.
    pub fn ideal_sigma(&self) -> f64 {
        self.state.amplitude * self.state.working_point_uncertainty()
    }

    /// `sqrt(dphi^2 + sigma_n^2) |A cos(phi~)|`, floored at `sigma_floor`.
    pub fn reshaped_sigma(&self, phi_tilde: f64) -> f64 {
        let (s, c) = phi_tilde.sin_cos();
        let b = self.state.xi * self.state.xi / self.state.nf();
        let sn2 = self.sigma_n * self.sigma_n;
        // A^2 dphi^2 cos^2 written without tan so it stays finite at pi/2.
        let var = match self.delta_phi {
            DeltaPhiForm::SmallAngle => (b + sn2) * c * c,
            DeltaPhiForm::PhaseDependent => self.state.tan_coefficient * s * s + (b + sn2) * c * c,
        };
        (self.state.amplitude * var.sqrt()).max(self.sigma_floor)
    }

    /// Outcome spread used by the likelihood at working phase `phi~`.
    pub fn sigma(&self, phi_tilde: f64) -> f64 {
        if self.reshaped {
            self.reshaped_sigma(phi_tilde)
        } else {
            self.ideal_sigma()
        }
    }

    /// `ln L(m_z | phi~)`.
    pub fn log_likelihood(&self, m_z: f64, phi_tilde: f64) -> f64 {
        let sd = self.sigma(phi_tilde);
        let z = (m_z - self.expected_mean(phi_tilde)) / sd;
        -0.5 * z * z - sd.ln() - LN_SQRT_2PI
    }

    /// Gaussian density of `m_z` at each grid phase, auxiliary phase `Phi`.
    pub fn likelihood_curve(&self, m_z: f64, big_phi: f64, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|&phi| self.log_likelihood(m_z, phi - big_phi).exp())
            .collect()
    }
}

/// Geometry of the posterior support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Periodic `[lo, hi)` with `n` nodes spaced `(hi - lo) / n`.
    Circular,
    /// Closed `[lo, hi]` with `n` nodes spaced `(hi - lo) / (n - 1)`.
    Linear,
}

/// Grid resolution and zoom policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nodes: usize,
    /// Re-grid onto `mean +- zoom_half_width * std` once the support is wider
    /// than `zoom_trigger * std`. Zero disables zooming.
    pub zoom_trigger: f64,
    pub zoom_half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: 4096,
            zoom_trigger: 64.0,
            zoom_half_width: 16.0,
        }
    }
}

impl GridConfig {
    pub fn fixed(nodes: usize) -> Self {
        Self {
            nodes,
            zoom_trigger: 0.0,
            zoom_half_width: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return domain(format!("grid needs at least 16 nodes, got {}", self.nodes));
        }
        if self.zoom_trigger != 0.0
            && !(self.zoom_trigger > 2.0 * self.zoom_half_width && self.zoom_half_width > 0.0)
        {
            return domain("zoom_trigger must exceed twice zoom_half_width (or be 0)");
        }
        Ok(())
    }
}

/// Discretized density over a scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    kind: DomainKind,
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    density: Vec<f64>,
}

impl Posterior {
    pub fn uniform(kind: DomainKind, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return domain(format!(
                "posterior domain [{lo}, {hi}) is empty or infinite"
            ));
        }
        if nodes < 2 {
            return domain("posterior grid needs at least 2 nodes");
        }
        let grid = Self::nodes(kind, lo, hi, nodes);
        let density = vec![1.0 / (hi - lo); nodes];
        Ok(Self {
            kind,
            lo,
            hi,
            grid,
            density,
        })
    }

    /// Uniform density over the full circle `[-pi, pi)`.
    pub fn uniform_phase(nodes: usize) -> Result<Self> {
        Self::uniform(DomainKind::Circular, -PI, PI, nodes)
    }

    /// Builds a posterior from unnormalized non-negative weights.
    pub fn from_weights(kind: DomainKind, lo: f64, hi: f64, weights: Vec<f64>) -> Result<Self> {
        let mut p = Self::uniform(kind, lo, hi, weights.len())?;
        p.density = weights;
        p.normalize()?;
        Ok(p)
    }

    fn nodes(kind: DomainKind, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let dx = match kind {
            DomainKind::Circular => (hi - lo) / n as f64,
            DomainKind::Linear => (hi - lo) / (n - 1) as f64,
        };
        (0..n).map(|k| lo + k as f64 * dx).collect()
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Quadrature weights: periodic rectangle rule or trapezoid.
    fn weight(&self, k: usize) -> f64 {
        let dx = self.spacing();
        match self.kind {
            DomainKind::Circular => dx,
            DomainKind::Linear if k == 0 || k + 1 == self.grid.len() => 0.5 * dx,
            DomainKind::Linear => dx,
        }
    }

    /// Integral of the density.
    pub fn mass(&self) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(k, d)| d * self.weight(k))
            .sum()
    }

    fn normalize(&mut self) -> Result<()> {
        if self.density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::DegeneratePosterior);
        }
        let z = self.mass();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        self.density.iter_mut().for_each(|d| *d /= z);
        Ok(())
    }

    /// Multiplies by `exp(log_lik(x))` at each node and renormalizes. On
    /// failure the posterior is left unchanged.
    pub fn update_log(&mut self, log_lik: impl Fn(f64) -> f64) -> Result<()> {
        let logs: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(&x, &d)| {
                if d > 0.0 {
                    d.ln() + log_lik(x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let previous = std::mem::replace(
            &mut self.density,
            logs.iter().map(|l| (l - top).exp()).collect(),
        );
        if let Err(e) = self.normalize() {
            self.density = previous;
            return Err(e);
        }
        Ok(())
    }

    /// `(mean, std)`. Circular domains use wrapped deviations about the
    /// circular mean, and fall back to the circular mean when `std > 1`.
    pub fn stats(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::Linear => {
                let mean: f64 = self.integrate(|x| x);
                let var: f64 = self.integrate(|x| (x - mean) * (x - mean));
                (mean, var.max(0.0).sqrt())
            }
            DomainKind::Circular => {
                let period = self.hi - self.lo;
                let scale = TAU / period;
                let (s, c) = (
                    self.integrate(|x| (scale * x).sin()),
                    self.integrate(|x| (scale * x).cos()),
                );
                let centre = s.atan2(c) / scale;
                let dev = |x: f64| (x - centre + 0.5 * period).rem_euclid(period) - 0.5 * period;
                let shift = self.integrate(dev);
                let var = self.integrate(|x| (dev(x) - shift).powi(2));
                let std = var.max(0.0).sqrt();
                let mean = if std > 1.0 { centre } else { centre + shift };
                (self.wrap_into(mean), std)
            }
        }
    }

    fn wrap_into(&self, x: f64) -> f64 {
        self.lo + (x - self.lo).rem_euclid(self.hi - self.lo)
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.density)
            .enumerate()
            .map(|(k, (&x, &d))| f(x) * d * self.weight(k))
            .sum()
    }

    /// Re-grids onto a narrower linear window around the mass when the
    /// current support is much wider than the posterior. Returns whether a
    /// zoom happened.
    pub fn refocus(&mut self, grid: &GridConfig) -> bool {
        if grid.zoom_trigger <= 0.0 {
            return false;
        }
        let (mean, std) = self.stats();
        if !(std > 0.0) || (self.hi - self.lo) <= grid.zoom_trigger * std {
            return false;
        }
        let half = grid.zoom_half_width * std;
        let (lo, hi) = match self.kind {
            DomainKind::Circular => (mean - half, mean + half),
            DomainKind::Linear => ((mean - half).max(self.lo), (mean + half).min(self.hi)),
        };
        let nodes = Self::nodes(DomainKind::Linear, lo, hi, grid.nodes);
        let density: Vec<f64> = nodes.iter().map(|&x| self.interpolate(x)).collect();
        let next = Self {
            kind: DomainKind::Linear,
            lo,
            hi,
            grid: nodes,
            density,
        };
        let mut next = next;
        if next.normalize().is_err() {
            return false;
        }
        *self = next;
        true
    }

    /// Piecewise-linear density at `x` (periodic on circular domains).
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.grid.len();
        let dx = self.spacing();
        match self.kind {
            DomainKind::Circular => {
                let t = (x - self.lo).rem_euclid(self.hi - self.lo) / dx;
                let i = (t.floor() as usize).min(n - 1);
                let f = t - i as f64;
                self.density[i] * (1.0 - f) + self.density[(i + 1) % n] * f
            }
            DomainKind::Linear => {
                if x < self.lo || x > self.hi {
                    return 0.0;
                }
                let t = (x - self.lo) / dx;
                let i = (t.floor() as usize).min(n - 2);
                let f = (t - i as f64).clamp(0.0, 1.0);
                self.density[i] * (1.0 - f) + self.density[i + 1] * f
            }
        }
    }
}

/// Pointwise product of a prior with linear likelihood weights.
pub fn bayes_update(prior: &Posterior, weights: &[f64]) -> Result<Posterior> {
    if weights.len() != prior.grid.len() {
        return Err(Error::Length {
            needed: prior.grid.len(),
            got: weights.len(),
        });
    }
    let mut post = prior.clone();
    post.density = prior
        .density
        .iter()
        .zip(weights)
        .map(|(p, w)| p * w)
        .collect();
    post.normalize()?;
    Ok(post)
}

pub fn posterior_stats(p: &Posterior) -> (f64, f64) {
    p.stats()
}

/// Large-`l` posterior width `xi / (sqrt(N) sqrt(l))`.
pub fn analytic_posterior_std(xi: f64, n: usize, l: usize) -> f64 {
    xi / ((n as f64).sqrt() * (l as f64).sqrt())
}

/// Mean and width of the product of two Gaussians.
pub fn gaussian_product(mu1: f64, s1: f64, mu2: f64, s2: f64) -> (f64, f64) {
    let (w1, w2) = (1.0 / (s1 * s1), 1.0 / (s2 * s2));
    ((w1 * mu1 + w2 * mu2) / (w1 + w2), (w1 + w2).sqrt().recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective_spin::{OatParams, StateFamily};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn squeezed() -> SqueezedStateModel {
        SqueezedStateModel::from_xi(200, 0.15, 1.0, StateFamily::Ansatz).unwrap()
    }

    fn gaussian(x: f64, mu: f64, s: f64) -> f64 {
        (-0.5 * ((x - mu) / s).powi(2)).exp()
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), -PI);
        assert_relative_eq!(wrap_phase(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_relative_eq!(wrap_phase(-0.2), -0.2);
    }

    #[test]
    fn outcome_mean_cases() {
        let m = LikelihoodModel::ideal(squeezed());
        assert_eq!(m.outcome_mean(0.4, 0.4, NoiseDraws::default()), 0.0);
        let full = NoiseDraws {
            p_tilde: 1.0,
            sigma_draw: 0.0,
        };
        for phi in [-2.0, 0.3, 1.1] {
            assert_eq!(m.outcome_mean(phi, 0.0, full), 0.0);
        }
        let v = m.outcome_mean(0.1, 0.0, NoiseDraws::default());
        assert_relative_eq!(v, m.state.amplitude * 0.1f64.sin(), max_relative = 1e-15);
    }

    #[test]
    fn outcome_mean_matches_oat_moments() {
        let p = OatParams::optimal(200, 0.02).unwrap();
        let state = SqueezedStateModel::from_oat(&p, 1.0).unwrap();
        let m = LikelihoodModel::ideal(state);
        // The readout flips the sign convention of <Jz>.
        let expected = -crate::collective_spin::mean_jz(&p, 0.1);
        assert_relative_eq!(
            m.outcome_mean(0.1, 0.0, NoiseDraws::default()),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn reshaped_sigma_cases() {
        let s = squeezed();
        let ideal = LikelihoodModel::ideal(s);
        let base = s.amplitude * s.xi / s.nf().sqrt();
        assert_relative_eq!(
            LikelihoodModel::reshaped(s, 0.0).reshaped_sigma(0.0),
            base,
            max_relative = 1e-14
        );
        assert_relative_eq!(ideal.sigma(1.2), base, max_relative = 1e-14);
        let r = LikelihoodModel::reshaped(s, 0.03);
        let expected = s.amplitude * (s.xi * s.xi / 200.0 + 9e-4).sqrt();
        assert_relative_eq!(r.reshaped_sigma(0.0), expected, max_relative = 1e-14);
        let small = r.with_delta_phi(DeltaPhiForm::SmallAngle);
        assert_eq!(small.reshaped_sigma(FRAC_PI_2), small.sigma_floor);
        assert!(r.reshaped_sigma(FRAC_PI_2) >= r.sigma_floor);
    }

    #[test]
    fn dual_and_single_maxima() {
        let m = LikelihoodModel::ideal(squeezed());
        let post = Posterior::uniform_phase(4096).unwrap();
        let grid = post.grid();
        let curve = m.likelihood_curve(0.0, 0.0, grid);
        let top = curve.iter().cloned().fold(0.0, f64::max);
        let peaks: Vec<f64> = grid
            .iter()
            .zip(&curve)
            .filter(|(_, &c)| c > 0.999 * top)
            .map(|(&x, _)| x)
            .collect();
        assert!(peaks.iter().any(|x| x.abs() < 1e-2));
        assert!(peaks.iter().any(|x| (x.abs() - PI).abs() < 1e-2));

        let curve = m.likelihood_curve(m.fringe_amplitude(), 0.0, grid);
        let k = curve
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((grid[k] - FRAC_PI_2).abs() < 2e-3);
    }

    #[test]
    fn coherent_curve_is_textbook_ramsey_gaussian() {
        let s = SqueezedStateModel::coherent(100, 1.0).unwrap();
        let m = LikelihoodModel::ideal(s);
        let sd = 50.0 / 10.0;
        for phi in [-2.0, -0.5, 0.0, 0.7, 2.9] {
            let expected = (-0.5 * ((12.0 - 50.0 * (phi - 0.2f64).sin()) / sd).powi(2)).exp()
                / (sd * (2.0 * PI).sqrt());
            assert_relative_eq!(
                m.likelihood_curve(12.0, 0.2, &[phi])[0],
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn flat_prior_gives_likelihood_shape() {
        let prior = Posterior::uniform_phase(512).unwrap();
        let w: Vec<f64> = prior
            .grid()
            .iter()
            .map(|&x| gaussian(x, 0.3, 0.4))
            .collect();
        let post = bayes_update(&prior, &w).unwrap();
        let ratio = post.density()[100] / post.density()[300];
        assert_relative_eq!(ratio, w[100] / w[300], max_relative = 1e-12);
        assert_relative_eq!(post.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_product_on_grid() {
        let prior = Posterior::uniform(DomainKind::Linear, -5.0, 5.0, 20_001).unwrap();
        let w1: Vec<f64> = prior
            .grid()
            .iter()
            .map(|&x| gaussian(x, -0.4, 0.5))
            .collect();
        let w2: Vec<f64> = prior
            .grid()
            .iter()
            .map(|&x| gaussian(x, 0.6, 0.3))
            .collect();
        let post = bayes_update(&bayes_update(&prior, &w1).unwrap(), &w2).unwrap();
        let (m, s) = post.stats();
        let (me, se) = gaussian_product(-0.4, 0.5, 0.6, 0.3);
        assert_relative_eq!(s, se, max_relative = 1e-6);
        assert_relative_eq!(m, me, epsilon = 1e-6);
    }

    #[test]
    fn repeated_likelihood_narrows_as_root_l() {
        let mut post = Posterior::uniform_phase(4096).unwrap();
        let mut widths = Vec::new();
        for _ in 0..16 {
            post.update_log(|x| -0.5 * (x / 0.3).powi(2)).unwrap();
            widths.push(post.stats().1);
        }
        assert_relative_eq!(widths[3] / widths[15], 2.0, max_relative = 0.02);
    }

    #[test]
    fn uniform_and_delta_stats() {
        let p = Posterior::uniform_phase(4096).unwrap();
        assert_relative_eq!(p.stats().1, PI / 3f64.sqrt(), epsilon = 1e-3);
        let mut w = vec![0.0; 1024];
        w[700] = 1.0;
        let p = Posterior::from_weights(DomainKind::Circular, -PI, PI, w).unwrap();
        let (m, s) = p.stats();
        assert!(s < 1e-12);
        assert_relative_eq!(m, p.grid()[700], epsilon = 1e-12);
    }

    #[test]
    fn circular_mean_handles_wraparound() {
        let p = Posterior::uniform_phase(4096).unwrap();
        let w: Vec<f64> = p
            .grid()
            .iter()
            .map(|&x| gaussian(wrap_phase(x - 3.0), 0.0, 0.2))
            .collect();
        let post = bayes_update(&p, &w).unwrap();
        let (m, s) = post.stats();
        assert!((m - 3.0).abs() < 1e-6, "{m}");
        assert_relative_eq!(s, 0.2, max_relative = 1e-4);
    }

    #[test]
    fn degenerate_update_reports_and_preserves() {
        let mut w = vec![0.0; 64];
        w[3] = 1.0;
        let p = Posterior::from_weights(DomainKind::Circular, -PI, PI, w).unwrap();
        let mut zeros = vec![0.0; 64];
        zeros[40] = 1.0;
        assert_eq!(bayes_update(&p, &zeros), Err(Error::DegeneratePosterior));
        let mut q = p.clone();
        assert!(q.update_log(|_| f64::NEG_INFINITY).is_err());
        assert_eq!(q, p);
    }

    #[test]
    fn refocus_preserves_moments() {
        let mut p = Posterior::uniform_phase(4096).unwrap();
        p.update_log(|x| -0.5 * ((x - 1.0) / 0.05).powi(2)).unwrap();
        let (m0, s0) = p.stats();
        assert!(p.refocus(&GridConfig::default()));
        assert_eq!(p.kind(), DomainKind::Linear);
        let (m1, s1) = p.stats();
        assert_relative_eq!(m0, m1, epsilon = 1e-6);
        assert_relative_eq!(s0, s1, max_relative = 1e-3);
        assert!(!p.refocus(&GridConfig::default()));
    }

    #[test]
    fn analytic_width() {
        assert_relative_eq!(analytic_posterior_std(1.0, 200, 1), 1.0 / 200f64.sqrt());
        assert_relative_eq!(
            analytic_posterior_std(0.15, 200, 50),
            1.5e-3,
            epsilon = 1e-15
        );
        assert_eq!(
            analytic_posterior_std(0.3, 50, 3) / analytic_posterior_std(0.3, 50, 12),
            2.0
        );
    }
}
