//! Adaptive estimation of a scalar parameter `gamma` through a sequence of
//! measurements whose working phase is `gain_l * (gamma - gamma_c)`, with the
//! control `gamma_c` set to the running estimate.

use crate::bayes::{DomainKind, GridConfig, LikelihoodModel, NoiseDraws, Posterior};
use crate::collective_spin::SqueezedStateModel;
use crate::error::{domain, Error, Result};
use crate::noise::sample_depolarization;
use crate::rng::Rng;
use crate::session::{absorb, simulate_measurement, DepolarizationDraw};

/// Static description of one estimation sequence.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub state: SqueezedStateModel,
    /// Likelihood template; its `sigma_n` is overwritten per step.
    pub likelihood: LikelihoodModel,
    /// Phase per unit parameter at each step.
    pub gains: Vec<f64>,
    /// Noise strength in parameter units, folded into the reshaped spread as
    /// `gain * sigma_param`.
    pub sigma_param: f64,
    /// Prior support `[lo, hi]`.
    pub window: (f64, f64),
    pub grid: GridConfig,
    pub p_d: f64,
    pub depolarization: DepolarizationDraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutcome {
    pub controls: Vec<f64>,
    pub m_z: Vec<f64>,
    pub estimates: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub resets: usize,
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.gains.is_empty() {
            return domain("sequence needs at least one step");
        }
        if self.gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return domain("sequence gains must be positive and finite");
        }
        if !(self.sigma_param >= 0.0) {
            return domain("sigma_param must be >= 0");
        }
        Ok(())
    }

    /// Checks that `value` lies in the prior window.
    pub fn check_range(&self, value: f64) -> Result<()> {
        let (lo, hi) = self.window;
        if !(value >= lo && value < hi) {
            return Err(Error::DynamicRange { value, lo, hi });
        }
        Ok(())
    }

    /// Runs the sequence against `truth`; `kicks[l]` perturbs the parameter
    /// seen by step `l` (same units as `truth`).
    pub fn run<R: Rng + ?Sized>(
        &self,
        truth: f64,
        kicks: &[f64],
        proj: &mut R,
        depol: &mut R,
    ) -> Result<SequenceOutcome> {
        self.validate()?;
        self.check_range(truth)?;
        let m = self.gains.len();
        if kicks.len() < m {
            return Err(Error::Length {
                needed: m,
                got: kicks.len(),
            });
        }
        let initial = Posterior::uniform(
            DomainKind::Linear,
            self.window.0,
            self.window.1,
            self.grid.nodes,
        )?;
        let mut post = initial.clone();
        let trial_p = sample_depolarization(self.p_d, depol);
        let mut out = SequenceOutcome {
            controls: Vec::with_capacity(m),
            m_z: Vec::with_capacity(m),
            estimates: Vec::with_capacity(m),
            sigmas: Vec::with_capacity(m),
            resets: 0,
        };
        let mut control = 0.5 * (self.window.0 + self.window.1);
        for (&gain, &kick) in self.gains.iter().zip(kicks) {
            let p_tilde = match self.depolarization {
                DepolarizationDraw::PerStep => sample_depolarization(self.p_d, depol),
                DepolarizationDraw::PerTrial => trial_p,
            };
            let working = gain * (truth - control);
            let draws = NoiseDraws {
                p_tilde,
                sigma_draw: gain * kick,
            };
            let m_z = simulate_measurement(&self.state, working, 0.0, draws, proj);
            let lik = self.likelihood.with_sigma_n(gain * self.sigma_param);
            if absorb(&mut post, &initial, &lik, m_z, gain, control, &self.grid) {
                out.resets += 1;
            }
            let (mean, sd) = post.stats();
            out.controls.push(control);
            out.m_z.push(m_z);
            out.estimates.push(mean);
            out.sigmas.push(sd);
            control = mean;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective_spin::StateFamily;
    use crate::rng::{stream, Lane};

    fn spec(gains: Vec<f64>) -> SequenceSpec {
        let state = SqueezedStateModel::from_xi(1000, 0.5, 1.0, StateFamily::Ansatz).unwrap();
        SequenceSpec {
            state,
            likelihood: LikelihoodModel::reshaped(state, 0.0),
            gains,
            sigma_param: 0.0,
            window: (-3.0, 3.0),
            grid: GridConfig::default(),
            p_d: 0.0,
            depolarization: DepolarizationDraw::PerStep,
        }
    }

    #[test]
    fn converges_on_truth() {
        let s = spec(vec![1.0; 30]);
        let mut p = stream(1, 0, Lane::Projection);
        let mut d = stream(1, 0, Lane::Depolarization);
        let out = s.run(0.37, &[0.0; 30], &mut p, &mut d).unwrap();
        let last = out.estimates[29];
        assert!((last - 0.37).abs() < 5.0 * out.sigmas[29]);
        assert_eq!(out.controls[1], out.estimates[0]);
    }

    #[test]
    fn dynamic_range_enforced() {
        let s = spec(vec![1.0; 3]);
        let mut p = stream(1, 0, Lane::Projection);
        let mut d = stream(1, 0, Lane::Depolarization);
        assert!(matches!(
            s.run(3.5, &[0.0; 3], &mut p, &mut d),
            Err(Error::DynamicRange { .. })
        ));
        assert!(matches!(
            s.run(0.0, &[0.0; 2], &mut p, &mut d),
            Err(Error::Length { .. })
        ));
    }
}
