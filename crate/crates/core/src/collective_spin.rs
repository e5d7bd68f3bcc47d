//! Collective-spin description of the probe state.
//!
//! Closed-form moments of one-axis-twisted (OAT) states, the Gaussian
//! squeezed-state ansatz, and the [`SqueezedStateModel`] consumed by the
//! estimators.
//!
//! Angle conventions: `alpha` is the rotation about x that brings the
//! minimum-variance axis of the twisted state onto z, which is the angle that
//! enters the closed-form squeezing parameter. The readout pulse that brings
//! the same axis onto y, where the accumulated phase is read out, is
//! `theta = alpha + pi/2`; [`OatParams::new`] binds the two.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// `cos(x)^k` evaluated in log space so that `k ~ 3e4` does not underflow
/// prematurely.
pub(crate) fn cos_pow(x: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    let c = x.cos();
    if c == 0.0 {
        return 0.0;
    }
    let mag = (k * c.abs().ln()).exp();
    // Negative base only arises for chi_t > pi/2, far outside any useful
    // twisting; integer k keeps the sign well defined there.
    if c < 0.0 && (k as i64) % 2 != 0 {
        -mag
    } else {
        mag
    }
}

/// One-axis-twisting preparation: `N` particles, twisting angle `chi_t`,
/// rotation `alpha`, readout quadrature angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OatParams {
    pub n: usize,
    pub chi_t: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl OatParams {
    /// Binds the readout angle to the rotation: `theta = alpha + pi/2`.
    pub fn new(n: usize, chi_t: f64, alpha: f64) -> Result<Self> {
        let p = Self {
            n,
            chi_t,
            alpha,
            theta: alpha + FRAC_PI_2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Twisted to `chi_t` and rotated to the optimal angle.
    pub fn optimal(n: usize, chi_t: f64) -> Result<Self> {
        if chi_t == 0.0 {
            return Self::new(n, 0.0, 0.0);
        }
        Self::new(n, chi_t, optimal_rotation_angle(n, chi_t)?)
    }

    /// Overrides the readout angle independently of `alpha`.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return domain(format!("particle number must be >= 2, got {}", self.n));
        }
        if !(self.chi_t >= 0.0) || !self.chi_t.is_finite() {
            return domain(format!("twisting angle must be >= 0, got {}", self.chi_t));
        }
        if !self.alpha.is_finite() || !self.theta.is_finite() {
            return domain("rotation angles must be finite");
        }
        Ok(())
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Kitagawa–Ueda `A`, `B` and the branch angle `delta`.
    fn abd(&self) -> (f64, f64, f64) {
        let nf = self.nf();
        let a = 1.0 - cos_pow(2.0 * self.chi_t, nf - 2.0);
        let b = 4.0 * self.chi_t.sin() * cos_pow(self.chi_t, nf - 2.0);
        let delta = if a == 0.0 && b == 0.0 {
            0.0
        } else {
            0.5 * b.atan2(a)
        };
        (a, b, delta)
    }

    /// Mean spin length `<Jx> = (N/2) cos^(N-1)(chi t)`.
    pub fn mean_length(&self) -> f64 {
        0.5 * self.nf() * cos_pow(self.chi_t, self.nf() - 1.0)
    }
}

/// Squeezing parameter of the OAT state along the axis selected by `alpha`.
pub fn squeezing_parameter(p: &OatParams) -> Result<f64> {
    p.validate()?;
    if p.chi_t == 0.0 {
        return Ok(1.0);
    }
    let nf = p.nf();
    let (a, b, delta) = p.abd();
    let bracket = a - a.hypot(b) * (2.0 * (p.alpha + delta)).cos();
    let num = (1.0 + 0.25 * (nf - 1.0) * bracket).max(0.0).sqrt();
    Ok(num / cos_pow(p.chi_t, nf - 1.0))
}

/// `t_opt = 3^(1/3) N^(-2/3) / chi`.
pub fn optimal_twist_time(n: usize, chi: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("particle number must be >= 2, got {n}"));
    }
    if !(chi > 0.0) {
        return domain(format!("twisting rate must be positive, got {chi}"));
    }
    Ok(3f64.cbrt() * (n as f64).powf(-2.0 / 3.0) / chi)
}

/// Rotation angle minimizing the squeezing parameter, in `(-pi/2, pi/2]`.
pub fn optimal_rotation_angle(n: usize, chi_t: f64) -> Result<f64> {
    if !(chi_t > 0.0) {
        return domain("optimal rotation angle is undefined without twisting (chi_t = 0)");
    }
    let p = OatParams {
        n,
        chi_t,
        alpha: 0.0,
        theta: 0.0,
    };
    p.validate()?;
    let (_, _, delta) = p.abd();
    let mut alpha = -delta;
    if alpha <= -FRAC_PI_2 {
        alpha += PI;
    }
    Ok(alpha)
}

/// Squeezing parameter at the optimal rotation for a given twist.
pub fn optimal_squeezing(n: usize, chi_t: f64) -> Result<f64> {
    squeezing_parameter(&OatParams::optimal(n, chi_t)?)
}

/// `<Jz>` of the read-out state: `-(N/2) sin(phi) cos^(N-1)(chi t)`.
pub fn mean_jz(p: &OatParams, phi: f64) -> f64 {
    -phi.sin() * p.mean_length()
}

/// `<Jz^2>` of the read-out state, evaluated at the readout angle `theta`.
pub fn mean_jz2(p: &OatParams, phi: f64) -> f64 {
    let nf = p.nf();
    let c2 = cos_pow(2.0 * p.chi_t, nf - 2.0);
    let (s_phi, c_phi) = phi.sin_cos();
    let (s_th, c_th) = p.theta.sin_cos();
    let cross = 0.5 * nf * (nf - 1.0) * cos_pow(p.chi_t, nf - 2.0) * p.chi_t.sin();
    s_phi * s_phi * nf / 8.0 * (nf + 1.0 + (nf - 1.0) * c2)
        + (c_th * c_phi).powi(2) * nf / 8.0 * (nf + 1.0 - (nf - 1.0) * c2)
        + (s_th * c_phi).powi(2) * nf / 4.0
        - c_th * s_th * c_phi * c_phi * cross
}

/// Coefficient of `tan^2(phi)` in the squared phase uncertainty of an OAT
/// state.
pub fn oat_tan_coefficient(n: usize, chi_t: f64) -> f64 {
    let nf = n as f64;
    let num = nf + 1.0 + (nf - 1.0) * cos_pow(2.0 * chi_t, nf - 2.0);
    let den = 2.0 * nf * cos_pow(chi_t, 2.0 * (nf - 1.0));
    (num / den - 1.0).max(0.0)
}

/// Error-propagated phase uncertainty `sqrt(A tan^2 phi + xi^2 / N)`.
pub fn phase_uncertainty(p: &OatParams, phi: f64) -> Result<f64> {
    if !(phi.abs() < FRAC_PI_2) {
        return domain(format!("|phi| must be below pi/2, got {phi}"));
    }
    let xi = squeezing_parameter(p)?;
    let t = phi.tan();
    Ok((oat_tan_coefficient(p.n, p.chi_t) * t * t + xi * xi / p.nf()).sqrt())
}

/// Twist on the pre-optimum branch whose optimally rotated state reaches
/// squeezing `xi`.
pub fn twist_for_squeezing(n: usize, xi: f64) -> Result<f64> {
    if n < 2 {
        return domain(format!("particle number must be >= 2, got {n}"));
    }
    if !(xi > 0.0 && xi <= 1.0) {
        return domain(format!("target squeezing must lie in (0, 1], got {xi}"));
    }
    if xi == 1.0 {
        return Ok(0.0);
    }
    let f = |ct: f64| optimal_squeezing(n, ct).unwrap_or(f64::INFINITY);
    let (ct_best, xi_best) = best_twist(n);
    if xi < xi_best {
        return domain(format!(
            "xi = {xi} is below the one-axis-twisting limit {xi_best:.6} at N = {n}"
        ));
    }
    let (mut lo, mut hi) = (0.0, ct_best);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > xi {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * ct_best {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Twist minimizing the optimal squeezing parameter, and that minimum.
pub fn best_twist(n: usize) -> (f64, f64) {
    let f = |ct: f64| optimal_squeezing(n, ct).unwrap_or(f64::INFINITY);
    let t_opt = 3f64.cbrt() * (n as f64).powf(-2.0 / 3.0);
    let (mut a, mut b) = (1e-6 * t_opt, 2.0 * t_opt);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-14 * t_opt {
            break;
        }
    }
    let ct = 0.5 * (a + b);
    (ct, f(ct))
}

/// Gaussian squeezed-state ansatz with width parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianAnsatz {
    pub n: usize,
    pub s: f64,
}

impl GaussianAnsatz {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let a = Self { n, s };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return domain(format!("particle number must be >= 2, got {}", self.n));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return domain(format!("width s must lie in (0, 1), got {}", self.s));
        }
        if self.s * self.s * self.n as f64 <= 1.0 {
            return domain(format!(
                "s^2 N = {} must exceed 1 for the amplitude approximation",
                self.s * self.s * self.n as f64
            ));
        }
        Ok(())
    }

    /// `xi = s exp(1 / (2 s^2 N))`.
    pub fn xi(&self) -> f64 {
        self.s * (0.5 / (self.s * self.s * self.n as f64)).exp()
    }

    /// Fringe amplitude `(N/2) exp(-1 / (2 s^2 N))`.
    pub fn amplitude(&self) -> f64 {
        0.5 * self.n as f64 * (-0.5 / (self.s * self.s * self.n as f64)).exp()
    }

    /// Width `s` whose ansatz reaches squeezing `xi`.
    pub fn for_xi(n: usize, xi: f64) -> Result<Self> {
        let nf = n as f64;
        let f = |s: f64| s * (0.5 / (s * s * nf)).exp();
        let s_min = 1.0 / nf.sqrt();
        if n < 2 || !(xi > f(s_min) && xi < f(1.0)) {
            return domain(format!(
                "xi = {xi} is not reachable by the Gaussian ansatz at N = {n} (range ({:.6}, {:.6}))",
                f(s_min),
                f(1.0)
            ));
        }
        let (mut lo, mut hi) = (s_min, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < xi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::new(n, 0.5 * (lo + hi))
    }

    /// Exact `Var(Jx) / <Jx>^2` of the normalized ansatz state.
    ///
    /// The amplitudes are real Gaussians in the eigenbasis of the squeezed
    /// component; the mean-spin component acts there as `(J+ + J-)/2`.
    pub fn tan_coefficient(&self) -> f64 {
        let j = 0.5 * self.n as f64;
        let width = self.s * self.s * self.n as f64;
        let ms: Vec<f64> = (0..=self.n).map(|k| k as f64 - j).collect();
        let log_c: Vec<f64> = ms.iter().map(|m| -m * m / width).collect();
        let shift = log_c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let c: Vec<f64> = log_c.iter().map(|l| (l - shift).exp()).collect();
        let norm: f64 = c.iter().map(|x| x * x).sum();
        let raise = |m: f64| (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();

        let mut mean = 0.0;
        for k in 0..self.n {
            mean += c[k] * c[k + 1] * raise(ms[k]);
        }
        let mut two_step = 0.0;
        for k in 0..self.n.saturating_sub(1) {
            two_step += c[k] * c[k + 2] * raise(ms[k]) * raise(ms[k + 1]);
        }
        let sq: f64 = c.iter().zip(&ms).map(|(ci, m)| ci * ci * m * m).sum();
        let mean = mean / norm;
        let second = 0.5 * two_step / norm + 0.5 * (j * (j + 1.0) - sq / norm);
        ((second - mean * mean) / (mean * mean)).max(0.0)
    }
}

/// Model turning `xi` into a full probe description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFamily {
    /// Gaussian ansatz in the squeezed quadrature.
    #[default]
    Ansatz,
    /// One-axis twisting, rotated optimally, on the pre-optimum branch.
    Oat,
}

/// Metrological description of the probe: particle number, squeezing,
/// fringe amplitude and contrast, plus the curvature of the phase
/// uncertainty away from the working point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedStateModel {
    pub n: usize,
    pub xi: f64,
    /// Fringe amplitude in half-population units, contrast excluded.
    pub amplitude: f64,
    pub contrast: f64,
    /// Coefficient of `tan^2` in `dphi^2 = A tan^2(phi) + xi^2 / N`.
    pub tan_coefficient: f64,
}

impl SqueezedStateModel {
    pub fn coherent(n: usize, contrast: f64) -> Result<Self> {
        Self {
            n,
            xi: 1.0,
            amplitude: 0.5 * n as f64,
            contrast,
            tan_coefficient: 0.0,
        }
        .validated()
    }

    pub fn from_oat(p: &OatParams, contrast: f64) -> Result<Self> {
        Self {
            n: p.n,
            xi: squeezing_parameter(p)?,
            amplitude: p.mean_length(),
            contrast,
            tan_coefficient: oat_tan_coefficient(p.n, p.chi_t),
        }
        .validated()
    }

    pub fn from_ansatz(a: &GaussianAnsatz, contrast: f64) -> Result<Self> {
        a.validate()?;
        Self {
            n: a.n,
            xi: a.xi(),
            amplitude: a.amplitude(),
            contrast,
            tan_coefficient: a.tan_coefficient(),
        }
        .validated()
    }

    /// Resolves a bare squeezing value through the chosen state family.
    /// `xi = 1` always gives the coherent state.
    pub fn from_xi(n: usize, xi: f64, contrast: f64, family: StateFamily) -> Result<Self> {
        if xi == 1.0 {
            return Self::coherent(n, contrast);
        }
        match family {
            StateFamily::Ansatz => Self::from_ansatz(&GaussianAnsatz::for_xi(n, xi)?, contrast),
            StateFamily::Oat => {
                let ct = twist_for_squeezing(n, xi)?;
                Self::from_oat(&OatParams::optimal(n, ct)?, contrast)
            }
        }
    }

    fn validated(self) -> Result<Self> {
        if self.n < 2 {
            return domain(format!("particle number must be >= 2, got {}", self.n));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return domain(format!(
                "contrast must lie in (0, 1], got {}",
                self.contrast
            ));
        }
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            return domain(format!(
                "squeezing parameter must be positive, got {}",
                self.xi
            ));
        }
        if !(self.amplitude > 0.0) {
            return domain("fringe amplitude must be positive");
        }
        Ok(self)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Working-point phase uncertainty `xi / sqrt(N)`.
    pub fn working_point_uncertainty(&self) -> f64 {
        self.xi / self.nf().sqrt()
    }

    /// Phase uncertainty at total phase `phi`, `|phi| < pi/2`.
    pub fn phase_uncertainty(&self, phi: f64) -> Result<f64> {
        if !(phi.abs() < FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "|phi| must be below pi/2, got {phi}"
            )));
        }
        let t = phi.tan();
        Ok((self.tan_coefficient * t * t + self.xi * self.xi / self.nf()).sqrt())
    }

    /// Projection-noise standard deviation of the half-population difference
    /// at total phase `phi`: `dphi(phi) * |amplitude * cos(phi)|`, written so
    /// that it stays finite at `phi = +-pi/2`.
    pub fn outcome_spread(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let b = self.xi * self.xi / self.nf();
        self.amplitude * (self.tan_coefficient * s * s + b * c * c).sqrt()
    }

    /// Half-width of the phase window where the uncertainty beats `1/sqrt(N)`.
    pub fn sub_sql_half_width(&self) -> f64 {
        let slack = 1.0 / self.nf() - self.xi * self.xi / self.nf();
        if slack <= 0.0 {
            0.0
        } else if self.tan_coefficient == 0.0 {
            FRAC_PI_2
        } else {
            (slack / self.tan_coefficient).sqrt().atan()
        }
    }
}

/// Unit-contrast model for an ansatz.
pub fn ansatz_to_model(a: &GaussianAnsatz) -> Result<SqueezedStateModel> {
    SqueezedStateModel::from_ansatz(a, 1.0)
}

/// `xi` from a squeezing figure quoted in dB of `xi^2`.
pub fn xi_from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
