//! Depolarization and phase-noise samplers with spectral diagnostics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{normal, standard_normal, Rng};
use crate::stats;

/// Strengths of depolarization and of the three phase-noise colors.
///
/// Phase-noise strengths are in units of the sensed quantity (rad for bare
/// phase, m/s^2 for gravimetry, fractional frequency for clocks). Random streams
/// are addressed by the run configuration that owns these settings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub p_d: f64,
    pub sigma_w: f64,
    pub sigma_f: f64,
    pub sigma_r: f64,
}

impl NoiseSpec {
    pub fn white(sigma: f64) -> Self {
        Self {
            sigma_w: sigma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_d", self.p_d),
            ("sigma_w", self.sigma_w),
            ("sigma_f", self.sigma_f),
            ("sigma_r", self.sigma_r),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Combined strength `sqrt(sigma_w^2 + sigma_f^2 + sigma_r^2)`.
    pub fn sigma_total(&self) -> f64 {
        (self.sigma_w.powi(2) + self.sigma_f.powi(2) + self.sigma_r.powi(2)).sqrt()
    }

    pub fn has_phase_noise(&self) -> bool {
        self.sigma_total() > 0.0
    }

    /// Same spec scaled in all phase-noise strengths.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p_d: self.p_d,
            sigma_w: self.sigma_w * factor,
            sigma_f: self.sigma_f * factor,
            sigma_r: self.sigma_r * factor,
        }
    }

    /// Sum of the three colored series, one element per step. Colors with
    /// zero strength consume no randomness.
    pub fn sample_series<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if n == 0 {
            return out;
        }
        if self.sigma_w > 0.0 {
            add_into(&mut out, &white_noise(n, self.sigma_w, rng).samples);
        }
        if self.sigma_f > 0.0 {
            // The spectral filter needs a few bins; short runs use the head of
            // a minimal-length realization.
            let series = flicker_noise(n.max(8), self.sigma_f, rng).expect("length >= 8");
            add_into(&mut out, &series.samples[..n]);
        }
        if self.sigma_r > 0.0 {
            add_into(&mut out, &random_walk_noise(n, self.sigma_r, rng).samples);
        }
        out
    }
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseColor {
    White,
    Flicker,
    RandomWalk,
}

impl NoiseColor {
    pub const ALL: [NoiseColor; 3] = [
        NoiseColor::White,
        NoiseColor::Flicker,
        NoiseColor::RandomWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseColor::White => "white",
            NoiseColor::Flicker => "flicker",
            NoiseColor::RandomWalk => "random_walk",
        }
    }

    /// Nominal PSD exponent `beta` in `S(f) ~ f^-beta`.
    pub fn beta(self) -> f64 {
        match self {
            NoiseColor::White => 0.0,
            NoiseColor::Flicker => 1.0,
            NoiseColor::RandomWalk => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSeries {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub color: NoiseColor,
}

impl NoiseSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// `|g|` with `g ~ N(0, p_d^2)`, clamped to `[0, 1]`.
pub fn sample_depolarization<R: Rng + ?Sized>(p_d: f64, rng: &mut R) -> f64 {
    if p_d <= 0.0 {
        return 0.0;
    }
    (p_d * standard_normal(rng)).abs().min(1.0)
}

/// Mean of [`sample_depolarization`]: half-normal mean with the tail above 1
/// collapsed onto 1.
pub fn expected_depolarization(p_d: f64) -> f64 {
    if p_d <= 0.0 {
        return 0.0;
    }
    let below = p_d * (2.0 / std::f64::consts::PI).sqrt() * (1.0 - (-0.5 / (p_d * p_d)).exp());
    below + libm::erfc(1.0 / (p_d * std::f64::consts::SQRT_2))
}

pub fn white_noise<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> NoiseSeries {
    NoiseSeries {
        samples: (0..n).map(|_| normal(rng, 0.0, sigma)).collect(),
        dt: 1.0,
        color: NoiseColor::White,
    }
}

/// White noise shaped by a `1/sqrt(f)` amplitude filter (DC removed), then
/// rescaled so its standard deviation equals `sigma` exactly.
pub fn flicker_noise<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<NoiseSeries> {
    if n < 8 {
        return Err(Error::Length { needed: 8, got: n });
    }
    let color = NoiseColor::Flicker;
    if sigma == 0.0 {
        return Ok(NoiseSeries {
            samples: vec![0.0; n],
            dt: 1.0,
            color,
        });
    }
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(standard_normal(rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64 / n as f64;
        *b /= f.sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut samples: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let m = stats::mean(&samples);
    samples.iter_mut().for_each(|x| *x -= m);
    let s = stats::std_pop(&samples);
    samples.iter_mut().for_each(|x| *x *= sigma / s);
    Ok(NoiseSeries {
        samples,
        dt: 1.0,
        color,
    })
}

/// Running sum of i.i.d. `N(0, sigma^2)` increments.
pub fn random_walk_noise<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> NoiseSeries {
    let mut acc = 0.0;
    let samples = (0..n)
        .map(|_| {
            acc += normal(rng, 0.0, sigma);
            acc
        })
        .collect();
    NoiseSeries {
        samples,
        dt: 1.0,
        color: NoiseColor::RandomWalk,
    }
}

/// One-sided power spectrum at positive frequencies, DC excluded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub power: Vec<f64>,
}

const SEGMENTS: usize = 8;
const MIN_SEGMENT: usize = 256;

/// `|DFT|^2 dt / n`, averaged over 8 non-overlapping segments when each
/// segment keeps at least 256 samples.
pub fn periodogram(series: &NoiseSeries) -> Result<Spectrum> {
    let n = series.len();
    if n < 8 {
        return Err(Error::Length { needed: 8, got: n });
    }
    let segments = if n / SEGMENTS >= MIN_SEGMENT {
        SEGMENTS
    } else {
        1
    };
    let len = n / segments;
    let fft = FftPlanner::new().plan_fft_forward(len);
    let bins = len / 2;
    let mut power = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for seg in series.samples.chunks_exact(len).take(segments) {
        for (b, &x) in buf.iter_mut().zip(seg) {
            *b = Complex::new(x, 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf[1..=bins]) {
            *p += b.norm_sqr() * series.dt / len as f64;
        }
    }
    power.iter_mut().for_each(|p| *p /= segments as f64);
    let frequency = (1..=bins)
        .map(|k| k as f64 / (len as f64 * series.dt))
        .collect();
    Ok(Spectrum { frequency, power })
}

/// Result of a log-log PSD fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Negated slope: white 0, flicker 1, random walk 2.
    pub beta: f64,
    pub used: usize,
    /// Bins inside the fit window skipped for having zero power.
    pub zero_power_bins: usize,
}

/// Fits `ln P = -beta ln f + c` over the spectrum minus its lowest 2 and
/// highest 10% of bins.
pub fn fit_psd_slope(spectrum: &Spectrum) -> Result<SlopeFit> {
    let k = spectrum.power.len();
    if k < 8 || spectrum.frequency.len() != k {
        return Err(Error::InsufficientData(format!(
            "need >= 8 spectral points, got {k}"
        )));
    }
    let hi = k - k / 10;
    let (mut lx, mut ly, mut zeros) = (Vec::new(), Vec::new(), 0);
    for i in 2..hi {
        let p = spectrum.power[i];
        if p > 0.0 {
            lx.push(spectrum.frequency[i].ln());
            ly.push(p.ln());
        } else {
            zeros += 1;
        }
    }
    if zeros > 0 {
        log::warn!("PSD fit skipped {zeros} zero-power bins");
    }
    let (slope, _) = stats::linear_fit(&lx, &ly)?;
    Ok(SlopeFit {
        beta: -slope,
        used: lx.len(),
        zero_power_bins: zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Lane};

    fn beta_of(series: &NoiseSeries) -> f64 {
        fit_psd_slope(&periodogram(series).unwrap()).unwrap().beta
    }

    #[test]
    fn zero_strength_gives_zeros() {
        let mut r = stream(1, 0, Lane::Auxiliary);
        assert!(white_noise(64, 0.0, &mut r)
            .samples
            .iter()
            .all(|&x| x == 0.0));
        assert!(flicker_noise(64, 0.0, &mut r)
            .unwrap()
            .samples
            .iter()
            .all(|&x| x == 0.0));
        assert!(random_walk_noise(64, 0.0, &mut r)
            .samples
            .iter()
            .all(|&x| x == 0.0));
        assert_eq!(sample_depolarization(0.0, &mut r), 0.0);
    }

    #[test]
    fn depolarization_mean_and_clamp() {
        let mut r = stream(2, 0, Lane::Depolarization);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_depolarization(0.1, &mut r))
            .collect();
        let m = stats::mean(&draws);
        assert!(
            (m - 0.1 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.002,
            "{m}"
        );
        let big: Vec<f64> = (0..1000)
            .map(|_| sample_depolarization(10.0, &mut r))
            .collect();
        assert!(big.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!(big.iter().filter(|&&x| x == 1.0).count() > 800);
    }

    #[test]
    fn expected_depolarization_matches_sampling() {
        for p in [0.05, 0.3, 1.0, 3.0] {
            let mut r = stream(3, 0, Lane::Depolarization);
            let draws: Vec<f64> = (0..200_000)
                .map(|_| sample_depolarization(p, &mut r))
                .collect();
            let m = stats::mean(&draws);
            assert!((m - expected_depolarization(p)).abs() < 4e-3, "p={p}: {m}");
        }
    }

    #[test]
    fn white_std_and_slope() {
        let s = white_noise(1 << 16, 1e-6, &mut stream(4, 0, Lane::PhaseNoise));
        let sd = stats::std_pop(&s.samples);
        assert!((sd / 1e-6 - 1.0).abs() < 0.02);
        let s = white_noise(1 << 16, 1.0, &mut stream(4, 1, Lane::PhaseNoise));
        assert!(beta_of(&s).abs() < 0.1);
    }

    #[test]
    fn flicker_std_exact_and_slope() {
        let s = flicker_noise(1 << 16, 2.5, &mut stream(5, 0, Lane::PhaseNoise)).unwrap();
        assert!((stats::std_pop(&s.samples) - 2.5).abs() < 1e-12);
        assert!((beta_of(&s) - 1.0).abs() < 0.15);
        assert!(flicker_noise(7, 1.0, &mut stream(5, 0, Lane::PhaseNoise)).is_err());
    }

    #[test]
    fn random_walk_slope_and_variance_growth() {
        let s = random_walk_noise(1 << 16, 1.0, &mut stream(6, 0, Lane::PhaseNoise));
        assert!((beta_of(&s) - 2.0).abs() < 0.2);
        let k = 100;
        let finals: Vec<f64> = (0..1000)
            .map(|i| {
                random_walk_noise(k, 1.0, &mut stream(6, i + 1, Lane::PhaseNoise)).samples[k - 1]
            })
            .collect();
        let var = finals.iter().map(|x| x * x).sum::<f64>() / finals.len() as f64;
        assert!((var / k as f64 - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn sinusoid_peaks_in_its_bin() {
        let n = 64;
        let samples = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * t as f64 / n as f64).sin())
            .collect();
        let sp = periodogram(&NoiseSeries {
            samples,
            dt: 1.0,
            color: NoiseColor::White,
        })
        .unwrap();
        let peak = sp
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak + 1, 5);
    }

    #[test]
    fn exact_power_law_fit() {
        let frequency: Vec<f64> = (1..=100).map(|k| k as f64 * 0.01).collect();
        let power = frequency.iter().map(|f| 0.3 / f).collect();
        let fit = fit_psd_slope(&Spectrum { frequency, power }).unwrap();
        assert!((fit.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_bins_are_reported() {
        let frequency: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let mut power: Vec<f64> = frequency.iter().map(|f| f.powi(-2)).collect();
        power[5] = 0.0;
        let fit = fit_psd_slope(&Spectrum { frequency, power }).unwrap();
        assert_eq!(fit.zero_power_bins, 1);
        assert!((fit.beta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        let s = NoiseSeries {
            samples: vec![0.0; 4],
            dt: 1.0,
            color: NoiseColor::White,
        };
        assert!(periodogram(&s).is_err());
    }

    #[test]
    fn combined_series_matches_components() {
        let spec = NoiseSpec {
            p_d: 0.0,
            sigma_w: 1.0,
            sigma_f: 0.0,
            sigma_r: 0.0,
        };
        let a = spec.sample_series(32, &mut stream(9, 0, Lane::PhaseNoise));
        let b = white_noise(32, 1.0, &mut stream(9, 0, Lane::PhaseNoise)).samples;
        assert_eq!(a, b);
        let spec = NoiseSpec {
            sigma_f: 1.0,
            ..NoiseSpec::default()
        };
        assert_eq!(
            spec.sample_series(3, &mut stream(9, 0, Lane::PhaseNoise))
                .len(),
            3
        );
        assert!(
            (NoiseSpec {
                p_d: 0.0,
                sigma_w: 3.0,
                sigma_f: 4.0,
                sigma_r: 0.0
            }
            .sigma_total()
                - 5.0)
                .abs()
                < 1e-15
        );
    }
}
