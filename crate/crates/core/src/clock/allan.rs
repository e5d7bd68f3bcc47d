use crate::error::{domain, Error, Result};

/// Overlapping Allan deviation of a fractional-frequency series sampled
/// every `tau0`, at averaging factors `ms`. Returns `(tau, sigma_y)`.
pub fn allan_deviation(y: &[f64], tau0: f64, ms: &[usize]) -> Result<Vec<(f64, f64)>> {
    if !(tau0 > 0.0) {
        return domain(format!("tau0 must be positive, got {tau0}"));
    }
    // Phase record x_k = sum_{i<k} y_i (in units of tau0).
    let mut x = Vec::with_capacity(y.len() + 1);
    x.push(0.0);
    for v in y {
        x.push(x.last().unwrap() + v);
    }
    ms.iter()
        .map(|&m| {
            if m == 0 || y.len() < 2 * m {
                return Err(Error::InsufficientData(format!(
                    "averaging factor {m} needs at least {} samples, got {}",
                    2 * m.max(1),
                    y.len()
                )));
            }
            let terms = x.len() - 2 * m;
            let sum: f64 = (0..terms)
                .map(|i| {
                    let d = x[i + 2 * m] - 2.0 * x[i + m] + x[i];
                    d * d
                })
                .sum();
            let var = sum / (2.0 * (m * m) as f64 * terms as f64);
            Ok((m as f64 * tau0, var.sqrt()))
        })
        .collect()
}

/// Roughly log-spaced averaging factors from 1 to `n / 2`.
pub fn log_spaced_factors(n: usize, per_decade: usize) -> Vec<usize> {
    let top = n / 2;
    let mut out: Vec<usize> = Vec::new();
    if top == 0 {
        return out;
    }
    let steps = ((top as f64).log10() * per_decade as f64).ceil() as usize;
    for k in 0..=steps {
        let m = 10f64.powf(k as f64 / per_decade as f64).round() as usize;
        let m = m.clamp(1, top);
        if out.last() != Some(&m) {
            out.push(m);
        }
    }
    out
}

/// Power-law Allan deviation `h_beta (tau / tau0)^((beta - 1) / 2)` with
/// `h_beta^2 = {sigma^2 / 2, 2 ln 2 sigma^2, 2 pi^2 / 3 sigma^2}` for
/// `beta = 0, 1, 2`.
pub fn theoretical_adev(beta: u32, strength: f64, tau: f64, tau0: f64) -> Result<f64> {
    let h2 = match beta {
        0 => 0.5,
        1 => 2.0 * std::f64::consts::LN_2,
        2 => 2.0 * std::f64::consts::PI.powi(2) / 3.0,
        _ => return domain(format!("unsupported PSD exponent {beta}")),
    };
    if !(tau > 0.0 && tau0 > 0.0) {
        return domain("tau and tau0 must be positive");
    }
    Ok((h2 * strength * strength).sqrt() * (tau / tau0).powf((beta as f64 - 1.0) / 2.0))
}
