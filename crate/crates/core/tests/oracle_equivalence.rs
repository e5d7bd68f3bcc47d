use std::f64::consts::{FRAC_PI_2, PI};

use squeezed_bayes::collective_spin::{
    mean_jz, mean_jz2, optimal_rotation_angle, optimal_twist_time, phase_uncertainty,
    squeezing_parameter, OatParams,
};
use squeezed_bayes::oracle::DickeOracle;

fn grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / k as f64)
        .collect()
}

#[test]
fn closed_forms_match_state_vectors_on_full_grid() {
    let mut worst: f64 = 0.0;
    for n in 2..=14 {
        let o = DickeOracle::new(n).unwrap();
        for chi_t in [0.0, 0.05, 0.1, 0.2] {
            for alpha in grid(-FRAC_PI_2, FRAC_PI_2, 20) {
                let p = OatParams::new(n, chi_t, alpha).unwrap();
                let xi = squeezing_parameter(&p).unwrap();
                worst = worst.max((xi - o.squeezing(chi_t, alpha)).abs());
                for phi in grid(-PI, PI, 20) {
                    let (jz, jz2) = o.readout_moments(chi_t, p.theta, phi);
                    worst = worst.max((mean_jz(&p, phi) - jz).abs());
                    worst = worst.max((mean_jz2(&p, phi) - jz2).abs());
                }
            }
        }
    }
    assert!(worst < 1e-9, "max deviation {worst}");
}

#[test]
fn optimal_squeezing_at_n12() {
    let o = DickeOracle::new(12).unwrap();
    let ct = optimal_twist_time(12, 1.0).unwrap();
    let a = optimal_rotation_angle(12, ct).unwrap();
    let xi = squeezing_parameter(&OatParams::new(12, ct, a).unwrap()).unwrap();
    assert!((xi - o.squeezing(ct, a)).abs() < 1e-10);
}

#[test]
fn optimal_angle_matches_state_vector_scan() {
    let o = DickeOracle::new(12).unwrap();
    let a = optimal_rotation_angle(12, 0.2).unwrap();
    // Golden-section search on the oracle around the closed-form answer.
    let (mut lo, mut hi) = (a - 0.5, a + 0.5);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..120 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if o.squeezing(0.2, c) < o.squeezing(0.2, d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    assert!((0.5 * (lo + hi) - a).abs() < 1e-6);
}

#[test]
fn readout_angle_dependent_second_moment() {
    let o = DickeOracle::new(12).unwrap();
    let a = optimal_rotation_angle(12, 0.1).unwrap();
    let p = OatParams::new(12, 0.1, a).unwrap().with_theta(a);
    let (jz, jz2) = o.readout_moments(0.1, a, 0.3);
    assert!((mean_jz(&p, 0.3) - jz).abs() < 1e-10);
    assert!((mean_jz2(&p, 0.3) - jz2).abs() < 1e-10);
}

#[test]
fn phase_uncertainty_matches_error_propagation() {
    let o = DickeOracle::new(12).unwrap();
    let p = OatParams::optimal(12, 0.1).unwrap();
    let phi = 0.4;
    let (jz, jz2) = o.readout_moments(0.1, p.theta, phi);
    let h = 1e-5;
    let slope = (o.readout_moments(0.1, p.theta, phi + h).0
        - o.readout_moments(0.1, p.theta, phi - h).0)
        / (2.0 * h);
    let expected = (jz2 - jz * jz).sqrt() / slope.abs();
    assert!((phase_uncertainty(&p, phi).unwrap() - expected).abs() < 1e-9);
}
