//! Exact state-vector reference for small particle numbers.
//!
//! Works in the `(N+1)`-dimensional Dicke basis `|j, m>`, `m = -j..=j`, with
//! dense matrices; meant for `N <= 14`, where everything is instantaneous.
//! Rotations about x use the eigendecomposition of the real symmetric `Jx`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Largest particle number the oracle accepts.
pub const MAX_N: usize = 14;

pub type StateVector = Vec<Complex64>;

pub struct DickeOracle {
    n: usize,
    m: Vec<f64>,
    jx: DMatrix<f64>,
    vecs: DMatrix<f64>,
    vals: DVector<f64>,
}

impl DickeOracle {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=MAX_N).contains(&n) {
            return domain(format!("oracle supports 1 <= N <= {MAX_N}, got {n}"));
        }
        let j = 0.5 * n as f64;
        let dim = n + 1;
        let m: Vec<f64> = (0..dim).map(|k| k as f64 - j).collect();
        let mut jx = DMatrix::zeros(dim, dim);
        for k in 0..n {
            let v = 0.5 * (j * (j + 1.0) - m[k] * (m[k] + 1.0)).sqrt();
            jx[(k + 1, k)] = v;
            jx[(k, k + 1)] = v;
        }
        let eig = SymmetricEigen::new(jx.clone());
        Ok(Self {
            n,
            m,
            jx,
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coherent state polarized along +x (top eigenvector of `Jx`).
    pub fn x_polarized(&self) -> StateVector {
        let top = self.vals.imax();
        self.vecs
            .column(top)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect()
    }

    /// `exp(-i angle Jz^2) psi`.
    pub fn twist(&self, psi: &[Complex64], angle: f64) -> StateVector {
        psi.iter()
            .zip(&self.m)
            .map(|(a, m)| a * Complex64::from_polar(1.0, -angle * m * m))
            .collect()
    }

    /// `exp(-i angle Jz) psi`.
    pub fn rotate_z(&self, psi: &[Complex64], angle: f64) -> StateVector {
        psi.iter()
            .zip(&self.m)
            .map(|(a, m)| a * Complex64::from_polar(1.0, -angle * m))
            .collect()
    }

    /// `exp(-i angle Jx) psi`.
    pub fn rotate_x(&self, psi: &[Complex64], angle: f64) -> StateVector {
        let dim = self.n + 1;
        let mut coeff = vec![Complex64::new(0.0, 0.0); dim];
        for (c, (col, lam)) in coeff
            .iter_mut()
            .zip(self.vecs.column_iter().zip(self.vals.iter()))
        {
            let proj: Complex64 = col.iter().zip(psi).map(|(v, a)| a * v).sum();
            *c = proj * Complex64::from_polar(1.0, -angle * lam);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (c, col) in coeff.iter().zip(self.vecs.column_iter()) {
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += c * v;
            }
        }
        out
    }

    pub fn expect_jz(&self, psi: &[Complex64]) -> f64 {
        psi.iter().zip(&self.m).map(|(a, m)| a.norm_sqr() * m).sum()
    }

    pub fn expect_jz2(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .zip(&self.m)
            .map(|(a, m)| a.norm_sqr() * m * m)
            .sum()
    }

    pub fn expect_jx(&self, psi: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..psi.len() {
            for c in 0..psi.len() {
                let v = self.jx[(r, c)];
                if v != 0.0 {
                    acc += psi[r].conj() * v * psi[c];
                }
            }
        }
        acc.re
    }

    /// Twisted, rotated state `exp(-i alpha Jx) exp(-i chi_t Jz^2) |+x>`.
    pub fn prepared(&self, chi_t: f64, alpha: f64) -> StateVector {
        self.rotate_x(&self.twist(&self.x_polarized(), chi_t), alpha)
    }

    /// `sqrt(N) dJz / <Jx>` of the prepared state.
    pub fn squeezing(&self, chi_t: f64, alpha: f64) -> f64 {
        let psi = self.prepared(chi_t, alpha);
        let mz = self.expect_jz(&psi);
        let var = self.expect_jz2(&psi) - mz * mz;
        (self.n as f64).sqrt() * var.max(0.0).sqrt() / self.expect_jx(&psi)
    }

    /// `(<Jz>, <Jz^2>)` after preparing with readout angle `theta`, imprinting
    /// phase `phi` about z and recombining with a pi/2 pulse about x.
    pub fn readout_moments(&self, chi_t: f64, theta: f64, phi: f64) -> (f64, f64) {
        let psi = self.prepared(chi_t, theta);
        let psi = self.rotate_z(&psi, phi);
        let psi = self.rotate_x(&psi, -std::f64::consts::FRAC_PI_2);
        (self.expect_jz(&psi), self.expect_jz2(&psi))
    }
}
