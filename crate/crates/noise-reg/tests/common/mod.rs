//! Shared helpers for integration tests: an independent Runge-Kutta oracle
//! for the moment system and small utilities.

use noise_reg::core::MomentVector;
use noise_reg::moments::build_moment_matrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Classical RK4 on `m' = A(xi) m`, independent of the eigenbasis engine.
///
/// Steps target `h = 1e-4` but are capped by explicit stability
/// (`h ||A||_1 <= 2.5`) and floored at 64 steps so short horizons still
/// resolve the stiff transient relative to its own scale.
pub fn rk4_moments(m0: &MomentVector, xi: f64, sigma: f64, t: f64) -> MomentVector {
    let a = build_moment_matrix(xi, sigma);
    let norm1 = (0..3)
        .map(|j| (0..3).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let h_target = (1e-4f64).min(2.5 / (norm1 + 1.0));
    let n = ((t / h_target).ceil() as u64).max(64);
    let h = t / n as f64;

    let f = |x: &[f64; 3]| -> [f64; 3] {
        [
            a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
            a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
            a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
        ]
    };
    let axpy = |x: &[f64; 3], s: f64, y: &[f64; 3]| -> [f64; 3] {
        [x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2]]
    };

    let mut m = [m0.m1, m0.m2, m0.m3];
    for _ in 0..n {
        let k1 = f(&m);
        let k2 = f(&axpy(&m, 0.5 * h, &k1));
        let k3 = f(&axpy(&m, 0.5 * h, &k2));
        let k4 = f(&axpy(&m, h, &k3));
        for i in 0..3 {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    MomentVector::new(m[0], m[1], m[2])
}

/// Deterministic pseudo-random case source for oracle sweeps.
pub struct CaseSource {
    rng: ChaCha12Rng,
}

impl CaseSource {
    pub fn new(seed: u64) -> Self {
        CaseSource {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Cone-valid random initial moments with scale up to 4.
    pub fn cone_sample(&mut self) -> MomentVector {
        let m1 = 4.0 * self.unit();
        let m3 = 4.0 * self.unit();
        let rho = 2.0 * self.unit() - 1.0;
        MomentVector::new(m1, rho * (m1 * m3).sqrt(), m3)
    }
}

/// Relative deviation against a scale floor of 1.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
