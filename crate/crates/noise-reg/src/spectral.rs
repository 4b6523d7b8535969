//! Physical space <-> frequency space bridge.
//!
//! The continuum problem lives on the whole line; here it is approximated on
//! a periodic box of length `L` sampled at `n_points` equispaced points. All
//! per-mode estimates are pointwise in the frequency, so periodization only
//! restricts the frequency set to the lattice `xi_k = 2 pi k / L`; the usual
//! aliasing caveat applies to data with tails beyond the Nyquist frequency.
//!
//! Transform convention: `forward_transform` is the raw unnormalized DFT with
//! the `e^{-i x xi}` sign (matching the analytic transform), and
//! `backward_transform` carries the `1/n_points` factor. Quadrature-facing
//! operations rescale coefficients by `dx` internally so that the discrete
//! Sobolev norm at `s = 0` reproduces the physical-space squared norm
//! `sum |u_j|^2 dx` exactly (normalization constant 1, asserted by tests).

use crate::core::{CoreError, ModelParams, MomentVector, RunMode};
use crate::moments::{self, bracket};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Periodic spatial grid: `n_points` samples on a box of the given length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n_points: usize,
    length: f64,
}

impl SpatialGrid {
    /// `n_points` must be a power of two, at least 8; `length` positive.
    pub fn new(n_points: usize, length: f64) -> Result<Self, SpectralError> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(SpectralError::GridSize { n_points });
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(SpectralError::NonPositiveLength { length });
        }
        Ok(SpatialGrid { n_points, length })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Frequency-lattice spacing `2 pi / L`.
    pub fn delta_xi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Wavenumber of DFT bin `k`, in FFT layout: bins `0..n/2` carry
    /// frequencies `0, 1, ..., n/2 - 1` times `2 pi / L`, bins `n/2..n`
    /// carry `-n/2, ..., -1` times `2 pi / L`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n_points;
        let signed = if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        };
        signed as f64 * self.delta_xi()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavenumber(k)).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points).map(|j| j as f64 * dx).collect()
    }
}

/// Sampled Cauchy data or solution state: `u` and its time derivative `v`
/// on a common grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: SpatialGrid,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub t: f64,
}

impl FieldSnapshot {
    pub fn new(
        grid: SpatialGrid,
        u: Vec<Complex64>,
        v: Vec<Complex64>,
        t: f64,
    ) -> Result<Self, SpectralError> {
        if u.len() != grid.n_points() || v.len() != grid.n_points() {
            let got = if u.len() != grid.n_points() {
                u.len()
            } else {
                v.len()
            };
            return Err(SpectralError::LengthMismatch {
                expected: grid.n_points(),
                got,
            });
        }
        Ok(FieldSnapshot { grid, u, v, t })
    }

    /// Zero data on the grid.
    pub fn zero(grid: SpatialGrid) -> Self {
        let n = grid.n_points();
        FieldSnapshot {
            grid,
            u: vec![Complex64::new(0.0, 0.0); n],
            v: vec![Complex64::new(0.0, 0.0); n],
            t: 0.0,
        }
    }
}

/// Raw DFT coefficients of both components of a snapshot, bin-aligned with
/// `SpatialGrid::wavenumbers`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpectrum {
    pub u_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
}

/// Gevrey-class profile `u_hat(xi) = e^{-c |xi|^{1/s}}`: the Fourier-decay
/// characterization of Gevrey order `s`. `s = 1` is the analytic class;
/// larger `s` decays slower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyDatum {
    pub s: f64,
    pub c: f64,
}

impl GevreyDatum {
    pub fn new(s: f64, c: f64) -> Result<Self, SpectralError> {
        if !(s >= 1.0) || !s.is_finite() {
            return Err(SpectralError::InvalidGevreyOrder { s });
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(SpectralError::NonPositiveDecay { c });
        }
        Ok(GevreyDatum { s, c })
    }

    /// Profile amplitude at frequency `xi`; `amplitude(0) = 1`, monotone
    /// decreasing in `|xi|`.
    pub fn amplitude(&self, xi: f64) -> f64 {
        (-self.c * xi.abs().powf(1.0 / self.s)).exp()
    }
}

/// Phase assignment for synthesized spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseRule {
    /// All coefficients real and positive.
    Zero,
    /// Uniform random phases, conjugate-symmetric so the physical field is
    /// real; fully determined by the seed.
    Random { seed: u64 },
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("n_points = {n_points} is invalid: need a power of two >= 8")]
    GridSize { n_points: usize },
    #[error("grid length must be positive and finite, got {length}")]
    NonPositiveLength { length: f64 },
    #[error("sample array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("Gevrey order must satisfy s >= 1, got {s}")]
    InvalidGevreyOrder { s: f64 },
    #[error("Gevrey decay constant must be positive, got {c}")]
    NonPositiveDecay { c: f64 },
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn run_fft(samples: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(samples.len())
    } else {
        planner.plan_fft_forward(samples.len())
    };
    fft.process(samples);
}

/// Raw forward DFT of both components: bin `k` holds
/// `sum_j f_j e^{-i x_j xi_k}` (no normalization).
pub fn forward_transform(f: &FieldSnapshot) -> Result<FieldSpectrum, SpectralError> {
    let n = f.grid.n_points();
    if f.u.len() != n || f.v.len() != n {
        return Err(SpectralError::LengthMismatch {
            expected: n,
            got: f.u.len(),
        });
    }
    let mut u_hat = f.u.clone();
    let mut v_hat = f.v.clone();
    run_fft(&mut u_hat, false);
    run_fft(&mut v_hat, false);
    Ok(FieldSpectrum { u_hat, v_hat })
}

/// Inverse of `forward_transform`: carries the `1/n_points` factor, so the
/// round trip is the identity up to rounding.
pub fn backward_transform(
    grid: &SpatialGrid,
    spectrum: &FieldSpectrum,
    t: f64,
) -> Result<FieldSnapshot, SpectralError> {
    let n = grid.n_points();
    if spectrum.u_hat.len() != n || spectrum.v_hat.len() != n {
        return Err(SpectralError::LengthMismatch {
            expected: n,
            got: spectrum.u_hat.len(),
        });
    }
    let scale = 1.0 / n as f64;
    let mut u = spectrum.u_hat.clone();
    let mut v = spectrum.v_hat.clone();
    run_fft(&mut u, true);
    run_fft(&mut v, true);
    for z in u.iter_mut().chain(v.iter_mut()) {
        *z *= scale;
    }
    FieldSnapshot::new(*grid, u, v, t)
}

/// Builds a snapshot whose `u` component has the exact raw-DFT coefficients
/// `amplitude(xi_k) * phase_k` of the Gevrey profile (and `v = 0`).
///
/// With `PhaseRule::Zero` the spectrum is real; with seeded random phases the
/// bins are conjugate-symmetric (`phase(-xi) = -phase(xi)`, DC and Nyquist
/// real), so the physical samples are real either way.
pub fn synthesize_gevrey(
    datum: &GevreyDatum,
    grid: &SpatialGrid,
    phases: PhaseRule,
) -> Result<FieldSnapshot, SpectralError> {
    GevreyDatum::new(datum.s, datum.c)?;
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    coeffs[0] = Complex64::new(datum.amplitude(0.0), 0.0);
    coeffs[n / 2] = Complex64::new(datum.amplitude(grid.wavenumber(n / 2)), 0.0);
    let mut rng = match phases {
        PhaseRule::Zero => None,
        PhaseRule::Random { seed } => Some(ChaCha12Rng::seed_from_u64(seed)),
    };
    for k in 1..n / 2 {
        let a = datum.amplitude(grid.wavenumber(k));
        let phi = match rng.as_mut() {
            None => 0.0,
            Some(r) => {
                let x = r.next_u64();
                (x >> 11) as f64 * (1.0 / 9007199254740992.0) * std::f64::consts::TAU
            }
        };
        coeffs[k] = Complex64::from_polar(a, phi);
        coeffs[n - k] = Complex64::from_polar(a, -phi);
    }
    let zeros = vec![Complex64::new(0.0, 0.0); n];
    let spectrum = FieldSpectrum {
        u_hat: coeffs,
        v_hat: zeros,
    };
    backward_transform(grid, &spectrum, 0.0)
}

/// Discrete Sobolev norm of raw-DFT coefficients:
/// `(1/2pi) sum_k <xi_k>^{2s} |dx * c_k|^2 dxi`.
///
/// At `s = 0` this equals the physical-space squared norm `sum_j |f_j|^2 dx`
/// exactly (discrete Parseval; normalization constant 1).
pub fn sobolev_norm_sq(coeffs: &[Complex64], s: f64, grid: &SpatialGrid) -> f64 {
    let dx = grid.dx();
    let dxi = grid.delta_xi();
    let scale = dx * dx * dxi / std::f64::consts::TAU;
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let w = bracket(grid.wavenumber(k)).powf(2.0 * s);
        acc += w * c.norm_sqr();
    }
    acc * scale
}

/// Physical-space squared norm `sum_j |f_j|^2 dx`.
pub fn physical_norm_sq(grid: &SpatialGrid, samples: &[Complex64]) -> f64 {
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()
}

/// Expected Sobolev norms of the evolved field at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevMoments {
    pub t: f64,
    /// `E || U(t) ||^2` in `H^s`.
    pub u_norm_sq: f64,
    /// `E || V(t) ||^2` in `H^{s - 1/2}`.
    pub v_norm_sq: f64,
}

/// Evolves the second moments of every mode of the initial snapshot
/// (`u = phi0`, `v = phi1`, deterministic data) and assembles the expected
/// Sobolev norms `E||U(t)||^2_{H^s}` and `E||V(t)||^2_{H^{s-1/2}}` at each
/// requested time.
///
/// Per-mode initial moments are `(|phi0_hat|^2, Re(conj(phi0_hat) phi1_hat),
/// |phi1_hat|^2)` with coefficients in continuum scaling (`dx` times the raw
/// DFT); mode degeneracies are absorbed by the exact propagator's fallback,
/// so the assembly itself cannot fail.
pub fn evolve_field_moments(
    init: &FieldSnapshot,
    params: &ModelParams,
    s: f64,
    t_grid: &[f64],
) -> Result<Vec<SobolevMoments>, SpectralError> {
    params.validate(RunMode::Deterministic)?;
    let spectrum = forward_transform(init)?;
    let grid = &init.grid;
    let dx = grid.dx();
    let dxi = grid.delta_xi();
    let quad = dxi / std::f64::consts::TAU;
    let sigma = params.sigma;

    // Per-mode contribution rows, merged in bin order for determinism.
    let per_mode: Vec<Vec<(f64, f64)>> = (0..grid.n_points())
        .into_par_iter()
        .map(|k| {
            let xi = grid.wavenumber(k);
            let u0 = dx * spectrum.u_hat[k];
            let v0 = dx * spectrum.v_hat[k];
            let m0 = MomentVector::new(u0.norm_sqr(), (u0.conj() * v0).re, v0.norm_sqr());
            let wu = bracket(xi).powf(2.0 * s);
            let wv = bracket(xi).powf(2.0 * s - 1.0);
            t_grid
                .iter()
                .map(|&t| {
                    let m = moments::propagate_second_moments(&m0, xi, sigma, t);
                    (wu * m.m1, wv * m.m3)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let mut su = 0.0;
        let mut sv = 0.0;
        for row in &per_mode {
            su += row[i].0;
            sv += row[i].1;
        }
        out.push(SobolevMoments {
            t,
            u_norm_sq: su * quad,
            v_norm_sq: sv * quad,
        });
    }
    Ok(out)
}
