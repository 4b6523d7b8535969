//! Numerical certification of the lemma-level claims behind the moment
//! engine: the uniform spectral abscissa bound, the large-frequency
//! coefficient bounds, control of eigenbasis coefficients by the weighted
//! energy, explicit global constants `(C1, C2)` for
//! `F(t; xi) <= C1 e^{C2 t} F(0; xi)`, the Gevrey threshold contrast between
//! the noiseless and noisy systems, and mean-square time continuity.
//!
//! Every check reports its grid, raw extremum, asserted bound, and margin so
//! a report is recomputable evidence on its own. The global-constant
//! pipeline never fits a free prefactor to the tail: `C1` is assembled from
//! the compact-patch propagator norm and the coefficient-control constant,
//! both of which are theory-backed, and the certificate is then re-checked
//! on a refined grid. Run with `sigma = 0` the same pipeline fails honestly,
//! which is the point: noise is what makes the certificate exist.

use crate::core::{tol, CoreError, MomentVector};
use crate::moments::{
    self, bracket, eigen_data, gamma, lambda_plus_re, propagate_second_moments,
    spectral_abscissa_bound, weighted_energy, Mat3, MomentError,
};
use crate::spectral::{GevreyDatum, SpectralError};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frequency grid for bound sweeps: sorted, deduplicated, finite.
#[derive(Debug, Clone, PartialEq)]
pub struct XiGrid {
    points: Vec<f64>,
}

impl XiGrid {
    /// Symmetric mixed linear/log grid on `[-xi_max, xi_max]`.
    ///
    /// A linear core resolves the small-frequency structure (it always
    /// contains 0 and, for `sigma > 0`, the abscissa peak `2 sigma^{-4/3}`
    /// exactly); logarithmic flanks reach the endpoints, which are also
    /// included exactly.
    pub fn standard(xi_max: f64, n_points: usize, sigma: f64) -> Result<Self, VerifyError> {
        if !(xi_max > 0.0) || !xi_max.is_finite() {
            return Err(VerifyError::InvalidRange {
                xi_min: -xi_max,
                xi_max,
            });
        }
        if n_points < 16 {
            return Err(VerifyError::GridTooSmall {
                min: 16,
                got: n_points,
            });
        }
        let peak = if sigma > 0.0 {
            2.0 * sigma.powf(-4.0 / 3.0)
        } else {
            1.0
        };
        let lin_edge = (3.0 * peak).max(10.0).min(xi_max);
        let half = n_points / 2;
        let n_lin = half / 2;
        let n_log = half - n_lin;
        let mut pts = Vec::with_capacity(n_points + 8);
        for i in 0..=n_lin {
            pts.push(lin_edge * i as f64 / n_lin as f64);
        }
        if lin_edge < xi_max {
            let ratio = xi_max / lin_edge;
            for i in 1..=n_log {
                pts.push(lin_edge * ratio.powf(i as f64 / n_log as f64));
            }
        }
        for x in [0.0, xi_max] {
            pts.push(x);
        }
        if sigma > 0.0 && peak <= xi_max {
            pts.push(peak);
        }
        let mirrored: Vec<f64> = pts.iter().map(|&x| -x).collect();
        pts.extend(mirrored);
        Self::from_points(pts)
    }

    pub fn from_points(mut pts: Vec<f64>) -> Result<Self, VerifyError> {
        if pts.iter().any(|x| !x.is_finite()) || pts.is_empty() {
            return Err(VerifyError::GridTooSmall {
                min: 1,
                got: 0,
            });
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        Ok(XiGrid { points: pts })
    }

    /// Inserts `factor - 1` equispaced midpoints in every cell. The original
    /// points are kept, so refinement only adds evaluation sites.
    pub fn refine(&self, factor: usize) -> XiGrid {
        let factor = factor.max(1);
        let mut pts = Vec::with_capacity(self.points.len() * factor);
        for w in self.points.windows(2) {
            pts.push(w[0]);
            for j in 1..factor {
                pts.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
            }
        }
        pts.push(*self.points.last().unwrap());
        XiGrid { points: pts }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n_points: self.points.len(),
            xi_min: *self.points.first().unwrap(),
            xi_max: *self.points.last().unwrap(),
        }
    }
}

/// Compact description of the grid a report was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub xi_min: f64,
    pub xi_max: f64,
}

/// Self-contained record of one bound check:
/// `pass` holds exactly when `observed <= asserted + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claim: String,
    pub grid: GridSpec,
    pub observed: f64,
    pub asserted: f64,
    pub tolerance: f64,
    pub margin: f64,
    pub pass: bool,
    /// Location of the extremum, when the claim has one.
    pub observed_at: Option<f64>,
}

impl BoundReport {
    fn evaluate(
        claim: &str,
        grid: GridSpec,
        observed: f64,
        asserted: f64,
        tolerance: f64,
        observed_at: Option<f64>,
    ) -> Self {
        BoundReport {
            claim: claim.to_string(),
            grid,
            observed,
            asserted,
            tolerance,
            margin: asserted + tolerance - observed,
            pass: observed <= asserted + tolerance,
            observed_at,
        }
    }
}

/// Explicit certified constants for the uniform weighted-energy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConstants {
    pub c1: f64,
    pub c2: f64,
    /// Split frequency: eigenbasis coefficient control takes over on the
    /// growing tail `xi >= xi0`; the patch and the decaying negative
    /// frequencies are covered by the propagator norm.
    pub xi0: f64,
    /// Safety-factored scaled propagator-norm constant
    /// `2 max_t ||W e^{tA} W^{-1}||_1` over `xi <= xi0`.
    pub m_patch: f64,
    /// Fitted coefficient-control constant on the growing tail.
    pub c_qf: f64,
    pub sigma: f64,
    pub horizon: f64,
}

/// One cutoff row of the Gevrey threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub cutoff: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Last doubling multiplied the truncated norm by more than 10.
    Divergent,
    /// Last doubling changed the truncated norm by less than 1%.
    Stable,
    /// Between the two thresholds; the cutoff ladder does not separate.
    Inconclusive,
}

/// Truncated-norm table over frequency cutoffs plus the growth verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub sigma: f64,
    pub s_data: f64,
    pub horizon: f64,
    pub rows: Vec<CutoffRow>,
    pub verdict: Verdict,
}

/// Mean-square increment rows and the fitted continuity order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub t0: f64,
    pub rows: Vec<ContinuityRow>,
    pub slope: f64,
    pub monotone: bool,
    pub report: BoundReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub delta: f64,
    pub increment: f64,
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(
        "certificate violated at t={worst_t}, xi={worst_xi}: growth ratio \
         {growth_ratio:.6e} exceeds C1 e^(C2 t) by factor {excess:.6e}"
    )]
    CertificationFailure {
        worst_t: f64,
        worst_xi: f64,
        /// `F(t)/F(0)` at the worst point.
        growth_ratio: f64,
        /// `F(t) / (C1 e^{C2 t} F(0))` at the worst point.
        excess: f64,
    },
    #[error("frequency range invalid: need 1 <= xi_min < xi_max, got [{xi_min}, {xi_max}]")]
    InvalidRange { xi_min: f64, xi_max: f64 },
    #[error("cutoff list must be strictly increasing with at least two entries")]
    InvalidCutoffs,
    #[error("delta list must be strictly decreasing, positive, with at least two entries")]
    InvalidDeltas,
    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("no usable (grid point, sample) pair with positive initial energy")]
    NoUsableSamples,
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Compact-patch boundary used by the certificate: `max(1, 4 sigma^{-4/3})`
/// for `sigma > 0` (twice the abscissa peak), floor 1 without noise.
pub fn default_patch_boundary(sigma: f64) -> f64 {
    if sigma > 0.0 {
        (4.0 * sigma.powf(-4.0 / 3.0)).max(1.0)
    } else {
        1.0
    }
}

/// Sweeps `Re lambda_plus` over the grid and checks the three facets of the
/// abscissa claim: the uniform bound `2 sigma^{-2/3}`, the location of the
/// maximizer at `2 sigma^{-4/3}`, and nonpositivity on `xi <= 0`.
pub fn verify_lambda_bound(sigma: f64, grid: &XiGrid) -> Result<Vec<BoundReport>, VerifyError> {
    let (bound, peak) = spectral_abscissa_bound(sigma)?;
    let gspec = grid.spec();
    let pts = grid.points();

    let mut max_re = f64::NEG_INFINITY;
    let mut argmax = 0usize;
    let mut max_left = f64::NEG_INFINITY;
    let mut has_left = false;
    for (i, &xi) in pts.iter().enumerate() {
        let re = lambda_plus_re(xi, sigma);
        if re > max_re {
            max_re = re;
            argmax = i;
        }
        if xi <= 0.0 {
            has_left = true;
            max_left = max_left.max(re);
        }
    }

    let abscissa = BoundReport::evaluate(
        "lambda-abscissa",
        gspec,
        max_re,
        bound,
        tol::ABSCISSA_ABS,
        Some(pts[argmax]),
    );

    // Peak location: the maximizer must land within one cell of the nearest
    // grid point to the analytic peak.
    let nearest = pts
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - peak)
                .abs()
                .partial_cmp(&(b.1 - peak).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let cell = pts[argmax.max(nearest)] - pts[argmax.min(nearest)];
    let lo = nearest.saturating_sub(1);
    let hi = (nearest + 1).min(pts.len() - 1);
    let cell_width = (pts[hi] - pts[lo]).max(f64::MIN_POSITIVE);
    let location = BoundReport::evaluate(
        "lambda-peak-location",
        gspec,
        cell,
        cell_width,
        0.0,
        Some(pts[argmax]),
    );

    let left = BoundReport::evaluate(
        "lambda-left-halfplane",
        gspec,
        if has_left { max_left } else { 0.0 },
        0.0,
        tol::ABSCISSA_ABS,
        None,
    );

    Ok(vec![abscissa, location, left])
}

/// The five large-frequency coefficient bounds, as scaled quantities with
/// finite limits: each `q(xi) |xi|^p` stays below its asymptotic value and
/// approaches it at the right edge of the range.
pub fn verify_coefficient_bounds(
    sigma: f64,
    xi_min: f64,
    xi_max: f64,
) -> Result<Vec<BoundReport>, VerifyError> {
    if !(xi_min >= 1.0) || !(xi_max > xi_min) || !xi_max.is_finite() {
        return Err(VerifyError::InvalidRange { xi_min, xi_max });
    }
    if !(sigma > 0.0) {
        return Err(VerifyError::Moment(MomentError::NonPositiveSigma { sigma }));
    }
    let n = 4000usize;
    let ratio = xi_max / xi_min;
    let pts: Vec<f64> = (0..=n)
        .map(|i| xi_min * ratio.powf(i as f64 / n as f64))
        .collect();
    let gspec = GridSpec {
        n_points: pts.len(),
        xi_min,
        xi_max,
    };

    let s2 = sigma * sigma;
    let s4 = s2 * s2;
    // (claim, power p, asymptotic limit, evaluator for the raw quantity)
    type Quantity = fn(f64, f64) -> f64;
    let quantity_inv_delta: Quantity = |xi, sigma| {
        let (_, _, delta) = moments::eigenvalues(xi, sigma);
        1.0 / delta.norm()
    };
    let quantity_lm_over_delta: Quantity = |xi, sigma| {
        let (_, lm, delta) = moments::eigenvalues(xi, sigma);
        (lm / delta).norm()
    };
    let quantity_lm_over_xi_delta: Quantity = |xi, sigma| {
        let (_, lm, delta) = moments::eigenvalues(xi, sigma);
        (lm / delta).norm() / xi.abs()
    };
    let quantity_lp_over_delta: Quantity = |xi, sigma| {
        let (lp, _, delta) = moments::eigenvalues(xi, sigma);
        (lp / delta).norm()
    };
    let quantity_lp_over_xi_delta: Quantity = |xi, sigma| {
        let (lp, _, delta) = moments::eigenvalues(xi, sigma);
        (lp / delta).norm() / xi.abs()
    };
    let cases: [(&str, f64, f64, Quantity); 5] = [
        ("coef-inv-delta", 2.0, 2.0 / s2, quantity_inv_delta),
        ("coef-lminus-over-delta", 0.0, 1.0, quantity_lm_over_delta),
        ("coef-lminus-over-xi-delta", 1.0, 1.0, quantity_lm_over_xi_delta),
        ("coef-lplus-over-delta", 3.0, 16.0 / s4, quantity_lp_over_delta),
        ("coef-lplus-over-xi-delta", 4.0, 16.0 / s4, quantity_lp_over_xi_delta),
    ];

    let mut out = Vec::with_capacity(cases.len());
    for (claim, p, limit, f) in cases {
        let mut max_scaled = f64::NEG_INFINITY;
        let mut at = xi_min;
        for &xi in &pts {
            let scaled = f(xi, sigma) * xi.powf(p);
            if scaled > max_scaled {
                max_scaled = scaled;
                at = xi;
            }
        }
        let edge = f(xi_max, sigma) * xi_max.powf(p);
        let mut report = BoundReport::evaluate(
            claim,
            gspec,
            max_scaled,
            limit,
            1e-9 * limit,
            Some(at),
        );
        // Boundedness alone is not the lemma: the scaled quantity must also
        // approach its finite limit at the right edge.
        if (edge - limit).abs() > 0.05 * limit {
            report.pass = false;
        }
        out.push(report);
    }
    Ok(out)
}

/// Canonical cone-valid initial-moment family: corner cases, eigendirection-
/// aligned boundary samples `(1, sqrt(m3), m3)`, then seeded random samples
/// filling up to `n`. The zero vector is included deliberately; fitters must
/// skip it.
pub fn sample_m0_family(seed: u64, n: usize) -> Vec<MomentVector> {
    let mut out = vec![
        MomentVector::ZERO,
        MomentVector::new(1.0, 0.0, 0.0),
        MomentVector::new(0.0, 0.0, 1.0),
        MomentVector::new(1.0, 1.0, 1.0),
        MomentVector::new(1.0, -1.0, 1.0),
        MomentVector::new(2.0, 0.0, 0.5),
    ];
    for m3 in [0.25, 1.0, 4.0, 16.0, 64.0, 256.0, 1024.0] {
        out.push(MomentVector::new(1.0, f64::sqrt(m3), m3));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let unit = |r: &mut ChaCha12Rng| (r.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
    while out.len() < n {
        let m1 = 4.0 * unit(&mut rng);
        let m3 = 4.0 * unit(&mut rng);
        let rho = 2.0 * unit(&mut rng) - 1.0;
        out.push(MomentVector::new(m1, rho * (m1 * m3).sqrt(), m3));
    }
    out.truncate(n);
    out
}

/// Worst-case tail datum at one frequency: the initial moment vector aligned
/// with the growing eigendirection `(1, lambda_plus/2, xi)`. Cone-valid for
/// `xi > 0` because `lambda_plus <= 2 sqrt(xi)`.
fn aligned_sample(xi: f64, sigma: f64) -> Option<MomentVector> {
    if xi <= 0.0 {
        return None;
    }
    let (lp, _, _) = moments::eigenvalues(xi, sigma);
    Some(MomentVector::new(1.0, 0.5 * lp.re, xi))
}

fn qf_fit(
    sigma: f64,
    pts: &[f64],
    samples: &[MomentVector],
    tail_start: f64,
    include_aligned: bool,
) -> Result<(f64, f64), VerifyError> {
    let mut best = f64::NEG_INFINITY;
    let mut at = 0.0;
    let mut usable = false;
    for &xi in pts {
        // Coefficient control is fitted on the growing tail only. Negative
        // frequencies carry no growth and are covered by the propagator-norm
        // constant; crucially, the spectrum degenerates at one negative
        // frequency (where the discriminant vanishes) and no uniform
        // eigenbasis constant exists near it, while for positive `xi` the
        // discriminant is bounded away from zero.
        if xi < tail_start {
            continue;
        }
        let eigen = match eigen_data(xi, sigma) {
            Ok(e) => e,
            // Degenerate frequencies have no eigenbasis; the fit is over the
            // nondegenerate set, which is all the lemma speaks about.
            Err(MomentError::DegenerateSpectrum { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let aligned = if include_aligned {
            aligned_sample(xi, sigma)
        } else {
            None
        };
        for m0 in samples.iter().chain(aligned.iter()) {
            let f0 = weighted_energy(m0, xi);
            if f0 <= 0.0 {
                continue;
            }
            let q = moments::decompose_initial(m0, &eigen)?;
            let sum = q.q0.norm() + q.q_plus.norm() + q.q_minus.norm();
            usable = true;
            if sum / f0 > best {
                best = sum / f0;
                at = xi;
            }
        }
    }
    if !usable {
        return Err(VerifyError::NoUsableSamples);
    }
    Ok((best, at))
}

/// Fits the smallest constant with
/// `|q0| + |q_plus| + |q_minus| <= C F(0; xi)` over the growing tail
/// `xi >= xi0` of the grid and the sample family, and checks the fit is
/// stable under grid refinement.
pub fn verify_qf_control(
    sigma: f64,
    grid: &XiGrid,
    samples: &[MomentVector],
) -> Result<BoundReport, VerifyError> {
    for m0 in samples {
        if m0.norm_inf() > 0.0 {
            m0.validate()?;
        }
    }
    let xi0 = default_patch_boundary(sigma);
    let (coarse, _) = qf_fit(sigma, grid.points(), samples, xi0, false)?;
    let refined_grid = grid.refine(2);
    let (refined, at) = qf_fit(sigma, refined_grid.points(), samples, xi0, false)?;
    // Refinement only adds evaluation points, so `refined >= coarse`;
    // stability means the fitted constant grew by at most 5%.
    let report = BoundReport::evaluate(
        "qf-coefficient-control",
        refined_grid.spec(),
        refined,
        1.05 * coarse,
        0.0,
        Some(at),
    );
    Ok(report)
}

/// Propagator matrix `e^{t A(xi)}` assembled column-by-column from the
/// library's own moment evolution, so certificates are checked against
/// exactly what the engine computes.
fn propagator_columns(xi: f64, sigma: f64, t: f64) -> Mat3 {
    let basis = [
        MomentVector::new(1.0, 0.0, 0.0),
        MomentVector::new(0.0, 1.0, 0.0),
        MomentVector::new(0.0, 0.0, 1.0),
    ];
    let mut p = [[0.0f64; 3]; 3];
    for (j, e) in basis.iter().enumerate() {
        let col = propagate_second_moments(e, xi, sigma, t);
        p[0][j] = col.m1;
        p[1][j] = col.m2;
        p[2][j] = col.m3;
    }
    p
}

fn apply(p: &Mat3, m: &MomentVector) -> MomentVector {
    MomentVector::new(
        p[0][0] * m.m1 + p[0][1] * m.m2 + p[0][2] * m.m3,
        p[1][0] * m.m1 + p[1][1] * m.m2 + p[1][2] * m.m3,
        p[2][0] * m.m1 + p[2][1] * m.m2 + p[2][2] * m.m3,
    )
}

/// `||W e^{tA} W^{-1}||_1` with `W = diag(1, <xi>^{-1/2}, <xi>^{-1})`.
///
/// This scaling symmetrizes the hyperbolic structure: the eigenbasis of the
/// conjugated generator stays uniformly conditioned as `|xi|` grows, so the
/// norm admits a frequency-independent bound wherever the spectrum does not
/// cross into the right half-plane.
fn weighted_propagator_norm(xi: f64, sigma: f64, t: f64) -> f64 {
    let p = propagator_columns(xi, sigma, t);
    let h = bracket(xi);
    let w = [1.0, 1.0 / h.sqrt(), 1.0 / h];
    let mut max_col = 0.0f64;
    for j in 0..3 {
        let mut col = 0.0;
        for i in 0..3 {
            col += (w[i] * p[i][j] / w[j]).abs();
        }
        max_col = max_col.max(col);
    }
    max_col
}

struct CertificateExcess {
    excess: f64,
    growth_ratio: f64,
    t: f64,
    xi: f64,
}

/// Worst violation factor of `F(t) <= c1 e^{c2 t} F(0)` over
/// grid x samples x times; per-frequency aligned worst-case data included.
fn worst_certificate_excess(
    c1: f64,
    c2: f64,
    sigma: f64,
    grid: &XiGrid,
    samples: &[MomentVector],
    ts: &[f64],
) -> CertificateExcess {
    let per_xi: Vec<CertificateExcess> = grid
        .points()
        .par_iter()
        .map(|&xi| {
            let mut worst = CertificateExcess {
                excess: f64::NEG_INFINITY,
                growth_ratio: 0.0,
                t: 0.0,
                xi,
            };
            let aligned = aligned_sample(xi, sigma);
            for &t in ts {
                let p = propagator_columns(xi, sigma, t);
                let envelope = c1 * (c2 * t).exp();
                for m0 in samples.iter().chain(aligned.iter()) {
                    let f0 = weighted_energy(m0, xi);
                    if f0 <= 0.0 {
                        continue;
                    }
                    let ft = weighted_energy(&apply(&p, m0), xi);
                    let excess = ft / (envelope * f0);
                    if excess > worst.excess {
                        worst = CertificateExcess {
                            excess,
                            growth_ratio: ft / f0,
                            t,
                            xi,
                        };
                    }
                }
            }
            worst
        })
        .collect();
    per_xi
        .into_iter()
        .max_by(|a, b| a.excess.partial_cmp(&b.excess).unwrap())
        .unwrap_or(CertificateExcess {
            excess: 0.0,
            growth_ratio: 0.0,
            t: 0.0,
            xi: 0.0,
        })
}

fn uniform_times(n: usize, horizon: f64) -> Vec<f64> {
    (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect()
}

/// Produces certified global constants for
/// `F(t; xi) <= C1 e^{C2 t} F(0; xi)` on `[0, horizon]` x grid.
///
/// `C2` is the uniform spectral abscissa bound `2 sigma^{-2/3}` when noise
/// is present; without noise no uniform bound exists and the patch abscissa
/// stands in, which is exactly what the subsequent validation falsifies.
/// `C1` is assembled from theory-backed pieces only: a scaled propagator
/// norm (2x sampling safety factor) over the patch and the decaying
/// negative frequencies, cone geometry, and eigenbasis coefficient control
/// on the growing tail. No growing-tail prefactor is ever fitted to
/// observed growth, so a bogus certificate cannot pass. The certificate is
/// checked on the given grid and then re-checked on a 10x-refined
/// validation grid with twice the time resolution.
pub fn estimate_global_constants(
    sigma: f64,
    horizon: f64,
    grid: &XiGrid,
    samples: &[MomentVector],
) -> Result<GlobalConstants, VerifyError> {
    if !(horizon > 0.0) || !(sigma >= 0.0) {
        return Err(VerifyError::Core(CoreError::NonPositiveHorizon {
            horizon,
        }));
    }
    if grid.len() < 16 {
        return Err(VerifyError::GridTooSmall {
            min: 16,
            got: grid.len(),
        });
    }
    for m0 in samples {
        if m0.norm_inf() > 0.0 {
            m0.validate()?;
        }
    }
    let xi0 = default_patch_boundary(sigma);
    let c2 = if sigma > 0.0 {
        spectral_abscissa_bound(sigma)?.0
    } else {
        // Patch abscissa: max Re lambda_plus on |xi| <= xi0 is 2 sqrt(xi0).
        2.0 * xi0.sqrt()
    };

    // Propagator-norm constant over everything left of the growing tail:
    // 129 uniform xi-samples across the patch plus every grid point below
    // -xi0, 64 uniform t-samples (the map is smooth in both), 2x safety
    // factor on the max.
    let t_patch = uniform_times(64, horizon);
    let mut norm_sites: Vec<f64> = (0..129)
        .map(|i| -xi0 + 2.0 * xi0 * i as f64 / 128.0)
        .collect();
    norm_sites.extend(grid.points().iter().copied().filter(|&x| x < -xi0));
    let m_raw = norm_sites
        .par_iter()
        .map(|&xi| {
            t_patch
                .iter()
                .map(|&t| weighted_propagator_norm(xi, sigma, t))
                .fold(0.0f64, f64::max)
        })
        .reduce(|| 0.0f64, f64::max);
    let m_patch = 2.0 * m_raw;

    let (c_qf, _) = qf_fit(sigma, grid.points(), samples, xi0, true)?;

    // Left of the tail: cone geometry gives |m2| <= sqrt(m1 m3)
    // <= <xi>^{1/2} F / 2, hence F <= ||W m||_1 <= (3/2) F with
    // W = diag(1, <xi>^{-1/2}, <xi>^{-1}), and so
    // F(t) <= (3/2) ||W e^{tA} W^{-1}||_1 F(0). On the growing tail the
    // eigenbasis route gives F(t) <= 2 C_qF e^{C2 t} F(0), since each basis
    // response contributes at most 2 per unit coefficient and no branch
    // outruns e^{C2 t}.
    let c1_damped = 1.5 * m_patch;
    let c1_tail = 2.0 * c_qf;
    let c1 = c1_damped.max(c1_tail).max(1.0);

    let constants = GlobalConstants {
        c1,
        c2,
        xi0,
        m_patch,
        c_qf,
        sigma,
        horizon,
    };

    let t_cert = uniform_times(33, horizon);
    let worst = worst_certificate_excess(c1, c2, sigma, grid, samples, &t_cert);
    if worst.excess > 1.0 + tol::CERTIFICATE_REL {
        return Err(VerifyError::CertificationFailure {
            worst_t: worst.t,
            worst_xi: worst.xi,
            growth_ratio: worst.growth_ratio,
            excess: worst.excess,
        });
    }
    let validation = grid.refine(10);
    let t_val = uniform_times(65, horizon);
    let worst = worst_certificate_excess(c1, c2, sigma, &validation, samples, &t_val);
    if worst.excess > 1.0 + tol::CERTIFICATE_REL {
        return Err(VerifyError::CertificationFailure {
            worst_t: worst.t,
            worst_xi: worst.xi,
            growth_ratio: worst.growth_ratio,
            excess: worst.excess,
        });
    }
    Ok(constants)
}

/// Truncated second-moment norm `E||U(T)||^2` of the evolved Gevrey datum
/// `u0_hat(xi) = e^{-|xi|^{1/s_data}}`, `u1 = 0`, summed over the frequency
/// lattice `|xi_k| <= cutoff` for each cutoff, with a growth verdict from
/// the last doubling.
///
/// The contrast this realizes: without noise, mode `xi` grows like
/// `e^{2 sqrt(xi) t}` in second moment, so data decaying slower than
/// `e^{-2 sqrt(xi)}` (Gevrey order > 2) diverge as the cutoff grows, while
/// any `sigma > 0` caps the growth uniformly and the same data stay summable.
pub fn gevrey_threshold_demo(
    sigma: f64,
    s_data: f64,
    cutoffs: &[f64],
    horizon: f64,
) -> Result<ThresholdTable, VerifyError> {
    let datum = GevreyDatum::new(s_data, 1.0)?;
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] <= 0.0 {
        return Err(VerifyError::InvalidCutoffs);
    }
    // Fixed quadrature lattice, decoupled from any spatial grid so the
    // largest cutoff never aliases.
    let dxi = 2.0 * std::f64::consts::PI / 64.0;
    let xi_top = *cutoffs.last().unwrap();
    let k_max = (xi_top / dxi).floor() as i64;

    // Contribution of each lattice pair (+k, -k), in ascending |k|.
    let contrib: Vec<(f64, f64)> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let xi = k as f64 * dxi;
            let a = datum.amplitude(xi);
            let m0 = MomentVector::new(a * a, 0.0, 0.0);
            let plus = propagate_second_moments(&m0, xi, sigma, horizon).m1;
            let minus = if k == 0 {
                0.0
            } else {
                propagate_second_moments(&m0, -xi, sigma, horizon).m1
            };
            (xi, plus + minus)
        })
        .collect();

    let quad = dxi / std::f64::consts::TAU;
    let mut rows = Vec::with_capacity(cutoffs.len());
    let mut acc = 0.0;
    let mut idx = 0usize;
    for &cutoff in cutoffs {
        while idx < contrib.len() && contrib[idx].0 <= cutoff {
            acc += contrib[idx].1;
            idx += 1;
        }
        rows.push(CutoffRow {
            cutoff,
            norm: acc * quad,
        });
    }

    let last = rows[rows.len() - 1].norm;
    let prev = rows[rows.len() - 2].norm;
    let verdict = if last > 10.0 * prev {
        Verdict::Divergent
    } else if prev > 0.0 && (last / prev - 1.0).abs() < 0.01 {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };
    Ok(ThresholdTable {
        sigma,
        s_data,
        horizon,
        rows,
        verdict,
    })
}

/// Mean-square increment `E |U(t0 + delta) - U(t0)|^2` of one mode from
/// second moments and the real 2x2 mean propagator.
///
/// Conditioning on time `t0`, the conditional means of `(U, V)` evolve by
/// `G = [[-g, 1], [xi, 0]]`, and with `(a, b)` the first row of `e^{delta G}`
/// the increment reduces to
/// `m1(t0+delta) + (1 - 2a) m1(t0) - 2 b m2(t0)`; the imaginary part of the
/// cross moment drops out because `a, b` are real.
pub fn mean_square_increment(
    xi: f64,
    sigma: f64,
    m_t0: &MomentVector,
    m_t0_plus_delta: &MomentVector,
    delta: f64,
) -> f64 {
    let g = gamma(xi, sigma);
    let gen2 = [[-g, 1.0], [xi, 0.0]];
    let e = moments::expm(moments::scale_mat(&gen2, delta));
    let (a, b) = (e[0][0], e[0][1]);
    m_t0_plus_delta.m1 + (1.0 - 2.0 * a) * m_t0.m1 - 2.0 * b * m_t0.m2
}

/// Default mode-wise initial data for continuity checks: the Gaussian
/// profile `u0_hat(xi) = e^{-xi^2/4}` with zero initial velocity.
pub fn gaussian_mode_sampler(xi: f64) -> MomentVector {
    let a = (-xi * xi / 4.0).exp();
    MomentVector::new(a * a, 0.0, 0.0)
}

/// Assembles `sum_k <xi_k>^{2s} E|U(t0+delta) - U(t0)|^2 dxi / 2pi` over a
/// fixed frequency lattice for each delta and fits the log-log order. The
/// claim passes when the fitted slope is at least 0.9 (first-order modulus
/// of continuity in mean square).
pub fn verify_time_continuity(
    sigma: f64,
    s: f64,
    t0: f64,
    deltas: &[f64],
    sampler: impl Fn(f64) -> MomentVector + Sync,
) -> Result<ContinuityReport, VerifyError> {
    if deltas.len() < 2
        || deltas.windows(2).any(|w| w[1] >= w[0])
        || deltas.iter().any(|&d| !(d > 0.0))
    {
        return Err(VerifyError::InvalidDeltas);
    }
    if !(t0 >= 0.0) {
        return Err(VerifyError::Core(CoreError::NonPositiveHorizon {
            horizon: t0,
        }));
    }
    let dxi = 2.0 * std::f64::consts::PI / 64.0;
    let k_max = (32.0 / dxi).floor() as i64;
    let lattice: Vec<f64> = (-k_max..=k_max).map(|k| k as f64 * dxi).collect();
    let quad = dxi / std::f64::consts::TAU;

    let per_mode: Vec<Vec<f64>> = lattice
        .par_iter()
        .map(|&xi| {
            let m0 = sampler(xi);
            let w = bracket(xi).powf(2.0 * s);
            let m_t0 = propagate_second_moments(&m0, xi, sigma, t0);
            deltas
                .iter()
                .map(|&d| {
                    let m_t1 = propagate_second_moments(&m0, xi, sigma, t0 + d);
                    w * mean_square_increment(xi, sigma, &m_t0, &m_t1, d)
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(deltas.len());
    for (j, &delta) in deltas.iter().enumerate() {
        let mut acc = 0.0;
        for row in &per_mode {
            acc += row[j];
        }
        rows.push(ContinuityRow {
            delta,
            increment: acc * quad,
        });
    }

    let monotone = rows.windows(2).all(|w| w[1].increment < w[0].increment);
    let xs: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.increment.max(1e-300).ln())
        .collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    let report = BoundReport::evaluate(
        "time-continuity-order",
        GridSpec {
            n_points: lattice.len(),
            xi_min: -(k_max as f64) * dxi,
            xi_max: k_max as f64 * dxi,
        },
        -slope,
        -0.9,
        0.0,
        None,
    );
    Ok(ContinuityReport {
        t0,
        rows,
        slope,
        monotone,
        report,
    })
}
