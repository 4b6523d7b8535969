//! Exact second-moment transport for a single Fourier mode.
//!
//! Writing `m1 = E|u|^2`, `m2 = E Re(conj(u) v)`, `m3 = E|v|^2` for the mode
//! at frequency `xi`, the Ito form of the noisy system closes into the linear
//! ODE `dm/dt = A(xi) m` with
//!
//! ```text
//!            [ 0        2      0 ]
//! A(xi) =    [ xi   -g(xi)     1 ],      g(xi) = sigma^2 xi^2 / 2.
//!            [ 0      2 xi     0 ]
//! ```
//!
//! The damping `g` is exactly the Ito correction produced by the transport
//! noise; with `sigma = 0` it vanishes and positive frequencies grow like
//! `exp(2 sqrt(xi) t)`. `A` has eigenvalues `0` and
//! `lambda_pm = (-g ± Delta)/2`, `Delta = sqrt(g^2 + 16 xi)` (principal
//! branch), with eigenvectors `(1, 0, -xi)` and `(1, lambda_pm/2, xi)`.
//! Everything here works in that eigenbasis when it is well conditioned and
//! falls back to a scaling-and-squaring matrix exponential when it is not
//! (`xi = 0`, or `Delta` near zero).

use crate::core::{tol, MomentVector};
use num_complex::Complex64;
use thiserror::Error;

/// 3x3 real matrix in row-major layout.
pub type Mat3 = [[f64; 3]; 3];

/// `<xi> = sqrt(1 + xi^2)`, the weight pairing `m3` with `m1` in the
/// mode energy.
pub fn bracket(xi: f64) -> f64 {
    xi.hypot(1.0)
}

/// Second-moment generator `A(xi)` for noise amplitude `sigma`.
pub fn build_moment_matrix(xi: f64, sigma: f64) -> Mat3 {
    let g = gamma(xi, sigma);
    [[0.0, 2.0, 0.0], [xi, -g, 1.0], [0.0, 2.0 * xi, 0.0]]
}

/// Ito damping rate `sigma^2 xi^2 / 2`.
pub fn gamma(xi: f64, sigma: f64) -> f64 {
    0.5 * sigma * sigma * xi * xi
}

/// Eigenvalues `(lambda_plus, lambda_minus, delta)` of `A(xi)`, excluding
/// the trivial kernel value `0`.
///
/// Evaluated in a cancellation-free form: for a real spectral gap,
/// `lambda_plus = 8 xi / (g + Delta)` instead of the difference
/// `(Delta - g)/2`, which loses all precision once `g^2 >> 16 |xi|`.
/// Defined for every `xi` and `sigma >= 0`; at `xi = 0` all eigenvalues
/// collapse to zero.
pub fn eigenvalues(xi: f64, sigma: f64) -> (Complex64, Complex64, Complex64) {
    let g = gamma(xi, sigma);
    let disc = g * g + 16.0 * xi;
    if disc >= 0.0 {
        let delta = disc.sqrt();
        let s = g + delta;
        let lambda_plus = if s > 0.0 { 8.0 * xi / s } else { 0.0 };
        (
            Complex64::new(lambda_plus, 0.0),
            Complex64::new(-0.5 * s, 0.0),
            Complex64::new(delta, 0.0),
        )
    } else {
        let delta = Complex64::new(0.0, (-disc).sqrt());
        let half = 0.5 * delta.im;
        (
            Complex64::new(-0.5 * g, half),
            Complex64::new(-0.5 * g, -half),
            delta,
        )
    }
}

/// Real part of the leading eigenvalue; the mode's mean-square growth rate.
pub fn lambda_plus_re(xi: f64, sigma: f64) -> f64 {
    eigenvalues(xi, sigma).0.re
}

/// Spectral data of one mode: eigenvalues and eigenbasis of `A(xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigenData {
    pub xi: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub delta: Complex64,
    /// Kernel eigenvalue; always zero, kept for completeness of the record.
    pub lambda0: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Kernel direction `(1, 0, -xi)`.
    pub v0: [Complex64; 3],
    /// `(1, lambda_plus/2, xi)`.
    pub v_plus: [Complex64; 3],
    /// `(1, lambda_minus/2, xi)`.
    pub v_minus: [Complex64; 3],
}

/// Coefficients of a moment vector in the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenCoefficients {
    pub q0: Complex64,
    pub q_plus: Complex64,
    pub q_minus: Complex64,
}

#[derive(Debug, Error)]
pub enum MomentError {
    #[error(
        "spectral gap too small at xi={xi}, sigma={sigma} (|Delta|={delta_abs:.3e}); \
         the eigenbasis is ill-conditioned here"
    )]
    DegenerateSpectrum { xi: f64, sigma: f64, delta_abs: f64 },
    #[error("the xi=0 mode has a nilpotent generator with no eigenbasis expansion")]
    ZeroFrequency,
    #[error("sigma must be positive (got {sigma})")]
    NonPositiveSigma { sigma: f64 },
    #[error("eigenbasis reconstruction error {err:.3e} exceeds tolerance")]
    Reconstruction { err: f64 },
}

/// Builds the full eigenstructure of `A(xi)`.
///
/// Fails with `DegenerateSpectrum` when `|Delta| < 1e-8 (1 + gamma)`: at
/// `xi = 0` and on the curve `g^2 + 16 xi = 0` (for `sigma = 1` that is
/// `xi = -4`) the two branch eigenvectors coalesce and the expansion below
/// is meaningless.
pub fn eigen_data(xi: f64, sigma: f64) -> Result<ModeEigenData, MomentError> {
    let g = gamma(xi, sigma);
    let (lambda_plus, lambda_minus, delta) = eigenvalues(xi, sigma);
    if delta.norm() < tol::DEGENERATE_GAP * (1.0 + g) {
        return Err(MomentError::DegenerateSpectrum {
            xi,
            sigma,
            delta_abs: delta.norm(),
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let cxi = Complex64::new(xi, 0.0);
    Ok(ModeEigenData {
        xi,
        sigma,
        gamma: g,
        delta,
        lambda0: 0.0,
        lambda_plus,
        lambda_minus,
        v0: [one, Complex64::new(0.0, 0.0), -cxi],
        v_plus: [one, 0.5 * lambda_plus, cxi],
        v_minus: [one, 0.5 * lambda_minus, cxi],
    })
}

/// Expands `m0` in the eigenbasis of `A(xi)`:
/// `m0 = q0 v0 + q_plus v_plus + q_minus v_minus`.
///
/// The closed forms follow from solving the 3x3 system componentwise:
///
/// ```text
/// q0     = m1/2 - m3/(2 xi)
/// q_plus = -lambda_minus/(2 Delta) m1 + 2/Delta m2 - lambda_minus/(2 xi Delta) m3
/// q_minus =  lambda_plus/(2 Delta) m1 - 2/Delta m2 + lambda_plus/(2 xi Delta) m3
/// ```
///
/// Verified on return by reconstructing `m0` to relative `1e-10`.
pub fn decompose_initial(
    m0: &MomentVector,
    eigen: &ModeEigenData,
) -> Result<EigenCoefficients, MomentError> {
    if eigen.xi.abs() <= tol::ZERO_XI {
        return Err(MomentError::ZeroFrequency);
    }
    let xi = eigen.xi;
    let delta = eigen.delta;
    let m1 = Complex64::new(m0.m1, 0.0);
    let m2 = Complex64::new(m0.m2, 0.0);
    let m3 = Complex64::new(m0.m3, 0.0);

    let q0 = Complex64::new(0.5 * m0.m1 - 0.5 * m0.m3 / xi, 0.0);
    let q_plus =
        -eigen.lambda_minus / (2.0 * delta) * m1 + 2.0 / delta * m2
            - eigen.lambda_minus / (2.0 * xi * delta) * m3;
    let q_minus =
        eigen.lambda_plus / (2.0 * delta) * m1 - 2.0 / delta * m2
            + eigen.lambda_plus / (2.0 * xi * delta) * m3;
    let q = EigenCoefficients { q0, q_plus, q_minus };

    let mut err: f64 = 0.0;
    let scale = m0.norm_inf().max(f64::MIN_POSITIVE);
    for i in 0..3 {
        let rebuilt = q.q0 * eigen.v0[i] + q.q_plus * eigen.v_plus[i] + q.q_minus * eigen.v_minus[i];
        let target = [m0.m1, m0.m2, m0.m3][i];
        err = err.max((rebuilt - Complex64::new(target, 0.0)).norm());
    }
    if err > tol::RECONSTRUCT_REL * scale.max(1.0) * 10.0 {
        return Err(MomentError::Reconstruction { err });
    }
    Ok(q)
}

/// Closed-form moment evolution `m(t) = e^{t A(xi)} m0` through the
/// eigenbasis.
///
/// The kernel coefficient is constant in time (it carries the conserved
/// combination `m3 - xi m1`), while the branch coefficients are scaled by
/// `exp(lambda_pm t)`. Near the degenerate set the routine silently falls
/// back to the matrix exponential, so it is total for `sigma > 0`.
pub fn evolve_moments_exact(m0: &MomentVector, xi: f64, sigma: f64, t: f64) -> MomentVector {
    match eigen_evolve(m0, xi, sigma, t) {
        Some(m) => m,
        None => evolve_moments_expm(m0, xi, sigma, t),
    }
}

fn eigen_evolve(m0: &MomentVector, xi: f64, sigma: f64, t: f64) -> Option<MomentVector> {
    let eigen = eigen_data(xi, sigma).ok()?;
    let q = decompose_initial(m0, &eigen).ok()?;
    let ep = (eigen.lambda_plus * t).exp();
    let em = (eigen.lambda_minus * t).exp();
    let mut out = [0.0f64; 3];
    let mut imag: f64 = 0.0;
    for i in 0..3 {
        let z = q.q0 * eigen.v0[i] + q.q_plus * ep * eigen.v_plus[i] + q.q_minus * em * eigen.v_minus[i];
        out[i] = z.re;
        imag = imag.max(z.im.abs());
    }
    let scale = out.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    // A nonzero imaginary residue beyond roundoff means the complex-conjugate
    // pair did not cancel; distrust the expansion and let expm handle it.
    if imag > tol::IMAG_RESIDUE_REL * scale.max(1.0) {
        return None;
    }
    Some(sanitize(out, scale))
}

/// Moment evolution by dense matrix exponential; total for `sigma >= 0`.
pub fn evolve_moments_expm(m0: &MomentVector, xi: f64, sigma: f64, t: f64) -> MomentVector {
    let a = build_moment_matrix(xi, sigma);
    let e = expm(scale_mat(&a, t));
    let m = [m0.m1, m0.m2, m0.m3];
    let mut out = [0.0f64; 3];
    for i in 0..3 {
        out[i] = e[i][0] * m[0] + e[i][1] * m[1] + e[i][2] * m[2];
    }
    let scale = out.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    sanitize(out, scale)
}

/// Routes to the eigenbasis engine when noise is present and to the matrix
/// exponential for the deterministic baseline `sigma = 0`.
pub fn propagate_second_moments(m0: &MomentVector, xi: f64, sigma: f64, t: f64) -> MomentVector {
    if sigma > 0.0 {
        evolve_moments_exact(m0, xi, sigma, t)
    } else {
        evolve_moments_expm(m0, xi, sigma, t)
    }
}

/// Clamps roundoff-scale negative diagonal moments to zero.
fn sanitize(out: [f64; 3], scale: f64) -> MomentVector {
    let floor = -1e-12 * scale.max(1.0);
    let clamp = |x: f64| if x < 0.0 && x > floor { 0.0 } else { x };
    MomentVector::new(clamp(out[0]), out[1], clamp(out[2]))
}

/// Mode energy `F = m1 + <xi>^{-1} m3`.
pub fn weighted_energy(m: &MomentVector, xi: f64) -> f64 {
    m.m1 + m.m3 / bracket(xi)
}

/// Uniform growth bound for the noisy system: returns
/// `(2 sigma^{-2/3}, 2 sigma^{-4/3})`, the supremum of `Re lambda_plus`
/// over all real `xi` and the frequency attaining it.
pub fn spectral_abscissa_bound(sigma: f64) -> Result<(f64, f64), MomentError> {
    if !(sigma > 0.0) {
        return Err(MomentError::NonPositiveSigma { sigma });
    }
    Ok((2.0 * sigma.powf(-2.0 / 3.0), 2.0 * sigma.powf(-4.0 / 3.0)))
}

// ---------------------------------------------------------------------------
// Small dense matrix kernels. The sizes involved (2x2 mean propagator,
// 3x3 moment generator) never justify a linear algebra dependency.

pub(crate) fn mat_mul<const N: usize>(a: &[[f64; N]; N], b: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..N {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

pub(crate) fn one_norm<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..N {
        let mut col = 0.0;
        for row in a.iter().take(N) {
            col += row[j].abs();
        }
        best = best.max(col);
    }
    best
}

pub(crate) fn scale_mat<const N: usize>(a: &[[f64; N]; N], s: f64) -> [[f64; N]; N] {
    let mut c = *a;
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x *= s;
        }
    }
    c
}

fn identity<const N: usize>() -> [[f64; N]; N] {
    let mut c = [[0.0; N]; N];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    c
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
///
/// The argument is halved until its 1-norm is at most 0.5, the series is then
/// summed to machine convergence (it terminates exactly for nilpotent input,
/// e.g. `A(0)`), and the result squared back up.
pub(crate) fn expm<const N: usize>(b: [[f64; N]; N]) -> [[f64; N]; N] {
    let mu = one_norm(&b);
    let squarings = if mu > 0.5 {
        ((mu / 0.5).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let c = scale_mat(&b, 0.5f64.powi(squarings));
    let mut sum = identity();
    let mut term = identity();
    for k in 1..=26u32 {
        term = mat_mul(&term, &c);
        term = scale_mat(&term, 1.0 / k as f64);
        sum_add(&mut sum, &term);
        if one_norm(&term) <= f64::EPSILON * one_norm(&sum) {
            break;
        }
    }
    let mut e = sum;
    for _ in 0..squarings {
        e = mat_mul(&e, &e);
    }
    e
}

fn sum_add<const N: usize>(acc: &mut [[f64; N]; N], t: &[[f64; N]; N]) {
    for i in 0..N {
        for j in 0..N {
            acc[i][j] += t[i][j];
        }
    }
}
