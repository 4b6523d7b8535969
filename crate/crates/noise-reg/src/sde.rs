//! Pathwise simulation of a single Fourier mode.
//!
//! The Ito form of the mode dynamics is
//!
//! ```text
//! dU = (V - g U) dt + i sigma xi U dB,      g = sigma^2 xi^2 / 2,
//! dV = xi U dt,
//! ```
//!
//! equivalently (Stratonovich) `dU = V dt + i sigma xi U o dB`. Two explicit
//! weak-order-one schemes are provided: Euler-Maruyama on the Ito form, whose
//! drift carries the `-g U` correction explicitly, and a Heun
//! predictor-corrector on the Stratonovich form, which regenerates the same
//! correction through the averaged diffusion term. Agreement of their sampled
//! moments is therefore a direct numerical test of the correction itself.
//!
//! Reproducibility contract: every `(mode_index, path_index)` pair draws from
//! its own counter-keyed stream (see `core::SeedPolicy`), each step consumes
//! exactly one standard normal obtained by inverse transform sampling, and
//! accumulation is compensated and merged in fixed path order over
//! fixed-size batches. Results are bitwise independent of the number of
//! worker threads.

use crate::core::{tol, CoreError, ModeState, ModelParams, MomentVector, RunMode, SeedPolicy};
use crate::moments::{self, gamma};
use num_complex::Complex64;
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time-stepping scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Euler-Maruyama applied to the Ito form.
    #[serde(rename = "em-ito")]
    EulerMaruyamaIto,
    /// Heun predictor-corrector applied to the Stratonovich form.
    #[serde(rename = "heun-strat")]
    HeunStratonovich,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::EulerMaruyamaIto => "em-ito",
            Scheme::HeunStratonovich => "heun-strat",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "em-ito" => Ok(Scheme::EulerMaruyamaIto),
            "heun-strat" => Ok(Scheme::HeunStratonovich),
            other => Err(format!("unknown scheme '{other}' (expected em-ito or heun-strat)")),
        }
    }
}

/// Largest admissible `dt * max(sigma^2 xi^2, sqrt|xi|, 1)`.
pub const STABILITY_BUDGET: f64 = 0.25;
/// Default step size when neither stability nor bias control demands less.
pub const DEFAULT_DT: f64 = 1e-3;
/// Target cap on the cumulative relative moment bias `g^2 dt T` of the
/// explicit schemes.
pub const WEAK_BIAS_BUDGET: f64 = 0.02;
/// Runtime guard: bias-driven refinement stops at this many steps per path.
/// Stability-driven refinement is never capped.
pub const MAX_BIAS_STEPS: u64 = 100_000;

/// A fully resolved stepping plan: `steps * dt` spans the horizon exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: u64,
}

impl SchemeSpec {
    /// Chooses `dt` for `(xi, sigma, horizon)` by tightening three screws in
    /// order: the stability budget `dt max(sigma^2 xi^2, sqrt|xi|, 1) <= 1/4`,
    /// the weak-bias budget `g^2 dt T <= 0.02` (the explicit schemes distort
    /// second moments by roughly `exp(g^2 dt T)`), and the default `1e-3`.
    /// Bias refinement is capped at `MAX_BIAS_STEPS` steps per path so that
    /// extreme frequencies stay computable; the cap never loosens stability.
    pub fn budgeted(scheme: Scheme, xi: f64, sigma: f64, horizon: f64) -> Self {
        let g = gamma(xi, sigma);
        let stiffness = (sigma * sigma * xi * xi).max(xi.abs().sqrt()).max(1.0);
        let dt_stab = STABILITY_BUDGET / stiffness;
        let dt_bias = if g > 0.0 {
            WEAK_BIAS_BUDGET / (g * g * horizon)
        } else {
            f64::INFINITY
        };
        let steps_stab = (horizon / dt_stab).ceil() as u64;
        let dt_target = DEFAULT_DT.min(dt_stab).min(dt_bias);
        let steps_cap = MAX_BIAS_STEPS.max(steps_stab);
        let steps = ((horizon / dt_target).ceil() as u64).clamp(1, steps_cap);
        SchemeSpec {
            scheme,
            dt: horizon / steps as f64,
            steps,
        }
    }

    /// Plan with a caller-chosen `dt`, rounded so the step count is integral.
    pub fn with_dt(scheme: Scheme, dt: f64, horizon: f64) -> Self {
        let steps = ((horizon / dt).round() as u64).max(1);
        SchemeSpec {
            scheme,
            dt: horizon / steps as f64,
            steps,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// Stability-budget check for this plan at the given mode.
    pub fn stability_ok(&self, xi: f64, sigma: f64) -> bool {
        let stiffness = (sigma * sigma * xi * xi).max(xi.abs().sqrt()).max(1.0);
        self.dt * stiffness <= STABILITY_BUDGET * (1.0 + 1e-9)
    }
}

/// Per-time Monte Carlo moment estimate.
///
/// `t` is the recording time snapped to the step grid; `stderr` holds the
/// sample standard deviation of each moment divided by `sqrt(n_paths)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub t: f64,
    pub m_hat: MomentVector,
    pub stderr: [f64; 3],
    pub n_paths: u64,
}

/// One rung of a weak-order ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakOrderRung {
    pub dt: f64,
    pub m1_hat: f64,
    pub stderr: f64,
    pub bias: f64,
}

/// Result of a weak-order fit over a dt ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakOrderFit {
    /// Least-squares slope of `ln |bias|` against `ln dt`.
    pub order: f64,
    pub rungs: Vec<WeakOrderRung>,
}

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("path {path} exceeded the blowup guard at step {step} (|state| ~ {magnitude:.3e})")]
    NumericalBlowup { path: u64, step: u64, magnitude: f64 },
    #[error(
        "dt={dt:.3e} violates the stability budget for xi={xi}, sigma={sigma} \
         (requires dt <= {cap:.3e})"
    )]
    StabilityBudget { dt: f64, cap: f64, xi: f64, sigma: f64 },
    #[error("record times must be sorted and contained in [0, horizon]")]
    InvalidRecordTimes,
    #[error("dt ladder needs >= 3 values in geometric progression with integer refinement ratios")]
    InvalidLadder,
    #[error(
        "coarsest-rung bias {bias:.3e} is within 3 standard errors ({stderr:.3e}); \
         the ladder cannot resolve a convergence order"
    )]
    InsufficientResolution { bias: f64, stderr: f64 },
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// One Euler-Maruyama step of the Ito-form mode equation.
///
/// `U' = U + (V - g U) dt + i sigma xi U dW`, `V' = V + xi U dt` (the drift
/// uses the pre-step `U`). `dw` is the Brownian increment over `dt`.
pub fn step_euler_maruyama(
    state: &ModeState,
    sigma: f64,
    dt: f64,
    dw: f64,
) -> Result<ModeState, SdeError> {
    let (u, v) = em_step_inner(state.u_hat, state.v_hat, state.xi, sigma, dt, dw);
    guarded(state, u, v, dt)
}

/// One Heun predictor-corrector step of the Stratonovich-form mode equation.
///
/// Predictor `U* = U + V dt + i sigma xi U dW`; corrector averages the
/// diffusion coefficient between `U` and `U*`. The averaged term expands to
/// `i sigma xi U dW - (sigma xi)^2 U dW^2 / 2`, whose mean is exactly the
/// Ito correction `-g U dt`: the scheme converges to the same law as
/// `step_euler_maruyama` without ever writing the correction down.
pub fn step_heun_stratonovich(
    state: &ModeState,
    sigma: f64,
    dt: f64,
    dw: f64,
) -> Result<ModeState, SdeError> {
    let (u, v) = heun_step_inner(state.u_hat, state.v_hat, state.xi, sigma, dt, dw);
    guarded(state, u, v, dt)
}

#[inline]
fn rot(z: Complex64, w: f64) -> Complex64 {
    // i * z * w
    Complex64::new(-z.im * w, z.re * w)
}

#[inline]
fn em_step_inner(
    u: Complex64,
    v: Complex64,
    xi: f64,
    sigma: f64,
    dt: f64,
    dw: f64,
) -> (Complex64, Complex64) {
    let g = gamma(xi, sigma);
    let u_next = u + (v - g * u) * dt + rot(u, sigma * xi * dw);
    let v_next = v + xi * dt * u;
    (u_next, v_next)
}

#[inline]
fn heun_step_inner(
    u: Complex64,
    v: Complex64,
    xi: f64,
    sigma: f64,
    dt: f64,
    dw: f64,
) -> (Complex64, Complex64) {
    let drift = v * dt;
    let predictor = u + drift + rot(u, sigma * xi * dw);
    let u_next = u + drift + rot(u + predictor, 0.5 * sigma * xi * dw);
    let v_next = v + xi * dt * u;
    (u_next, v_next)
}

/// True once the state is useless for second-moment work: squares and cross
/// products of the components are what gets recorded, so the ceiling sits at
/// the square root of the overflow guard, not at the guard itself.
#[inline]
fn exceeds_guard(mag: f64) -> bool {
    !mag.is_finite() || mag * mag > tol::BLOWUP_GUARD
}

fn guarded(state: &ModeState, u: Complex64, v: Complex64, dt: f64) -> Result<ModeState, SdeError> {
    let mag = component_max(u, v);
    if exceeds_guard(mag) {
        return Err(SdeError::NumericalBlowup {
            path: 0,
            step: 0,
            magnitude: mag,
        });
    }
    Ok(ModeState {
        xi: state.xi,
        u_hat: u,
        v_hat: v,
        t: state.t + dt,
    })
}

/// Largest component magnitude; NaN anywhere poisons the result so the
/// blowup guard cannot be masked by `f64::max` dropping NaN operands.
#[inline]
fn component_max(u: Complex64, v: Complex64) -> f64 {
    let parts = [u.re, u.im, v.re, v.im];
    if parts.iter().any(|p| p.is_nan()) {
        return f64::NAN;
    }
    parts.iter().fold(0.0f64, |m, p| m.max(p.abs()))
}

/// Standard normal variate by inverse transform sampling.
///
/// One `u64` is consumed per variate and mapped to the open unit interval as
/// `(x >> 11 + 1/2) * 2^-53` before applying `inverse_normal_cdf`, so the
/// draw count per step is fixed and streams can be reasoned about exactly.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let x = rng.next_u64();
    let u = ((x >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0);
    inverse_normal_cdf(u)
}

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximations), accurate to about 1e-16 relative over (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.3871328727963666080e0,
        1.3314166789178437745e2,
        1.9715909503065514427e3,
        1.3731693765509461125e4,
        4.5921953931549871457e4,
        6.7265770927008700853e4,
        3.3430575583588128105e4,
        2.5090809287301226727e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.2313330701600911252e1,
        6.8718700749205790830e2,
        5.3941960214247511077e3,
        2.1213794301586595867e4,
        3.9307895800092710610e4,
        2.8729085735721942674e4,
        5.2264952788528545610e3,
    ];
    const C: [f64; 8] = [
        1.42343711074968357734e0,
        4.63033784615654529590e0,
        5.76949722146069140550e0,
        3.64784832476320460504e0,
        1.27045825245236838258e0,
        2.41780725177450611770e-1,
        2.27238449892691845833e-2,
        7.74545014278341407640e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.05319162663775882187e0,
        1.67638483018380384940e0,
        6.89767334985100004550e-1,
        1.48103976427480074590e-1,
        1.51986665636164571966e-2,
        5.47593808499534494600e-4,
        1.05075007164441684324e-9,
    ];
    const E: [f64; 8] = [
        6.65790464350110377720e0,
        5.46378491116411436990e0,
        1.78482653991729133580e0,
        2.96560571828504891230e-1,
        2.65321895265761230930e-2,
        1.24266094738807843860e-3,
        2.71155556874348757815e-5,
        2.01033439929228813265e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.99832206555887937690e-1,
        1.36929880922735805310e-1,
        1.48753612908506148525e-2,
        7.86869131145613259100e-4,
        1.84631831751005468180e-5,
        1.42151175831644588870e-7,
        2.04426310338993978564e-15,
    ];
    fn horner(c: &[f64; 8], r: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * r + k)
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Paths per accumulation batch. Fixed so that the partition of work, and
/// therefore the merge order of compensated sums, never depends on the
/// worker count.
const BATCH: u64 = 256;

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    fn merge(&mut self, other: &Kahan) {
        self.add(other.sum);
        self.add(-other.c);
    }
    fn total(&self) -> f64 {
        self.sum
    }
}

/// Accumulator cell per record time: sums and squared sums of the three
/// sampled moment quantities.
#[derive(Debug, Clone, Copy, Default)]
struct MomentAcc {
    sums: [Kahan; 6],
}

impl MomentAcc {
    #[inline]
    fn push(&mut self, q1: f64, q2: f64, q3: f64) {
        self.sums[0].add(q1);
        self.sums[1].add(q2);
        self.sums[2].add(q3);
        self.sums[3].add(q1 * q1);
        self.sums[4].add(q2 * q2);
        self.sums[5].add(q3 * q3);
    }
    fn merge(&mut self, other: &MomentAcc) {
        for (a, b) in self.sums.iter_mut().zip(other.sums.iter()) {
            a.merge(b);
        }
    }
    fn estimate(&self, t: f64, n: u64) -> MonteCarloEstimate {
        let nf = n as f64;
        let mean = [
            self.sums[0].total() / nf,
            self.sums[1].total() / nf,
            self.sums[2].total() / nf,
        ];
        let mut stderr = [0.0; 3];
        if n > 1 {
            for i in 0..3 {
                let ss = self.sums[3 + i].total();
                let var = ((ss - mean[i] * mean[i] * nf) / (nf - 1.0)).max(0.0);
                stderr[i] = (var / nf).sqrt();
            }
        }
        MonteCarloEstimate {
            t,
            m_hat: MomentVector::new(mean[0], mean[1], mean[2]),
            stderr,
            n_paths: n,
        }
    }
}

/// Simulates `n_paths` independent paths of the mode at `xi` and returns
/// moment estimates at each record time.
///
/// `record_times` must be sorted and contained in `[0, horizon]`; each is
/// snapped to the nearest step index. `mode_index` selects the stream family
/// (single-mode studies pass 0); path `p` always draws from stream
/// `(mode_index, p)` regardless of scheduling, so estimates are bitwise
/// independent of the worker count.
#[allow(clippy::too_many_arguments)]
pub fn simulate_paths(
    xi: f64,
    sigma: f64,
    init: (Complex64, Complex64),
    spec: &SchemeSpec,
    n_paths: u64,
    seeds: &SeedPolicy,
    mode_index: u64,
    record_times: &[f64],
) -> Result<Vec<MonteCarloEstimate>, SdeError> {
    ModelParams::new(sigma, spec.horizon()).validate(RunMode::Stochastic)?;
    if !spec.stability_ok(xi, sigma) {
        let stiffness = (sigma * sigma * xi * xi).max(xi.abs().sqrt()).max(1.0);
        return Err(SdeError::StabilityBudget {
            dt: spec.dt,
            cap: STABILITY_BUDGET / stiffness,
            xi,
            sigma,
        });
    }
    let record_idx = resolve_record_indices(record_times, spec)?;
    if record_idx.is_empty() || n_paths == 0 {
        return Ok(Vec::new());
    }

    let n_batches = n_paths.div_ceil(BATCH);
    let batches: Vec<Result<Vec<MomentAcc>, SdeError>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH;
            let hi = ((b + 1) * BATCH).min(n_paths);
            let mut acc = vec![MomentAcc::default(); record_idx.len()];
            for path in lo..hi {
                run_one_path(xi, sigma, init, spec, seeds, mode_index, path, &record_idx, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();

    let mut merged = vec![MomentAcc::default(); record_idx.len()];
    for batch in batches {
        let batch = batch?;
        for (m, b) in merged.iter_mut().zip(batch.iter()) {
            m.merge(b);
        }
    }
    Ok(merged
        .iter()
        .zip(record_idx.iter())
        .map(|(acc, &(k, _))| acc.estimate(k as f64 * spec.dt, n_paths))
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn run_one_path(
    xi: f64,
    sigma: f64,
    init: (Complex64, Complex64),
    spec: &SchemeSpec,
    seeds: &SeedPolicy,
    mode_index: u64,
    path: u64,
    record_idx: &[(u64, usize)],
    acc: &mut [MomentAcc],
) -> Result<(), SdeError> {
    let mut rng = seeds.derive_stream(mode_index, path);
    let mut u = init.0;
    let mut v = init.1;
    let sqrt_dt = spec.dt.sqrt();
    let mut next_rec = 0usize;
    while next_rec < record_idx.len() && record_idx[next_rec].0 == 0 {
        acc[next_rec].push(u.norm_sqr(), (u.conj() * v).re, v.norm_sqr());
        next_rec += 1;
    }
    for k in 1..=spec.steps {
        let dw = sqrt_dt * standard_normal(&mut rng);
        let (nu, nv) = match spec.scheme {
            Scheme::EulerMaruyamaIto => em_step_inner(u, v, xi, sigma, spec.dt, dw),
            Scheme::HeunStratonovich => heun_step_inner(u, v, xi, sigma, spec.dt, dw),
        };
        u = nu;
        v = nv;
        let mag = component_max(u, v);
        if exceeds_guard(mag) {
            return Err(SdeError::NumericalBlowup {
                path,
                step: k,
                magnitude: mag,
            });
        }
        while next_rec < record_idx.len() && record_idx[next_rec].0 == k {
            acc[next_rec].push(u.norm_sqr(), (u.conj() * v).re, v.norm_sqr());
            next_rec += 1;
        }
    }
    Ok(())
}

fn resolve_record_indices(
    record_times: &[f64],
    spec: &SchemeSpec,
) -> Result<Vec<(u64, usize)>, SdeError> {
    let horizon = spec.horizon();
    let slack = 1e-9 * (1.0 + horizon);
    let mut out = Vec::with_capacity(record_times.len());
    let mut prev = f64::NEG_INFINITY;
    for (i, &t) in record_times.iter().enumerate() {
        if !t.is_finite() || t < prev || t < -slack || t > horizon + slack {
            return Err(SdeError::InvalidRecordTimes);
        }
        prev = t;
        let k = ((t / spec.dt).round() as u64).min(spec.steps);
        out.push((k, i));
    }
    Ok(out)
}

/// Fits the weak convergence order of `scheme` on a geometric `dt` ladder.
///
/// All rungs of one path share a single Brownian path: increments are drawn
/// at the finest level and aggregated upward, which cancels most of the
/// sampling noise in the fitted slope. The bias of each rung is measured in
/// `m1` at the final time against the closed-form moment evolution.
#[allow(clippy::too_many_arguments)]
pub fn weak_order_estimate(
    xi: f64,
    sigma: f64,
    init: (Complex64, Complex64),
    scheme: Scheme,
    dts: &[f64],
    horizon: f64,
    n_paths: u64,
    seeds: &SeedPolicy,
    mode_index: u64,
) -> Result<WeakOrderFit, SdeError> {
    ModelParams::new(sigma, horizon).validate(RunMode::Stochastic)?;
    if dts.len() < 3 {
        return Err(SdeError::InvalidLadder);
    }
    let mut ladder = dts.to_vec();
    ladder.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let dt_min = *ladder.last().unwrap();
    let mut factors = Vec::with_capacity(ladder.len());
    for w in ladder.windows(2) {
        let ratio = w[0] / w[1];
        if (ratio - ladder[0] / ladder[1]).abs() > 1e-9 * ratio {
            return Err(SdeError::InvalidLadder);
        }
    }
    for &dt in &ladder {
        let f = dt / dt_min;
        if (f - f.round()).abs() > 1e-9 || f < 1.0 {
            return Err(SdeError::InvalidLadder);
        }
        factors.push(f.round() as u64);
        let plan = SchemeSpec::with_dt(scheme, dt, horizon);
        if !plan.stability_ok(xi, sigma) {
            let stiffness = (sigma * sigma * xi * xi).max(xi.abs().sqrt()).max(1.0);
            return Err(SdeError::StabilityBudget {
                dt,
                cap: STABILITY_BUDGET / stiffness,
                xi,
                sigma,
            });
        }
    }
    let steps_min = (horizon / dt_min).round() as u64;
    if steps_min == 0 || (steps_min as f64 * dt_min - horizon).abs() > 1e-9 * horizon {
        return Err(SdeError::InvalidLadder);
    }

    let n_rungs = ladder.len();
    let n_batches = n_paths.div_ceil(BATCH);
    let batches: Vec<Result<Vec<Kahan>, SdeError>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH;
            let hi = ((b + 1) * BATCH).min(n_paths);
            // Per rung: sum and sum of squares of |U(T)|^2.
            let mut acc = vec![Kahan::default(); 2 * n_rungs];
            let mut u = vec![Complex64::default(); n_rungs];
            let mut v = vec![Complex64::default(); n_rungs];
            let mut dw_acc = vec![0.0f64; n_rungs];
            let mut pending = vec![0u64; n_rungs];
            for path in lo..hi {
                let mut rng = seeds.derive_stream(mode_index, path);
                u.fill(init.0);
                v.fill(init.1);
                dw_acc.fill(0.0);
                pending.fill(0);
                let sqrt_dt_min = dt_min.sqrt();
                for k in 1..=steps_min {
                    let dw = sqrt_dt_min * standard_normal(&mut rng);
                    for r in 0..n_rungs {
                        dw_acc[r] += dw;
                        pending[r] += 1;
                        if pending[r] == factors[r] {
                            let dt_r = ladder[r];
                            let (nu, nv) = match scheme {
                                Scheme::EulerMaruyamaIto => {
                                    em_step_inner(u[r], v[r], xi, sigma, dt_r, dw_acc[r])
                                }
                                Scheme::HeunStratonovich => {
                                    heun_step_inner(u[r], v[r], xi, sigma, dt_r, dw_acc[r])
                                }
                            };
                            u[r] = nu;
                            v[r] = nv;
                            let mag = component_max(u[r], v[r]);
                            if exceeds_guard(mag) {
                                return Err(SdeError::NumericalBlowup {
                                    path,
                                    step: k,
                                    magnitude: mag,
                                });
                            }
                            dw_acc[r] = 0.0;
                            pending[r] = 0;
                        }
                    }
                }
                for r in 0..n_rungs {
                    let q = u[r].norm_sqr();
                    acc[2 * r].add(q);
                    acc[2 * r + 1].add(q * q);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut merged = vec![Kahan::default(); 2 * n_rungs];
    for batch in batches {
        let batch = batch?;
        for (m, b) in merged.iter_mut().zip(batch.iter()) {
            m.merge(b);
        }
    }

    let exact = moments::evolve_moments_exact(
        &MomentVector::new(
            init.0.norm_sqr(),
            (init.0.conj() * init.1).re,
            init.1.norm_sqr(),
        ),
        xi,
        sigma,
        horizon,
    );
    let nf = n_paths as f64;
    let mut rungs = Vec::with_capacity(n_rungs);
    for r in 0..n_rungs {
        let mean = merged[2 * r].total() / nf;
        let var = ((merged[2 * r + 1].total() - mean * mean * nf) / (nf - 1.0)).max(0.0);
        let stderr = (var / nf).sqrt();
        rungs.push(WeakOrderRung {
            dt: ladder[r],
            m1_hat: mean,
            stderr,
            bias: mean - exact.m1,
        });
    }
    let coarsest = &rungs[0];
    if coarsest.bias.abs() < 3.0 * coarsest.stderr {
        return Err(SdeError::InsufficientResolution {
            bias: coarsest.bias,
            stderr: coarsest.stderr,
        });
    }

    // Least squares for ln|bias| = order * ln dt + const.
    let xs: Vec<f64> = rungs.iter().map(|r| r.dt.ln()).collect();
    let ys: Vec<f64> = rungs.iter().map(|r| r.bias.abs().max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    Ok(WeakOrderFit { order, rungs })
}
