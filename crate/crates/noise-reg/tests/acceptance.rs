//! Full acceptance sweep. Every numbered criterion prints exactly one
//! `[ACn] PASS/FAIL` line with its runtime; the suite panics at the end if
//! any line failed, so the captured output always shows the whole table.
//!
//! Criteria that are out of reach for the configured schemes are still run
//! faithfully and allowed to fail; nothing here widens a tolerance to turn
//! a line green.

mod common;

use std::fmt::Write as _;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use noise_reg::core::{MomentVector, SeedPolicy};
use noise_reg::moments::{lambda_plus_re, propagate_second_moments};
use noise_reg::sde::{simulate_paths, weak_order_estimate, Scheme, SchemeSpec};
use noise_reg::spectral::{
    backward_transform, forward_transform, physical_norm_sq, sobolev_norm_sq, FieldSnapshot,
    SpatialGrid,
};
use noise_reg::verify::{
    estimate_global_constants, gaussian_mode_sampler, gevrey_threshold_demo, sample_m0_family,
    verify_lambda_bound, verify_time_continuity, Verdict, VerifyError, XiGrid,
};
use num_complex::Complex64;

const INIT: (Complex64, Complex64) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
const FROZEN_M1_XI2_T1: f64 = 2.9660713061250057;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn run(
        &mut self,
        name: &str,
        budget: Option<Duration>,
        f: impl FnOnce() -> Result<(), String>,
    ) {
        let t0 = Instant::now();
        let result = f();
        let elapsed = t0.elapsed();
        let mut verdict = result;
        if let Some(b) = budget {
            if verdict.is_ok() && elapsed > b {
                verdict = Err(format!("over budget: {elapsed:.1?} > {b:?}"));
            }
        }
        match verdict {
            Ok(()) => println!("[{name}] PASS ({elapsed:.1?})"),
            Err(detail) => {
                println!("[{name}] FAIL ({elapsed:.1?}): {detail}");
                self.failures.push(name.to_string());
            }
        }
    }
}

fn ac1_abscissa_bound() -> Result<(), String> {
    for sigma in [0.25, 1.0, 4.0] {
        let grid = XiGrid::standard(1e3, 100_000, sigma).map_err(|e| e.to_string())?;
        if grid.len() < 100_000 {
            return Err(format!("grid has {} points, need 1e5", grid.len()));
        }
        let reports = verify_lambda_bound(sigma, &grid).map_err(|e| e.to_string())?;
        for r in &reports {
            if !r.pass {
                return Err(format!(
                    "sigma {sigma}: claim {} observed {} vs asserted {}",
                    r.claim, r.observed, r.asserted
                ));
            }
        }
        if sigma == 1.0 {
            let abscissa = &reports[0];
            if abscissa.observed != 2.0 || abscissa.observed_at != Some(2.0) {
                return Err(format!(
                    "sigma 1 peak not exact: max {} at {:?}",
                    abscissa.observed, abscissa.observed_at
                ));
            }
            if lambda_plus_re(2.0, 1.0) != 2.0 {
                return Err("lambda_plus(2; 1) != 2 exactly".into());
            }
        }
    }
    Ok(())
}

fn ac2_oracle_equivalence() -> Result<(), String> {
    let mut cases = common::CaseSource::new(0xAC2);
    for case in 0..1000 {
        let xi = cases.in_range(-50.0, 50.0);
        let sigma = cases.in_range(0.1, 4.0);
        let t = cases.in_range(0.0, 2.0);
        let m0 = cases.cone_sample();
        let exact = propagate_second_moments(&m0, xi, sigma, t);
        let oracle = common::rk4_moments(&m0, xi, sigma, t);
        let scale = oracle.norm_inf().max(m0.norm_inf()).max(1.0);
        for (a, b) in [
            (exact.m1, oracle.m1),
            (exact.m2, oracle.m2),
            (exact.m3, oracle.m3),
        ] {
            if (a - b).abs() > 1e-6 * scale {
                return Err(format!(
                    "case {case} (xi {xi:.3}, sigma {sigma:.3}, t {t:.3}): {a} vs {b}"
                ));
            }
        }
        let q0 = m0.m3 - xi * m0.m1;
        let qt = exact.m3 - xi * exact.m1;
        if (qt - q0).abs() > 1e-10 * scale * (1.0 + xi.abs()) {
            return Err(format!("case {case}: conservation drift {}", qt - q0));
        }
    }
    Ok(())
}

/// Five-sigma bands around the exact moments at four frequencies.
///
/// Expected to fail at `xi = 50`: there `g = 1250`, so the stability budget
/// pins `dt = 1e-5` and the discrete mean of `|U|^2` carries a factor
/// `(1 + g^2 dt^2)` per step, `e^{g^2 dt t} ~ e^{15.6}` over the horizon.
/// Worse, the noise is a pure phase rotation to leading order, so the
/// modulus of a typical path decays like `e^{-2 g t}` relative to the mean:
/// the mean lives on rare paths that 1e4 samples never see, and the sample
/// mean collapses with a deceptively small standard error. Both effects are
/// properties of the estimator at these parameters, not of the stepper;
/// the line is kept red rather than widening the band.
fn ac3_monte_carlo_bands() -> Result<(), String> {
    let (sigma, horizon) = (1.0, 1.0);
    let times = [0.25, 0.5, 1.0];
    let seeds = SeedPolicy::new(0x5EED);
    let m0 = MomentVector::new(1.0, 0.0, 0.0);
    let mut detail = String::new();
    for (mode, xi) in [-5.0, 0.5, 2.0, 50.0].into_iter().enumerate() {
        let spec = SchemeSpec::budgeted(Scheme::EulerMaruyamaIto, xi, sigma, horizon);
        let estimates = simulate_paths(
            xi,
            sigma,
            INIT,
            &spec,
            10_000,
            &seeds,
            mode as u64,
            &times,
        )
        .map_err(|e| format!("xi {xi}: {e}"))?;
        for est in &estimates {
            let exact = propagate_second_moments(&m0, xi, sigma, est.t);
            let hats = [est.m_hat.m1, est.m_hat.m2, est.m_hat.m3];
            let exs = [exact.m1, exact.m2, exact.m3];
            for i in 0..3 {
                let band = 5.0 * est.stderr[i].max(1e-12);
                if (hats[i] - exs[i]).abs() > band {
                    let _ = write!(
                        detail,
                        " [xi {xi}, t {:.3}, m{}: {:.6e} vs {:.6e}, {:.0} stderr]",
                        est.t,
                        i + 1,
                        hats[i],
                        exs[i],
                        (hats[i] - exs[i]).abs() / est.stderr[i].max(1e-300)
                    );
                }
            }
            if xi == 2.0 && est.t == 1.0 {
                let band = 5.0 * est.stderr[0];
                if (est.m_hat.m1 - FROZEN_M1_XI2_T1).abs() > band {
                    let _ = write!(
                        detail,
                        " [frozen reference: {} vs {FROZEN_M1_XI2_T1} +- {band:.3e}]",
                        est.m_hat.m1
                    );
                }
            }
        }
    }
    if detail.is_empty() {
        Ok(())
    } else {
        Err(format!("bands violated:{detail}"))
    }
}

/// Joint five-sigma agreement between the two schemes at matched `dt`.
///
/// Expected to fail by construction: at fixed `dt` the corrector's `dW^2`
/// term shifts the Heun discrete law of `E|U|^2` by `+2 g^2 dt t E|U|^2`
/// relative to Euler (about `6e-3` here, confirmed against the exact
/// discrete laws in the `sde_stats` suite), while the rotational noise
/// keeps path variance so small that the joint five-sigma band at 1e5
/// paths is only `3.5e-3`. The gap vanishes as `dt -> 0` and is two
/// orders below the `e^4` discrepancy a wrong drift correction would
/// produce, so the criterion still validates what it was written to
/// validate; the fixed-band comparison at this exact `dt` cannot pass
/// for any faithful pair of schemes.
fn ac4_scheme_agreement() -> Result<(), String> {
    let (xi, sigma, t) = (2.0, 1.0, 0.5);
    let seeds = SeedPolicy::new(0x5EED);
    let mut results = Vec::new();
    for scheme in [Scheme::EulerMaruyamaIto, Scheme::HeunStratonovich] {
        let spec = SchemeSpec::with_dt(scheme, 1e-3, t);
        let est = simulate_paths(xi, sigma, INIT, &spec, 100_000, &seeds, 0, &[t])
            .map_err(|e| e.to_string())?;
        results.push(est[0].clone());
    }
    let (a, b) = (&results[0], &results[1]);
    let has = [a.m_hat.m1, a.m_hat.m2, a.m_hat.m3];
    let hbs = [b.m_hat.m1, b.m_hat.m2, b.m_hat.m3];
    for i in 0..3 {
        let joint = (a.stderr[i].powi(2) + b.stderr[i].powi(2)).sqrt().max(1e-12);
        if (has[i] - hbs[i]).abs() > 5.0 * joint {
            return Err(format!(
                "m{} disagrees: {} vs {} with joint stderr {joint:.3e}",
                i + 1,
                has[i],
                hbs[i]
            ));
        }
    }
    Ok(())
}

fn ac5_global_certification() -> Result<(), String> {
    let grid = XiGrid::standard(1e3, 4001, 1.0).map_err(|e| e.to_string())?;
    let family = sample_m0_family(0x5EED, 100);
    let consts =
        estimate_global_constants(1.0, 1.0, &grid, &family).map_err(|e| e.to_string())?;
    for (name, v) in [
        ("c1", consts.c1),
        ("c2", consts.c2),
        ("xi0", consts.xi0),
        ("m_patch", consts.m_patch),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(format!("constant {name} = {v} not finite positive"));
        }
    }

    let xi_top = 100.0;
    let noiseless = XiGrid::standard(xi_top, 64, 0.0).map_err(|e| e.to_string())?;
    match estimate_global_constants(0.0, 1.0, &noiseless, &sample_m0_family(1, 32)) {
        Err(VerifyError::CertificationFailure {
            worst_xi,
            growth_ratio,
            ..
        }) => {
            let floor = (2.0 * xi_top.sqrt() * 1.0).exp() / 2.0;
            if worst_xi != xi_top {
                return Err(format!("noiseless failure at xi {worst_xi}, not grid edge"));
            }
            if growth_ratio < floor {
                return Err(format!("growth ratio {growth_ratio:.3e} below {floor:.3e}"));
            }
            Ok(())
        }
        Err(e) => Err(format!("noiseless run failed differently: {e}")),
        Ok(c) => Err(format!(
            "noiseless run certified C1 {} C2 {}, which must not happen",
            c.c1, c.c2
        )),
    }
}

fn ac6_gevrey_contrast() -> Result<(), String> {
    let cutoffs = [64.0, 128.0, 256.0, 512.0];
    let divergent = gevrey_threshold_demo(0.0, 3.0, &cutoffs, 1.0).map_err(|e| e.to_string())?;
    if divergent.verdict != Verdict::Divergent {
        return Err(format!("(0, 3): verdict {:?}", divergent.verdict));
    }
    for w in divergent.rows.windows(2) {
        let ratio = w[1].norm / w[0].norm;
        if ratio <= 10.0 {
            return Err(format!(
                "(0, 3): doubling {} -> {} grew only {ratio:.2}x",
                w[0].cutoff, w[1].cutoff
            ));
        }
    }
    let tame = gevrey_threshold_demo(0.0, 1.5, &cutoffs, 1.0).map_err(|e| e.to_string())?;
    if tame.verdict != Verdict::Stable {
        return Err(format!("(0, 1.5): verdict {:?}", tame.verdict));
    }
    let noisy = gevrey_threshold_demo(1.0, 3.0, &cutoffs, 1.0).map_err(|e| e.to_string())?;
    if noisy.verdict != Verdict::Stable {
        return Err(format!("(1, 3): verdict {:?}", noisy.verdict));
    }
    Ok(())
}

fn ac7_transform_identities() -> Result<(), String> {
    let grid = SpatialGrid::new(256, 64.0).map_err(|e| e.to_string())?;
    let mut cases = common::CaseSource::new(0xAC7);
    for field in 0..100 {
        let n = grid.n_points();
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(cases.in_range(-1.0, 1.0), cases.in_range(-1.0, 1.0)))
            .collect();
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(cases.in_range(-1.0, 1.0), cases.in_range(-1.0, 1.0)))
            .collect();
        let snap = FieldSnapshot::new(grid.clone(), u.clone(), v, 0.0).map_err(|e| e.to_string())?;
        let spec = forward_transform(&snap).map_err(|e| e.to_string())?;
        let back = backward_transform(&grid, &spec, 0.0).map_err(|e| e.to_string())?;
        let scale = u.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let worst = u
            .iter()
            .zip(back.u.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        if worst > 1e-12 * scale.max(1.0) {
            return Err(format!("field {field}: round-trip error {worst:.3e}"));
        }
        let phys = physical_norm_sq(&grid, &u);
        let spectral = sobolev_norm_sq(&spec.u_hat, 0.0, &grid);
        if (phys - spectral).abs() > 1e-12 * phys.max(1.0) {
            return Err(format!(
                "field {field}: Parseval {phys} vs {spectral}"
            ));
        }
    }
    Ok(())
}

fn ac8_weak_order() -> Result<(), String> {
    let seeds = SeedPolicy::new(0x5EED);
    for (mode, scheme) in [Scheme::EulerMaruyamaIto, Scheme::HeunStratonovich]
        .into_iter()
        .enumerate()
    {
        let fit = weak_order_estimate(
            2.0,
            1.0,
            INIT,
            scheme,
            &[0.02, 0.01, 0.005],
            0.5,
            1_000_000,
            &seeds,
            mode as u64,
        )
        .map_err(|e| format!("{}: {e}", scheme.as_str()))?;
        if !(0.7..=1.3).contains(&fit.order) {
            let rungs: Vec<String> = fit
                .rungs
                .iter()
                .map(|r| format!("dt {}: bias {:.3e} +- {:.1e}", r.dt, r.bias, r.stderr))
                .collect();
            return Err(format!(
                "{} order {:.3} outside [0.7, 1.3] ({})",
                scheme.as_str(),
                fit.order,
                rungs.join("; ")
            ));
        }
    }
    Ok(())
}

fn ac9_time_continuity() -> Result<(), String> {
    let report = verify_time_continuity(1.0, 0.0, 0.5, &[0.1, 0.05, 0.025], gaussian_mode_sampler)
        .map_err(|e| e.to_string())?;
    if !report.monotone {
        return Err("increments not monotone over the delta ladder".into());
    }
    if !report.report.pass || report.slope < 0.9 {
        return Err(format!("fitted slope {:.4} below 0.9", report.slope));
    }
    Ok(())
}

fn ac10_bitwise_replay() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let reference = dir.path().join("w1.csv");
    let base_args = [
        "simulate",
        "--xi",
        "2",
        "--sigma",
        "1",
        "--paths",
        "2000",
        "--dt",
        "0.001",
        "--times",
        "0.25,0.5,1",
    ];
    let out = Command::new(env!("CARGO_BIN_EXE_noise-reg"))
        .args(base_args)
        .args(["--workers", "1", "--out", reference.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "reference run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let manifest = format!("{}.manifest.json", reference.display());
    let golden = fs::read(&reference).map_err(|e| e.to_string())?;
    for workers in ["4", "16"] {
        let replay = dir.path().join(format!("w{workers}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_noise-reg"))
            .args(["simulate", "--manifest", &manifest])
            .args(["--workers", workers, "--out", replay.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "replay with {workers} workers failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        let bytes = fs::read(&replay).map_err(|e| e.to_string())?;
        if bytes != golden {
            return Err(format!("output differs with {workers} workers"));
        }
    }
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate {
        failures: Vec::new(),
    };
    let s = Duration::from_secs;
    gate.run("AC1", Some(s(5)), ac1_abscissa_bound);
    gate.run("AC2", Some(s(60)), ac2_oracle_equivalence);
    gate.run("AC3", Some(s(300)), ac3_monte_carlo_bands);
    gate.run("AC4", Some(s(300)), ac4_scheme_agreement);
    gate.run("AC5", Some(s(120)), ac5_global_certification);
    gate.run("AC6", Some(s(120)), ac6_gevrey_contrast);
    gate.run("AC7", Some(s(10)), ac7_transform_identities);
    gate.run("AC8", Some(s(900)), ac8_weak_order);
    gate.run("AC9", Some(s(60)), ac9_time_continuity);
    gate.run("AC10", None, ac10_bitwise_replay);
    assert!(
        gate.failures.is_empty(),
        "acceptance criteria failed: {}",
        gate.failures.join(", ")
    );
}
