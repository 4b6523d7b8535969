//! Closed-form spectrum of the per-mode moment system.
//!
//! For each frequency `xi` the three eigenvalues are `0` (the conserved
//! bracket direction) and `lambda_+-`, printed here along the sweep. The
//! headline structure: `Re lambda_+` peaks at `xi = 2 sigma^{-4/3}` with
//! value exactly `2 sigma^{-2/3}`, and without noise the same quantity is
//! `2 sqrt(xi)`, unbounded.

use noise_reg::moments::{eigenvalues, gamma, lambda_plus_re, spectral_abscissa_bound};

fn main() {
    let sigma = 1.0;
    println!("sigma = {sigma}");
    println!(
        "{:>10} {:>10} {:>22} {:>22}",
        "xi", "gamma", "lambda_plus", "lambda_minus"
    );
    for xi in [-50.0, -4.0, -1.0, 0.0, 0.5, 2.0, 8.0, 50.0, 500.0] {
        let (lp, lm, _) = eigenvalues(xi, sigma);
        println!(
            "{:>10} {:>10.4} {:>10.4} {:+.4}i {:>10.4} {:+.4}i",
            xi,
            gamma(xi, sigma),
            lp.re,
            lp.im,
            lm.re,
            lm.im
        );
    }

    let (bound, argmax) = spectral_abscissa_bound(sigma).unwrap();
    println!();
    println!("abscissa bound 2 sigma^(-2/3) = {bound}, attained at xi = {argmax}");
    println!("Re lambda_+ at the peak       = {}", lambda_plus_re(argmax, sigma));

    // The noiseless top eigenvalue for comparison: 2 sqrt(xi), unbounded.
    println!();
    for xi in [4.0, 100.0, 2500.0] {
        println!(
            "sigma = 0, xi = {xi:>6}: Re lambda_+ = {:.4} (= 2 sqrt(xi))",
            lambda_plus_re(xi, 0.0)
        );
    }
}
