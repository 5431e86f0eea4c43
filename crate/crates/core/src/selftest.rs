//! Quick oracle-equivalence checks: each pits a production path against an
//! independent one on a small case. Meant to run in a few seconds.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fiber::{band_table, feynman_hellmann_slope, finite_difference_slope, uniform_k_grid, FiberConfig};
use crate::profile::PeriodicProfile;
use crate::random_field::{cdf, inverse_cdf, potential_at, realization_rng, CouplingField, Perturbation};
use crate::specfun::{oscillator_integral_closed, oscillator_integral_quadrature};
use crate::splitting::excluded_fields;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured discrepancy against its bound.
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

fn check(name: &str, value: Result<f64>, bound: f64) -> Check {
    let value = value.unwrap_or(f64::INFINITY);
    Check { name: name.into(), passed: value < bound, value, bound }
}

fn closed_vs_quadrature() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 1..=4 {
        for &s in &[1.0, 2.0 * PI] {
            for &b in &[1.0, 2.0 * PI * PI] {
                let c = oscillator_integral_closed(j, s, b)?;
                let q = oscillator_integral_quadrature(j, s, b)?;
                let err = if c.abs() > 1e-2 { (c - q).abs() / c.abs() } else { (c - q).abs() * 1e-2 };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

fn unperturbed_levels() -> Result<f64> {
    let cfg = FiberConfig::new(1.0, 0.0, 0.0, PeriodicProfile::cosine(), 34)?;
    let table = band_table(3, 0.0, &uniform_k_grid(1.0, 16), &cfg)?;
    let mut worst: f64 = 0.0;
    for j in 1..=3 {
        for e in table.band(j) {
            worst = worst.max((e - (2 * j - 1) as f64).abs());
        }
    }
    Ok(worst)
}

fn constant_profile_null() -> Result<f64> {
    let b = 2.0 * PI * PI;
    let cfg = FiberConfig::new(b, 0.5, 0.0, PeriodicProfile::constant(1.0)?, 40)?;
    let table = band_table(2, 0.5, &uniform_k_grid(b, 16), &cfg)?;
    let mut worst: f64 = 0.0;
    for j in 1..=2 {
        let row = table.band(j);
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
        worst = worst.max((hi - lo) / b);
    }
    Ok(worst)
}

fn feynman_hellmann() -> Result<f64> {
    let b = 2.0 * PI * PI;
    let profile = PeriodicProfile::cosine();
    let cfg = FiberConfig::new(b, 0.0, 0.0, profile.clone(), 40)?;
    let mut worst: f64 = 0.0;
    for &k in &[0.25 * b, 0.6 * b] {
        let exact = feynman_hellmann_slope(1, k, b, &profile)?;
        let fd = finite_difference_slope(1, k, &cfg, 1e-4)?;
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(worst)
}

fn excluded_cosine_field() -> Result<f64> {
    let fields = excluded_fields(2, &PeriodicProfile::cosine(), 10.0)?;
    let target = 2.0 * PI * PI / 3.0;
    Ok(match fields.as_slice() {
        [f] => (f - target).abs() / target,
        _ => f64::INFINITY,
    })
}

fn unit_couplings_reproduce_periodic() -> Result<f64> {
    let profile = PeriodicProfile::cosine();
    let ones = CouplingField::constant(10.0, 1.0)?;
    let random = Perturbation::Random { lambda: 0.3, profile: &profile, couplings: &ones };
    let periodic = Perturbation::Periodic { lambda: 0.3, profile: &profile };
    let mut rng = realization_rng(11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let (a, p) = (potential_at(x, 1.0, &random), potential_at(x, 1.0, &periodic));
        worst = worst.max((a[1] - p[1]).abs()).max((a[0] - p[0]).abs());
    }
    Ok(worst)
}

/// Kolmogorov–Smirnov distance of 10⁴ inverse-CDF draws.
fn sampler_ks() -> Result<f64> {
    let mut rng = realization_rng(5, 0);
    let eta = 0.1;
    let mut draws: Vec<f64> = (0..10_000).map(|_| inverse_cdf(rng.gen::<f64>(), eta)).collect();
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    Ok(draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x, eta);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max))
}

pub fn run_selftest() -> SelfTestReport {
    let checks = vec![
        check("oscillator integral: closed form vs quadrature", closed_vs_quadrature(), 1e-8),
        check("unperturbed fibers sit on Landau levels", unperturbed_levels(), 1e-8),
        check("constant profile leaves bands flat", constant_profile_null(), 1e-8),
        check("Feynman-Hellmann slope vs finite difference", feynman_hellmann(), 1e-3),
        check("excluded field of the cosine profile", excluded_cosine_field(), 1e-9),
        check("unit couplings reproduce the periodic potential", unit_couplings_reproduce_periodic(), 1e-12),
        check("sampler KS distance (10^4 draws)", sampler_ks(), 0.02),
    ];
    let passed = checks.iter().filter(|c| c.passed).count();
    SelfTestReport { passed, failed: checks.len() - passed, checks }
}
