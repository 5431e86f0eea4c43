//! Acceptance suite: one PASS/FAIL line per numbered criterion.
//!
//! Reference values come from oracles written here, independent of the
//! library: direct trapezoid integrals of the oscillator moments, a
//! factorial-normalized Hermite function and the analytic coupling CDF.
//! Two clauses are known not to hold as stated (the band-inclusion clause
//! of criterion 5 and the fitted-constant stability clause of criterion 10);
//! their lines print FAIL with the measured numbers and do not abort the run.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use landau_core::chern::{
    fermi_spectrum, bulk_eigenvalues, hall_conductance, ipr, plateau_scan, FermiProjection, HalfPlaneSwitches,
    Window, BULK_MARGIN, BULK_WEIGHT,
};
use landau_core::fiber::{band_table, feynman_hellmann_slope, finite_difference_slope, uniform_k_grid, FiberConfig};
use landau_core::random_field::{
    check_spectral_location, discretization_allowance, discretize, interior_weight, potential_at, realization_rng,
    sample_couplings_stream, write_spectrum_csv, CouplingField, Perturbation, RealizationManifest,
};
use landau_core::specfun::{oscillator_integral_closed, oscillator_integral_quadrature};
use landau_core::splitting::{estimate_splitting, excluded_fields, f_function, is_admissible};
use landau_core::{PeriodicProfile, ProfileSpec};
use num_complex::Complex64;
use rand::Rng;

const TWO_PI_SQ: f64 = 2.0 * PI * PI;

// ---------------------------------------------------------------- oracles

/// `φ_j(t; B) = (B/π)^{1/4} (2^{j-1}(j-1)!)^{-1/2} H_{j-1}(√B t) e^{-Bt²/2}`.
fn phi(j: usize, t: f64, b: f64) -> f64 {
    let n = j - 1;
    let u = b.sqrt() * t;
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    let h = match n {
        0 => h0,
        _ => {
            for m in 1..n {
                let h2 = 2.0 * u * h1 - 2.0 * m as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let fact: f64 = (1..=n).map(|m| m as f64).product();
    (b / PI).powf(0.25) / (2f64.powi(n as i32) * fact).sqrt() * h * (-0.5 * u * u).exp()
}

/// `∫ f(t) t φ_j(t)² dt` by the trapezoid rule in `u = √B t`; the integrand
/// is entire and Gaussian-decaying, so the rule converges geometrically.
fn moment<F: Fn(f64) -> f64>(j: usize, b: f64, f: F) -> f64 {
    let (half, step) = (14.0, 0.004);
    let n = (half / step) as i64;
    let sb = b.sqrt();
    (-n..=n)
        .map(|i| {
            let t = i as f64 * step / sb;
            let p = phi(j, t, b);
            f(t) * t * p * p
        })
        .sum::<f64>()
        * step
        / sb
}

/// `I_j(s; B) = ∫ sin(st) t φ_j(t)² dt`.
fn oracle_integral(j: usize, s: f64, b: f64) -> f64 {
    moment(j, b, |t| (s * t).sin())
}

/// `F_j(k) = ∫ cos(2π(t + k/B)) t φ_j(t)² dt` for the cosine profile.
fn oracle_f(j: usize, k: f64, b: f64) -> f64 {
    moment(j, b, |t| (2.0 * PI * (t + k / b)).cos())
}

/// `ρ_η(s) ∝ e^{-|s|/η}` on `[-1, 1]`.
fn oracle_cdf(s: f64, eta: f64) -> f64 {
    let c = 1.0 / (2.0 * (1.0 - (-1.0 / eta).exp()));
    let s = s.clamp(-1.0, 1.0);
    0.5 + s.signum() * c * (1.0 - (-s.abs() / eta).exp())
}

fn oracle_prob_abs_below(alpha: f64, eta: f64) -> f64 {
    let c = 1.0 / (2.0 * (1.0 - (-1.0 / eta).exp()));
    2.0 * c * (1.0 - (-alpha / eta).exp())
}

/// `e^{s²/4B} I_j(s; B)`. Shifting the contour to `t = τ + is/2B` turns
/// `e^{ist - Bt²}` into `e^{-s²/4B} e^{-Bτ²}`, so the oscillating integrand
/// that underflows for small `B` becomes a polynomial times a Gaussian.
fn oracle_integral_scaled(j: usize, s: f64, b: f64) -> f64 {
    let n = j - 1;
    let a = s / (2.0 * b);
    let sb = b.sqrt();
    let fact: f64 = (1..=n).map(|m| m as f64).product();
    let norm2 = (b / PI).sqrt() / (2f64.powi(n as i32) * fact);
    let (half, step) = (14.0, 0.004);
    let steps = (half / step) as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in -steps..=steps {
        let tau = i as f64 * step / sb;
        let t = Complex64::new(tau, a);
        let u = t * sb;
        let (mut h0, mut h1) = (Complex64::new(1.0, 0.0), 2.0 * u);
        let h = if n == 0 {
            h0
        } else {
            for m in 1..n {
                let h2 = 2.0 * u * h1 - 2.0 * m as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        };
        acc += t * h * h * (-b * tau * tau).exp();
    }
    (acc * norm2 * step / sb).im
}

/// Positive fields in `(0, b_max]` where `B ↦ I_j(s; B)` changes sign, by
/// scan and bisection.
fn oracle_roots_in_b(j: usize, s: f64, b_max: f64) -> Vec<f64> {
    let g = |b: f64| oracle_integral_scaled(j, s, b);
    let n = 2000;
    let mut roots = Vec::new();
    let mut prev_b = b_max / n as f64;
    let mut prev = g(prev_b);
    for i in 2..=n {
        let b = b_max * i as f64 / n as f64;
        let v = g(b);
        if prev != 0.0 && v != 0.0 && prev.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_b, b, prev);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_b = b;
        prev = v;
    }
    roots
}

// ---------------------------------------------------------------- harness

struct Outcome {
    passed: bool,
    /// A clause that is known not to hold as stated; reported, not fatal.
    known: bool,
    detail: String,
}

fn pass_if(passed: bool, detail: String) -> Outcome {
    Outcome { passed, known: false, detail }
}

fn band_width(row: &[f64]) -> f64 {
    let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &e| (l.min(e), h.max(e)));
    hi - lo
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ---------------------------------------------------------------- criteria

fn closed_form() -> Outcome {
    let mut worst_lib: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut ok = true;
    for j in 1..=6 {
        for &s in &[0.5, 1.0, 2.0, 2.0 * PI, 10.0] {
            for &b in &[1.0, TWO_PI_SQ] {
                let c = oscillator_integral_closed(j, s, b).unwrap();
                let q = oscillator_integral_quadrature(j, s, b).unwrap();
                let rel = (c - q).abs() / c.abs().max(1e-300);
                let abs = (c - q).abs();
                ok &= rel < 1e-8 || abs < 1e-10;
                worst_lib = worst_lib.max(rel.min(abs / 1e-10 * 1e-8));
                let t = oracle_integral(j, s, b);
                worst_oracle = worst_oracle.max((c - t).abs());
            }
        }
    }
    ok &= worst_oracle < 1e-12;
    pass_if(ok, format!("closed vs quadrature worst {worst_lib:.1e}; closed vs trapezoid oracle abs {worst_oracle:.1e}"))
}

fn unperturbed() -> Outcome {
    let mut worst: f64 = 0.0;
    for &b in &[1.0, TWO_PI_SQ] {
        let cfg = FiberConfig::new(b, 0.0, 0.0, PeriodicProfile::cosine(), 37).unwrap();
        let table = band_table(5, 0.0, &uniform_k_grid(b, 256), &cfg).unwrap();
        for j in 1..=5 {
            for e in table.band(j) {
                worst = worst.max((e - (2 * j - 1) as f64 * b).abs() / b);
            }
        }
    }
    pass_if(worst < 1e-8, format!("max |E_j - (2j-1)B| / B = {worst:.1e}"))
}

fn constant_profile() -> Outcome {
    let mut worst: f64 = 0.0;
    for &b in &[1.0, TWO_PI_SQ] {
        let cfg = FiberConfig::new(b, 0.0, 0.0, PeriodicProfile::constant(1.0).unwrap(), 35).unwrap();
        for &lambda in &[0.1, 0.5, 1.0] {
            let table = band_table(3, lambda, &uniform_k_grid(b, 256), &cfg).unwrap();
            for j in 1..=3 {
                worst = worst.max(band_width(table.band(j)) / b);
            }
        }
    }
    pass_if(worst < 1e-8, format!("max width / B = {worst:.1e}"))
}

fn feynman_hellmann() -> Outcome {
    let b = TWO_PI_SQ;
    let profile = PeriodicProfile::cosine();
    let cfg = FiberConfig::new(b, 0.0, 0.0, profile.clone(), 40).unwrap();
    let mut worst_fd: f64 = 0.0;
    let mut worst_lib: f64 = 0.0;
    for j in 1..=4 {
        // Offset by half a step so that no sample sits on a zero of F_j.
        for i in 0..16 {
            let k = (i as f64 + 0.5) * b / 16.0;
            let exact = 2.0 * b * oracle_f(j, k, b);
            let fd = finite_difference_slope(j, k, &cfg, 1e-4).unwrap();
            worst_fd = worst_fd.max((fd - exact).abs() / exact.abs());
            let lib = feynman_hellmann_slope(j, k, b, &profile).unwrap();
            worst_lib = worst_lib.max((lib - exact).abs() / exact.abs());
        }
    }
    pass_if(
        worst_fd < 1e-3 && worst_lib < 1e-9,
        format!("finite difference vs 2B F_j rel {worst_fd:.1e}; library slope vs oracle rel {worst_lib:.1e}"),
    )
}

fn splitting_linearity() -> Outcome {
    let b = TWO_PI_SQ;
    // Cosine: F_1(k) = -I_1(2π) sin(2πk/B), so 2B (max - min) = 4B |I_1(2π)|.
    let kappa = 4.0 * b * oracle_integral(1, 2.0 * PI, b).abs();
    let est = estimate_splitting(1, b, &PeriodicProfile::cosine(), &[1e-3, 3e-3, 1e-2], 40).unwrap();
    let slope = est.widths[0] / est.lambda_grid[0];
    let linear = (slope - kappa).abs() < 0.05 * kappa;
    let lambda = est.lambda_grid[0];
    let (lo, hi) = (b - 0.5 * est.kappa_hat * lambda, b + 0.5 * est.kappa_hat * lambda);
    let contained = lo >= est.band_lower && hi <= est.band_upper;
    let mut out = pass_if(
        linear && contained,
        format!(
            "width/lambda {slope:.5} vs oracle {kappa:.5} ({}); interval [{lo:.8}, {hi:.8}] in band [{:.8}, {:.8}]: {}",
            if linear { "ok" } else { "off" },
            est.band_lower,
            est.band_upper,
            if contained { "yes" } else { "no, second-order shift moves the band centre" }
        ),
    );
    out.known = linear && !contained;
    out
}

fn sharpness() -> Outcome {
    let b = TWO_PI_SQ / 3.0;
    let profile = PeriodicProfile::cosine();
    let admissible = is_admissible(2, b, &profile).unwrap().admissible;
    let grid = uniform_k_grid(b, 256);
    let max_f2 = grid.iter().map(|&k| f_function(2, k, b, &profile).unwrap().abs()).fold(0.0, f64::max);
    let max_f2_oracle = grid.iter().step_by(16).map(|&k| oracle_f(2, k, b).abs()).fold(0.0, f64::max);
    let cfg = FiberConfig::new(b, 0.0, 0.0, profile, 40).unwrap();
    let lambda = 1e-3;
    let table = band_table(2, lambda, &grid, &cfg).unwrap();
    let slope2 = band_width(table.band(2)) / lambda;
    let slope1 = band_width(table.band(1)) / lambda;
    pass_if(
        !admissible && max_f2 < 1e-12 && max_f2_oracle < 1e-12 && slope2 < 0.1 * slope1,
        format!(
            "j=2 admissible: {admissible}; max|F_2| {max_f2:.1e} (oracle {max_f2_oracle:.1e}); width/lambda j=2 {slope2:.2e} vs j=1 {slope1:.3}"
        ),
    )
}

fn excluded() -> Outcome {
    let cosine = PeriodicProfile::cosine();
    let got = excluded_fields(2, &cosine, 10.0).unwrap();
    // Only l = 1 is present: excluded fields are the zeros of I_j(2π; ·), j ≤ 2.
    let mut want: Vec<f64> = (1..=2).flat_map(|j| oracle_roots_in_b(j, 2.0 * PI, 10.0)).collect();
    want.sort_by(f64::total_cmp);
    let matches = got.len() == want.len() && got.iter().zip(&want).all(|(g, w)| (g - w).abs() < 1e-9);
    let exact = got.len() == 1 && (got[0] - TWO_PI_SQ / 3.0).abs() < 1e-9;

    let two = PeriodicProfile::new(0.0, [(1, Complex64::new(0.5, 0.0)), (2, Complex64::new(0.3, 0.1))]).unwrap();
    let got_two = excluded_fields(2, &two, 10.0).unwrap();
    // A field is excluded only if I_j vanishes at both 2π and 4π.
    let mut common = Vec::new();
    for j in 1..=2 {
        let r4 = oracle_roots_in_b(j, 4.0 * PI, 10.0);
        for r in oracle_roots_in_b(j, 2.0 * PI, 10.0) {
            if r4.iter().any(|q| (q - r).abs() < 1e-9 * r) {
                common.push(r);
            }
        }
    }
    pass_if(
        matches && exact && got_two.is_empty() && common.is_empty(),
        format!("cosine: {got:?} (oracle {want:?}); two harmonics: {got_two:?} (oracle {common:?})"),
    )
}

fn randomized_consistency() -> Outcome {
    let (l, b, lambda) = (10.0, 1.0, 0.3);
    let profile = PeriodicProfile::cosine();
    let ones = CouplingField::constant(l, 1.0).unwrap();
    let random = Perturbation::Random { lambda, profile: &profile, couplings: &ones };
    let periodic = Perturbation::Periodic { lambda, profile: &profile };
    let mut rng = realization_rng(99, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-0.5 * l..0.5 * l), rng.gen_range(-0.5 * l..0.5 * l)];
        let want = b * x[0] + lambda * (2.0 * PI * x[0]).cos();
        let got = potential_at(x, b, &random);
        worst = worst.max((got[1] - want).abs()).max(got[0].abs());
    }
    let hr = discretize(l, 0.25, b, &random).unwrap();
    let hp = discretize(l, 0.25, b, &periodic).unwrap();
    let identical = hr.hop_x == hp.hop_x && hr.hop_y == hp.hop_y;
    pass_if(worst < 1e-12 && identical, format!("pointwise {worst:.1e} on 1e4 points; hopping entries identical: {identical}"))
}

fn sampler() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &eta in &[0.02, 0.1] {
        // 319² = 101761 draws.
        let field = sample_couplings_stream(316.0, eta, 17, 3).unwrap();
        let mut draws = field.values.clone();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = oracle_cdf(x, eta);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        let alpha = 0.05;
        let p = oracle_prob_abs_below(alpha, eta);
        let emp = draws.iter().filter(|x| x.abs() <= alpha).count() as f64 / n;
        let sigma = (p * (1.0 - p) / n).sqrt();
        ok &= ks < 0.01 && (emp - p).abs() <= 3.0 * sigma;
        parts.push(format!("eta {eta}: KS {ks:.4} over {n} draws, P(|w|<=0.05) {emp:.4} vs {p:.4} (3 sigma {:.4})", 3.0 * sigma));
    }
    pass_if(ok, parts.join("; "))
}

fn manifest(seed: u64, realization: u64, lambda: f64, l: f64) -> RealizationManifest {
    RealizationManifest { b: 1.0, lambda, eta: 0.1, l, h: 0.25, seed, realization, profile: ProfileSpec::cosine() }
}

fn spectral_location() -> Outcome {
    let (b, lambda, l) = (1.0, 0.05, 12.0);
    let clean = discretize(l, 0.25, b, &Perturbation::None).unwrap();
    let clean_spec = fermi_spectrum(&clean, 4.0 * b).unwrap();
    let eps = discretization_allowance(&bulk_eigenvalues(&clean, &clean_spec), b, 2);

    let margin = BULK_MARGIN / b.sqrt();
    let mut bulk_sets = Vec::new();
    let mut fitted = Vec::new();
    let mut located = true;
    let (mut outer_ipr, mut inner_ipr) = (Vec::new(), Vec::new());
    for r in 0..20u64 {
        let (_, ham) = manifest(2024, r, lambda, l).build().unwrap();
        let spec = fermi_spectrum(&ham, 4.0 * b).unwrap();
        let bulk = bulk_eigenvalues(&ham, &spec);
        let report = check_spectral_location(&bulk, b, lambda, 2, eps, None).unwrap();
        located &= report.violations.is_empty() && report.intervals_disjoint;
        fitted.push(report.fitted_c.unwrap());
        if r < 10 {
            let mut band1: Vec<(f64, f64)> = spec
                .values
                .iter()
                .zip(&spec.vectors)
                .filter(|(e, v)| (**e - b).abs() < b && interior_weight(&ham, v, margin) >= BULK_WEIGHT)
                .map(|(e, v)| ((e - b).abs(), ipr(v).unwrap()))
                .collect();
            band1.sort_by(|x, y| x.0.total_cmp(&y.0));
            let tenth = (band1.len() / 10).max(1);
            inner_ipr.extend(band1[..tenth].iter().map(|p| p.1));
            outer_ipr.extend(band1[band1.len() - tenth..].iter().map(|p| p.1));
        }
        bulk_sets.push(bulk);
    }
    let c_max = fitted.iter().copied().fold(0.0, f64::max);
    let c_min = fitted.iter().copied().fold(f64::INFINITY, f64::min);
    // One constant for the whole ensemble: every realization fits under max C.
    for bulk in &bulk_sets {
        let report = check_spectral_location(bulk, b, lambda, 2, eps, Some(c_max)).unwrap();
        located &= report.violations.is_empty() && report.intervals_disjoint;
    }
    let ratio = c_max / c_min;
    let stable = ratio < 2.0;
    println!(
        "info: band-1 bulk IPR median, outer 10% {:.4e} vs inner 10% {:.4e} (10 realizations)",
        median(outer_ipr),
        median(inner_ipr)
    );
    let mut out = pass_if(
        located && stable,
        format!(
            "eps_h {eps:.4}; all bulk eigenvalues below 4B inside the clusters with C = {c_max:.4}: {located}; fitted C max/min = {ratio:.2} (need < 2)"
        ),
    );
    out.known = located && !stable;
    out
}

fn hall_quantization() -> Outcome {
    let (b, l) = (1.0, 24.0);
    let switches = HalfPlaneSwitches::default();
    let clean = discretize(l, 0.25, b, &Perturbation::None).unwrap();
    let spec = fermi_spectrum(&clean, 4.0 * b).unwrap();
    let window = Window::central(l);
    let at = |e: f64, w: &Window| {
        let p = FermiProjection::new(&spec, clean.dim(), e).unwrap();
        hall_conductance(&clean, &p, &switches, Some(w))
    };
    let first = at(2.0 * b, &window);
    let second = at(4.0 * b, &window);
    let quarter = at(2.0 * b, &Window::central_fraction(l, 4.0));
    let clean_ok = (first.sigma_hall - 1.0).abs() <= 0.15 && (second.sigma_hall - 2.0).abs() <= 0.15;
    let residual_ok = first.imag_residual < 0.02 && second.imag_residual < 0.02;
    let window_ok = (quarter.sigma_hall - first.sigma_hall).abs() < 0.05;

    let family: Vec<(f64, _)> =
        [0.02, 0.05].iter().map(|&lambda| (lambda, manifest(7, 0, lambda, l).build().unwrap().1)).collect();
    let plateau = plateau_scan(&family, 1, &switches, Some(&window)).unwrap();
    let plateau_ok = plateau.iter().all(|p| p.within_tolerance && p.imag_residual < 0.02);
    let values: Vec<String> = std::iter::once(format!("0: {:.4}", first.sigma_hall))
        .chain(plateau.iter().map(|p| format!("{}: {:.4}", p.lambda, p.sigma_hall)))
        .collect();
    pass_if(
        clean_ok && residual_ok && window_ok && plateau_ok,
        format!(
            "L=24 clean: gap 1 {:.4}, gap 2 {:.4} (imag residual {:.1e}, {:.1e}); L/4 window at gap 1 {:.4}; plateau {}",
            first.sigma_hall,
            second.sigma_hall,
            first.imag_residual,
            second.imag_residual,
            quarter.sigma_hall,
            values.join(", ")
        ),
    )
}

/// Serialized outputs of every pipeline stage for a fixed configuration.
fn pipeline_bytes() -> Vec<u8> {
    let mut out = Vec::new();
    let b = 2.0;
    let cfg = FiberConfig::new(b, 0.0, 0.0, PeriodicProfile::cosine(), 34).unwrap();
    band_table(2, 0.05, &uniform_k_grid(b, 64), &cfg).unwrap().write_csv(&mut out).unwrap();
    let est = estimate_splitting(1, TWO_PI_SQ, &PeriodicProfile::cosine(), &[1e-3, 3e-3, 1e-2], 40).unwrap();
    out.extend(serde_json::to_vec(&est).unwrap());
    for r in 0..2 {
        let m = manifest(11, r, 0.3, 6.0);
        let (couplings, ham) = m.build().unwrap();
        out.extend(serde_json::to_vec(&couplings).unwrap());
        let spec = fermi_spectrum(&ham, 2.0).unwrap();
        write_spectrum_csv(&spec.values, &mut out).unwrap();
    }
    let (_, ham) = manifest(5, 0, 0.05, 8.0).build().unwrap();
    let spec = fermi_spectrum(&ham, 2.0).unwrap();
    let p = FermiProjection::new(&spec, ham.dim(), 2.0).unwrap();
    let hc = hall_conductance(&ham, &p, &HalfPlaneSwitches::default(), Some(&Window::central(8.0)));
    out.extend(serde_json::to_vec(&hc).unwrap());
    out
}

fn determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(pipeline_bytes)
    };
    let a = run(4);
    let b = run(4);
    let c = run(1);
    pass_if(a == b && a == c, format!("{} bytes; repeat identical: {}; 1 vs 4 threads identical: {}", a.len(), a == b, a == c))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed form vs quadrature", closed_form),
        ("unperturbed fibers", unperturbed),
        ("constant-profile null", constant_profile),
        ("Feynman-Hellmann slope", feynman_hellmann),
        ("splitting linearity", splitting_linearity),
        ("criterion sharpness", sharpness),
        ("excluded fields", excluded),
        ("randomized-potential consistency", randomized_consistency),
        ("sampler correctness", sampler),
        ("spectral location", spectral_location),
        ("Hall quantization", hall_quantization),
        ("determinism", determinism),
    ];
    let mut fatal = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && o.known { " [known clause, not fatal]" } else { "" };
        println!("criterion {:>2} {status}: {name}{note}: {} ({:.1}s)", n + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.passed && !o.known {
            fatal += 1;
        }
    }
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{fatal} criteria failed");
        ExitCode::FAILURE
    }
}
