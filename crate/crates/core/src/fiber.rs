//! Fiber operators `h_λ(k) = -d²/dt² + (Bt + λ a(t + k/B))²` in the
//! oscillator eigenbasis of `h_0`, their band functions `E_j(k; λ)`, and the
//! spectral bands of the periodically perturbed Landau Hamiltonian.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{symmetric_eigenvalues, SymMatrix};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::profile::PeriodicProfile;
use crate::quadrature::{QuadratureRule, MAX_NODES};
use crate::specfun::{check_band, check_field, normalized_hermite_values};

/// Basis functions kept beyond the highest requested band.
pub const TRUNCATION_MARGIN: usize = 30;

/// Basis doublings attempted before reporting non-convergence.
pub const MAX_DOUBLINGS: usize = 4;

/// Convergence threshold for band values, relative to `B`.
pub const BAND_TOLERANCE: f64 = 1e-8;

/// Default k-grid resolution per period.
pub const DEFAULT_K_SAMPLES: usize = 256;

/// Minimum k-grid resolution accepted by [`spectrum_bands`].
pub const MIN_K_SAMPLES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct FiberConfig {
    pub b: f64,
    pub lambda: f64,
    pub k: f64,
    pub profile: PeriodicProfile,
    pub basis_size: usize,
}

impl FiberConfig {
    pub fn new(b: f64, lambda: f64, k: f64, profile: PeriodicProfile, basis_size: usize) -> Result<Self> {
        let cfg = Self { b, lambda, k, profile, basis_size };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_field(self.b)?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("coupling lambda must be >= 0, got {}", self.lambda)));
        }
        if !self.k.is_finite() {
            return Err(Error::invalid("quasimomentum k must be finite"));
        }
        if self.basis_size < 2 {
            return Err(Error::invalid(format!("basis size must be >= 2, got {}", self.basis_size)));
        }
        Ok(())
    }

    pub fn at_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn with_basis_size(&self, basis_size: usize) -> Self {
        Self { basis_size, ..self.clone() }
    }

    /// Landau level `(2j - 1) B`.
    pub fn level(&self, j: usize) -> f64 {
        (2 * j - 1) as f64 * self.b
    }
}

/// Gauss-Hermite node count for the matrix elements: enough for the
/// polynomial part of `φ_m φ_n` plus the oscillation of `a` across the
/// support of the highest basis function.
fn assembly_nodes(n: usize, b: f64, max_harmonic: u32) -> usize {
    let l = max_harmonic as f64;
    let freq = 2.0 * PI * l / b.sqrt();
    let reach = (2.0 * n as f64 + 1.0).sqrt();
    let q = 4 * (n + max_harmonic as usize) + (2.0 * freq * reach).ceil() as usize;
    q.clamp(16, MAX_NODES)
}

/// Matrix of `h_λ(k)` in the first `N` oscillator eigenfunctions:
/// `(2m - 1) B δ_mn + ⟨φ_m, v_λ(·; k) φ_n⟩` with
/// `v_λ(t; k) = 2Btλ a(t + k/B) + λ² a(t + k/B)²`.
pub fn assemble_fiber_matrix(cfg: &FiberConfig) -> Result<SymMatrix> {
    assemble_with_nodes(cfg, assembly_nodes(cfg.basis_size, cfg.b, cfg.profile.max_harmonic()))
}

fn assemble_with_nodes(cfg: &FiberConfig, nodes: usize) -> Result<SymMatrix> {
    cfg.validate()?;
    let n = cfg.basis_size;
    let b = cfg.b;
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, (2 * i + 1) as f64 * b);
    }
    if cfg.lambda == 0.0 {
        return Ok(m);
    }

    let rule = QuadratureRule::gauss_hermite_shared(nodes)?;
    let sqrt_b = b.sqrt();
    let shift = cfg.k / b;
    let lambda = cfg.lambda;
    let pim4 = PI.powf(-0.25);
    let mut upper = vec![0.0; n * n];
    let mut row = Vec::with_capacity(n);
    for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
        let t = u / sqrt_b;
        let a = cfg.profile.eval(t + shift);
        let v = 2.0 * b * t * lambda * a + lambda * lambda * a * a;
        // √w ĥ_q(u), so that the product of two rows carries the full weight.
        normalized_hermite_values(n - 1, u, w.sqrt() * pim4, &mut row);
        for p in 0..n {
            let rp = row[p] * v;
            if rp == 0.0 {
                continue;
            }
            let dst = &mut upper[p * n..(p + 1) * n];
            for q in p..n {
                dst[q] += rp * row[q];
            }
        }
    }
    for p in 0..n {
        for q in p..n {
            let v = m.get(p, q) + upper[p * n + q];
            m.set_sym(p, q, v);
        }
    }
    Ok(m)
}

/// All eigenvalues of the truncated fiber matrix, ascending.
pub fn fiber_eigenvalues(cfg: &FiberConfig) -> Result<Vec<f64>> {
    symmetric_eigenvalues(&assemble_fiber_matrix(cfg)?)
}

/// `n` equally spaced quasimomenta `0, B/n, …` covering `[0, B)`.
pub fn uniform_k_grid(b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * b / n as f64).collect()
}

/// Sampled band functions `E_j(k; λ)`, `j = 1..=bands`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub b: f64,
    pub lambda: f64,
    pub bands: usize,
    /// Basis size at which the values converged.
    pub basis_size: usize,
    pub k_grid: Vec<f64>,
    /// `values[j - 1][i]` is `E_j(k_grid[i]; λ)`.
    pub values: Vec<Vec<f64>>,
}

impl BandTable {
    pub fn band(&self, j: usize) -> &[f64] {
        &self.values[j - 1]
    }

    /// CSV rows `k,j,E`, one per sample, band-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,j,E")?;
        for (j, row) in self.values.iter().enumerate() {
            for (k, e) in self.k_grid.iter().zip(row) {
                writeln!(out, "{},{},{}", fmt_f64(*k), j + 1, fmt_f64(*e))?;
            }
        }
        Ok(())
    }
}

fn check_truncation(bands: usize, basis_size: usize) -> Result<()> {
    if bands == 0 {
        return Err(Error::invalid("need at least one band"));
    }
    if bands + TRUNCATION_MARGIN > basis_size {
        return Err(Error::invalid(format!(
            "basis size {basis_size} is too small for {bands} bands (need at least {})",
            bands + TRUNCATION_MARGIN
        )));
    }
    Ok(())
}

fn lowest_bands_on_grid(cfg: &FiberConfig, lambda: f64, k_grid: &[f64], bands: usize) -> Result<Vec<Vec<f64>>> {
    let base = cfg.with_lambda(lambda);
    k_grid
        .par_iter()
        .map(|&k| {
            let mut ev = fiber_eigenvalues(&base.at_k(k))?;
            ev.truncate(bands);
            Ok(ev)
        })
        .collect()
}

/// Band functions `E_1..=E_bands` on `k_grid`. The basis starts at
/// `cfg.basis_size` and is doubled until two successive sizes agree to
/// `1e-8·B` everywhere on the grid.
pub fn band_table(bands: usize, lambda: f64, k_grid: &[f64], cfg: &FiberConfig) -> Result<BandTable> {
    cfg.with_lambda(lambda).validate()?;
    check_truncation(bands, cfg.basis_size)?;
    if k_grid.is_empty() {
        return Err(Error::invalid("k grid is empty"));
    }
    let mut n = cfg.basis_size;
    let mut prev = lowest_bands_on_grid(&cfg.with_basis_size(n), lambda, k_grid, bands)?;
    let mut diff = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        n *= 2;
        let next = lowest_bands_on_grid(&cfg.with_basis_size(n), lambda, k_grid, bands)?;
        diff = prev
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        if diff < BAND_TOLERANCE * cfg.b {
            let mut values = vec![Vec::with_capacity(k_grid.len()); bands];
            for per_k in &next {
                for (j, e) in per_k.iter().enumerate() {
                    values[j].push(*e);
                }
            }
            return Ok(BandTable { b: cfg.b, lambda, bands, basis_size: n, k_grid: k_grid.to_vec(), values });
        }
        prev = next;
    }
    Err(Error::convergence(format!("band functions at lambda = {lambda} after {MAX_DOUBLINGS} basis doublings"), diff))
}

/// One band function `E_j(k; λ)` on `k_grid`; `cfg.k` is ignored.
pub fn band_function(j: usize, lambda: f64, k_grid: &[f64], cfg: &FiberConfig) -> Result<Vec<f64>> {
    check_band(j)?;
    Ok(band_table(j, lambda, k_grid, cfg)?.values.swap_remove(j - 1))
}

/// Converged `E_j(k; λ)` at a single quasimomentum.
pub fn band_value(j: usize, lambda: f64, k: f64, cfg: &FiberConfig) -> Result<f64> {
    Ok(band_function(j, lambda, &[k], cfg)?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub j: usize,
    /// Top of band `j`.
    pub lower: f64,
    /// Bottom of band `j + 1`.
    pub upper: f64,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpectrum {
    pub b: f64,
    pub lambda: f64,
    pub intervals: Vec<BandInterval>,
    pub gaps: Vec<SpectralGap>,
    /// Every gap `G_1..G_J` is nonempty.
    pub disjoint: bool,
    /// `(j, k)` where bands `j` and `j + 1` come within `1e-8·B`; reported, not interpreted.
    pub near_crossings: Vec<(usize, f64)>,
}

/// Extremum of a periodic sample sequence, refined by the parabola through
/// the grid extremum and its two neighbours.
fn refined_extremum(values: &[f64], maximum: bool) -> f64 {
    let n = values.len();
    let sign = if maximum { 1.0 } else { -1.0 };
    let (i, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if sign * v > acc.1 { (i, sign * v) } else { acc });
    let y1 = values[i];
    if n < 3 {
        return y1;
    }
    let y0 = values[(i + n - 1) % n];
    let y2 = values[(i + 1) % n];
    let curvature = y0 - 2.0 * y1 + y2;
    if sign * curvature >= 0.0 {
        return y1;
    }
    let x = (-(y2 - y0) / (2.0 * curvature)).clamp(-1.0, 1.0);
    let refined = y1 + 0.5 * (y2 - y0) * x + 0.5 * curvature * x * x;
    if maximum {
        refined.max(y1)
    } else {
        refined.min(y1)
    }
}

/// Spectral bands `[min_k E_j, max_k E_j]` for `j = 1..=bands`, the gaps
/// between consecutive bands, and whether all of them are open.
pub fn spectrum_bands(bands: usize, lambda: f64, cfg: &FiberConfig, k_samples: usize) -> Result<BandSpectrum> {
    if k_samples < MIN_K_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_K_SAMPLES} k samples per period, got {k_samples}")));
    }
    let grid = uniform_k_grid(cfg.b, k_samples);
    let table = band_table(bands + 1, lambda, &grid, cfg)?;
    let intervals: Vec<BandInterval> = (1..=bands + 1)
        .map(|j| BandInterval {
            j,
            lower: refined_extremum(table.band(j), false),
            upper: refined_extremum(table.band(j), true),
        })
        .collect();
    let gaps: Vec<SpectralGap> = intervals
        .windows(2)
        .map(|w| SpectralGap { j: w[0].j, lower: w[0].upper, upper: w[1].lower, open: w[0].upper < w[1].lower })
        .collect();
    let mut near_crossings = Vec::new();
    for j in 1..=bands {
        for (i, k) in grid.iter().enumerate() {
            if table.band(j + 1)[i] - table.band(j)[i] < BAND_TOLERANCE * cfg.b {
                near_crossings.push((j, *k));
            }
        }
    }
    let disjoint = gaps.iter().all(|g| g.open);
    Ok(BandSpectrum {
        b: cfg.b,
        lambda,
        intervals: intervals.into_iter().take(bands).collect(),
        gaps,
        disjoint,
        near_crossings,
    })
}

/// `∫ f(t) t φ_j(t; B)² dt` by Gauss-Hermite quadrature in `u = √B t`,
/// doubling the node count until successive values agree to `1e-13`
/// relative. `max_harmonic` sizes the first rule for periodic `f`.
pub fn oscillator_moment<F: Fn(f64) -> f64>(j: usize, b: f64, max_harmonic: u32, f: F) -> Result<f64> {
    check_band(j)?;
    check_field(b)?;
    let sqrt_b = b.sqrt();
    let pim4 = PI.powf(-0.25);
    let mut row = Vec::with_capacity(j);
    let mut evaluate = |nodes: usize| -> Result<f64> {
        let rule = QuadratureRule::gauss_hermite_shared(nodes)?;
        let mut acc = 0.0;
        for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
            normalized_hermite_values(j - 1, u, pim4, &mut row);
            let h = row[j - 1];
            let t = u / sqrt_b;
            acc += w * h * h * t * f(t);
        }
        Ok(acc)
    };
    let mut nodes = assembly_nodes(j, b, max_harmonic).min(MAX_NODES / 2);
    let mut last = evaluate(nodes)?;
    while 2 * nodes <= MAX_NODES {
        nodes *= 2;
        let next = evaluate(nodes)?;
        if (next - last).abs() <= 1e-13 * next.abs().max(1.0) {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::convergence(format!("oscillator moment for j = {j}"), f64::NAN))
}

/// First-order slope `∂E_j(k; 0)/∂λ = 2B ∫ a(t + k/B) t φ_j(t)² dt`.
pub fn feynman_hellmann_slope(j: usize, k: f64, b: f64, profile: &PeriodicProfile) -> Result<f64> {
    let shift = k / b;
    let moment = oscillator_moment(j, b, profile.max_harmonic(), |t| profile.eval(t + shift))?;
    Ok(2.0 * b * moment)
}

/// Two-sided difference `(E_j(k; δ) - E_j(k; -δ)) / 2δ`. The `-δ` side is
/// evaluated as `+δ` with the negated profile, which is the same operator.
pub fn finite_difference_slope(j: usize, k: f64, cfg: &FiberConfig, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let plus = band_value(j, delta, k, cfg)?;
    let flipped = FiberConfig { profile: cfg.profile.negated(), ..cfg.clone() };
    let minus = band_value(j, delta, k, &flipped)?;
    Ok((plus - minus) / (2.0 * delta))
}
