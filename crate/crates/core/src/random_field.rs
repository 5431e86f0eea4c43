//! The randomized vector potential `A_ω = A₀ + λ Σ_γ ω_γ v(· - γ)`, its
//! coupling sampler, the link-phase discretization of `(-i∇ - A)²` on a
//! Dirichlet box, and the spectral checks run on it.

use std::io::{self, Write};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{c64, Mat, Par};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::profile::{PeriodicProfile, ProfileSpec};

/// Grids with more sites than this use the iterative low-spectrum solver.
pub const DENSE_LIMIT: usize = 4096;

/// Residual target for eigenpairs, relative to the norm bound of `H`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// `ψ(t) = exp(-1/(1 - t²))` on `(-1, 1)`, zero outside.
fn psi(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn psi_prime(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - t * t;
        -2.0 * t / (d * d) * psi(t)
    }
}

/// The bump `ζ(t) = ψ(t) / Σ_m ψ(t - m)`, supported in `(-1, 1)`.
///
/// On `[0, 1)` only `m ∈ {0, 1}` contribute; on `(-1, 0)` the value is
/// taken as `1 - ζ(t + 1)`, so that `ζ(f) + ζ(f - 1)` is exactly one in
/// floating point and every partition-of-unity sum collapses bit-exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BumpFunction;

impl BumpFunction {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= -1.0 || t >= 1.0 {
            0.0
        } else if t >= 0.0 {
            Self::right(t)
        } else {
            1.0 - Self::right(t + 1.0)
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= -1.0 || t >= 1.0 {
            0.0
        } else if t >= 0.0 {
            Self::right_prime(t)
        } else {
            -Self::right_prime(t + 1.0)
        }
    }

    fn right(f: f64) -> f64 {
        let p = psi(f);
        p / (p + psi(f - 1.0))
    }

    fn right_prime(f: f64) -> f64 {
        let (p, q) = (psi(f), psi(f - 1.0));
        let (dp, dq) = (psi_prime(f), psi_prime(f - 1.0));
        (dp * q - p * dq) / ((p + q) * (p + q))
    }

    /// The two lattice points whose bumps cover `t`, with their weights:
    /// `(⌊t⌋, ζ(t - ⌊t⌋), 1 - ζ(t - ⌊t⌋))` for `⌊t⌋` and `⌊t⌋ + 1`.
    pub fn partition(&self, t: f64) -> (i64, f64, f64) {
        let base = t.floor();
        let w = Self::right(t - base);
        (base as i64, w, 1.0 - w)
    }
}

/// Normalization `C_η = 1 / (2(1 - e^{-1/η}))` of the density `ρ_η`.
pub fn density_normalization(eta: f64) -> f64 {
    0.5 / -(-1.0 / eta).exp_m1()
}

/// `ρ_η(s) = C_η η^{-1} e^{-|s|/η}` on `[-1, 1]`.
pub fn density(s: f64, eta: f64) -> f64 {
    if s.abs() > 1.0 {
        0.0
    } else {
        density_normalization(eta) / eta * (-s.abs() / eta).exp()
    }
}

/// Distribution function of `ρ_η`.
pub fn cdf(s: f64, eta: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    0.5 + s.signum() * density_normalization(eta) * -(-s.abs() / eta).exp_m1()
}

/// `P(|ω| <= α) = 2C_η(1 - e^{-α/η})`.
pub fn prob_abs_below(alpha: f64, eta: f64) -> f64 {
    (2.0 * density_normalization(eta) * -(-alpha.clamp(0.0, 1.0) / eta).exp_m1()).min(1.0)
}

/// Inverse of [`cdf`]: `sign(2u-1)·(-η ln(1 - |2u-1|(1 - e^{-1/η})))`.
pub fn inverse_cdf(u: f64, eta: f64) -> f64 {
    let v = 2.0 * u - 1.0;
    let mass = -(-1.0 / eta).exp_m1();
    let omega = -eta * (-v.abs() * mass).ln_1p();
    omega.copysign(v).clamp(-1.0, 1.0)
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("dilution eta must be > 0, got {eta}")));
    }
    Ok(())
}

fn check_box(l: f64) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid(format!("box side L must be > 0, got {l}")));
    }
    Ok(())
}

/// Couplings `ω_γ` on the integer points `γ` with `|γ_i| < L/2 + 1`, i.e.
/// every lattice point whose bump reaches into `Q_L = [-L/2, L/2]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingField {
    pub l: f64,
    pub eta: f64,
    pub seed: u64,
    pub stream: u64,
    /// Largest `|γ_i|` on the lattice.
    pub radius: i64,
    /// Row-major over `(γ_2, γ_1)`, both running from `-radius` to `radius`.
    pub values: Vec<f64>,
}

fn lattice_radius(l: f64) -> i64 {
    // Largest integer strictly below L/2 + 1.
    let r = (0.5 * l + 1.0).ceil() as i64 - 1;
    r.max(0)
}

impl CouplingField {
    /// Every coupling set to `value`; `ω ≡ 1` reproduces the periodic potential.
    pub fn constant(l: f64, value: f64) -> Result<Self> {
        check_box(l)?;
        if !(value.abs() <= 1.0) {
            return Err(Error::invalid("couplings must lie in [-1, 1]"));
        }
        let radius = lattice_radius(l);
        let side = (2 * radius + 1) as usize;
        Ok(Self { l, eta: f64::NAN, seed: 0, stream: 0, radius, values: vec![value; side * side] })
    }

    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ω_γ`, zero off the lattice.
    pub fn get(&self, g1: i64, g2: i64) -> f64 {
        if g1.abs() > self.radius || g2.abs() > self.radius {
            return 0.0;
        }
        let side = self.side() as i64;
        self.values[((g2 + self.radius) * side + g1 + self.radius) as usize]
    }

    pub fn set(&mut self, g1: i64, g2: i64, value: f64) {
        let side = self.side() as i64;
        assert!(g1.abs() <= self.radius && g2.abs() <= self.radius, "lattice point off the box");
        self.values[((g2 + self.radius) * side + g1 + self.radius) as usize] = value;
    }
}

/// Deterministic generator for `(seed, stream)`; realization `r` of a run
/// uses stream `r`, so it can be reproduced on its own.
pub fn realization_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_couplings(l: f64, eta: f64, seed: u64) -> Result<CouplingField> {
    sample_couplings_stream(l, eta, seed, 0)
}

/// i.i.d. draws from `ρ_η` by inverse transform.
pub fn sample_couplings_stream(l: f64, eta: f64, seed: u64, stream: u64) -> Result<CouplingField> {
    check_eta(eta)?;
    check_box(l)?;
    let radius = lattice_radius(l);
    let side = (2 * radius + 1) as usize;
    let mut rng = realization_rng(seed, stream);
    let values = (0..side * side).map(|_| inverse_cdf(rng.gen::<f64>(), eta)).collect();
    Ok(CouplingField { l, eta, seed, stream, radius, values })
}

/// Which vector potential the discretization uses on top of `A₀ = (0, B x_1)`.
#[derive(Debug, Clone, Copy)]
pub enum Perturbation<'a> {
    None,
    /// `λ A_per = (0, λ a(x_1))`.
    Periodic { lambda: f64, profile: &'a PeriodicProfile },
    /// `λ A_ω` with `v(x) = (0, a(x_1) ζ(x_1) ζ(x_2))`.
    Random { lambda: f64, profile: &'a PeriodicProfile, couplings: &'a CouplingField },
}

impl Perturbation<'_> {
    pub fn lambda(&self) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Periodic { lambda, .. } | Perturbation::Random { lambda, .. } => *lambda,
        }
    }
}

/// `A₀(x) + λ Σ_γ ω_γ (0, a(x_1 - γ_1) ζ(x_1 - γ_1) ζ(x_2 - γ_2))`. Only the
/// four cells around `x` contribute, and `a(x_1 - γ_1) = a(x_1)` is
/// factored out by periodicity.
pub fn potential_at(x: [f64; 2], b: f64, perturbation: &Perturbation<'_>) -> [f64; 2] {
    let base = b * x[0];
    match perturbation {
        Perturbation::None => [0.0, base],
        Perturbation::Periodic { lambda, profile } => [0.0, base + lambda * profile.eval(x[0])],
        Perturbation::Random { lambda, profile, couplings } => {
            let bump = BumpFunction;
            let (g1, w1_lo, w1_hi) = bump.partition(x[0]);
            let (g2, w2_lo, w2_hi) = bump.partition(x[1]);
            let column = |c: i64| w2_lo * couplings.get(c, g2) + w2_hi * couplings.get(c, g2 + 1);
            let s = w1_lo * column(g1) + w1_hi * column(g1 + 1);
            [0.0, base + lambda * (profile.eval(x[0]) * s)]
        }
    }
}

/// `(sup |λA|, sup |div λA|)` over a grid with `per_unit` points per unit
/// length on `Q_L`, the two norms that set the cluster radius. Only `A_2`
/// is nonzero and depends on `x_2` through the bumps, so `div A = ∂_2 A_2`.
pub fn perturbation_norms(l: f64, per_unit: usize, perturbation: &Perturbation<'_>) -> (f64, f64) {
    let n = ((l * per_unit.max(1) as f64).ceil() as usize).max(1);
    let bump = BumpFunction;
    let mut sup = 0.0f64;
    let mut sup_div = 0.0f64;
    for i1 in 0..=n {
        let x1 = -0.5 * l + l * i1 as f64 / n as f64;
        for i2 in 0..=n {
            let x2 = -0.5 * l + l * i2 as f64 / n as f64;
            let (v, dv) = match perturbation {
                Perturbation::None => (0.0, 0.0),
                Perturbation::Periodic { lambda, profile } => (lambda * profile.eval(x1), 0.0),
                Perturbation::Random { lambda, profile, couplings } => {
                    let (g1, w1_lo, w1_hi) = bump.partition(x1);
                    let (g2, w2_lo, w2_hi) = bump.partition(x2);
                    let slope = bump.derivative(x2 - g2 as f64);
                    let column = |c: i64| {
                        let (lo, hi) = (couplings.get(c, g2), couplings.get(c, g2 + 1));
                        (w2_lo * lo + w2_hi * hi, slope * (lo - hi))
                    };
                    let (c0, d0) = column(g1);
                    let (c1, d1) = column(g1 + 1);
                    let a = lambda * profile.eval(x1);
                    (a * (w1_lo * c0 + w1_hi * c1), a * (w1_lo * d0 + w1_hi * d1))
                }
            };
            sup = sup.max(v.abs());
            sup_div = sup_div.max(dv.abs());
        }
    }
    (sup, sup_div)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Dirichlet,
}

/// Link-phase finite differences for `(-i∇ - A)²` on the cell-centred grid
/// `x_i = -L/2 + (i + 1/2) h`, `i = 0..n`, with Dirichlet truncation.
/// Site `(i_1, i_2)` has index `i_2 n + i_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHamiltonian2D {
    pub l: f64,
    pub h: f64,
    pub n: usize,
    pub b: f64,
    pub lambda: f64,
    pub boundary: BoundaryCondition,
    /// `H[x, x + h e_1]` for `x = (i_1, i_2)`, `i_1 < n - 1`, at index `i_2 (n-1) + i_1`.
    pub hop_x: Vec<Complex64>,
    /// `H[x, x + h e_2]` for `x = (i_1, i_2)`, `i_2 < n - 1`, at index `i_2 n + i_1`.
    pub hop_y: Vec<Complex64>,
}

/// Checks `h <= min(1/2, 1/√B)` and `L/h` integral; returns `n = L/h`.
pub fn grid_size(l: f64, h: f64, b: f64) -> Result<usize> {
    check_box(l)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("grid spacing h must be > 0, got {h}")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("field B must be >= 0 for the box model, got {b}")));
    }
    let limit = if b > 0.0 { 0.5f64.min(1.0 / b.sqrt()) } else { 0.5 };
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("grid spacing h = {h} exceeds min(1/2, 1/sqrt(B)) = {limit}")));
    }
    let ratio = l / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio || n < 2.0 {
        return Err(Error::invalid(format!("L/h = {ratio} must be an integer >= 2")));
    }
    Ok(n as usize)
}

pub fn site_coordinate(i: usize, l: f64, h: f64) -> f64 {
    -0.5 * l + (i as f64 + 0.5) * h
}

fn hop(theta: f64, inv_h2: f64) -> Complex64 {
    -Complex64::from_polar(inv_h2, theta)
}

pub fn discretize(l: f64, h: f64, b: f64, perturbation: &Perturbation<'_>) -> Result<DiscreteHamiltonian2D> {
    let n = grid_size(l, h, b)?;
    let lambda = perturbation.lambda();
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("coupling lambda must be >= 0, got {lambda}")));
    }
    let inv_h2 = 1.0 / (h * h);
    let x = |i: usize| site_coordinate(i, l, h);
    // A_1 vanishes identically, so horizontal links carry no phase.
    let hop_x = vec![hop(0.0, inv_h2); (n - 1) * n];
    let mut hop_y = Vec::with_capacity((n - 1) * n);
    for i2 in 0..n - 1 {
        let mid = x(i2) + 0.5 * h;
        for i1 in 0..n {
            let a = potential_at([x(i1), mid], b, perturbation);
            hop_y.push(hop(-h * a[1], inv_h2));
        }
    }
    Ok(DiscreteHamiltonian2D { l, h, n, b, lambda, boundary: BoundaryCondition::Dirichlet, hop_x, hop_y })
}

impl DiscreteHamiltonian2D {
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn diagonal(&self) -> f64 {
        4.0 / (self.h * self.h)
    }

    /// Gershgorin bound `8/h² >= ‖H‖`.
    pub fn norm_bound(&self) -> f64 {
        8.0 / (self.h * self.h)
    }

    pub fn coordinates(&self, index: usize) -> [f64; 2] {
        [site_coordinate(index % self.n, self.l, self.h), site_coordinate(index / self.n, self.l, self.h)]
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        let d = self.diagonal();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = d * xi;
        }
        for i2 in 0..n {
            for i1 in 0..n - 1 {
                let t = self.hop_x[i2 * (n - 1) + i1];
                let p = i2 * n + i1;
                y[p] += t * x[p + 1];
                y[p + 1] += t.conj() * x[p];
            }
        }
        for i2 in 0..n - 1 {
            for i1 in 0..n {
                let t = self.hop_y[i2 * n + i1];
                let p = i2 * n + i1;
                y[p] += t * x[p + n];
                y[p + n] += t.conj() * x[p];
            }
        }
    }

    /// Dense matrix, Hermitian by construction (each link is written once
    /// and mirrored with its conjugate).
    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.n;
        let dim = self.dim();
        let mut m = Mat::<c64>::zeros(dim, dim);
        let d = self.diagonal();
        for p in 0..dim {
            m[(p, p)] = c64::new(d, 0.0);
        }
        for i2 in 0..n {
            for i1 in 0..n - 1 {
                let t = self.hop_x[i2 * (n - 1) + i1];
                let p = i2 * n + i1;
                m[(p, p + 1)] = t;
                m[(p + 1, p)] = t.conj();
            }
        }
        for i2 in 0..n - 1 {
            for i1 in 0..n {
                let t = self.hop_y[i2 * n + i1];
                let p = i2 * n + i1;
                m[(p, p + n)] = t;
                m[(p + n, p)] = t.conj();
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diagonal() * self.dim() as f64
    }

    /// The same operator for `A + ∇χ`, `χ(x) = g·x`: every link phase
    /// shifts by `-h g_e`. Equals `U H U†` with `U = diag(e^{iχ(x)})`.
    pub fn gauge_shifted(&self, gradient: [f64; 2]) -> Self {
        let rot = |g: f64| Complex64::from_polar(1.0, -self.h * g);
        let (rx, ry) = (rot(gradient[0]), rot(gradient[1]));
        Self {
            hop_x: self.hop_x.iter().map(|t| t * rx).collect(),
            hop_y: self.hop_y.iter().map(|t| t * ry).collect(),
            ..self.clone()
        }
    }

    /// `e^{iχ(x)}` for `χ(x) = g·x` at every site, the unitary of [`Self::gauge_shifted`].
    pub fn gauge_factors(&self, gradient: [f64; 2]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|p| {
                let x = self.coordinates(p);
                Complex64::from_polar(1.0, gradient[0] * x[0] + gradient[1] * x[1])
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverPath {
    Dense,
    ChebyshevSubspace,
}

/// Lowest eigenpairs of a [`DiscreteHamiltonian2D`], ascending.
#[derive(Debug, Clone)]
pub struct Spectrum2D {
    pub values: Vec<f64>,
    /// `vectors[k]` is the normalized eigenvector of `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
    /// `‖H v - E v‖` per pair.
    pub residuals: Vec<f64>,
    pub norm_bound: f64,
    pub path: SolverPath,
}

impl Spectrum2D {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn residual(h: &DiscreteHamiltonian2D, v: &[Complex64], e: f64, scratch: &mut Vec<Complex64>) -> f64 {
    scratch.resize(v.len(), Complex64::new(0.0, 0.0));
    h.apply(v, scratch);
    scratch.iter().zip(v).map(|(hv, x)| (hv - e * x).norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenvalues, ascending, by dense diagonalization (no vectors).
pub fn dense_eigenvalues(h: &DiscreteHamiltonian2D) -> Result<Vec<f64>> {
    let (mut values, _) = hermitian_evd(&h.to_dense(), false, "dense Hermitian eigenvalues")?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenvalues (ascending) and optionally eigenvectors from the lower
/// triangle. Runs sequentially: faer's parallel kernels split work by the
/// size of the current thread pool, which changes the rounding, and
/// outputs must not depend on the thread count.
pub(crate) fn hermitian_evd(m: &Mat<c64>, vectors: bool, what: &str) -> Result<(Vec<f64>, Option<Mat<c64>>)> {
    let n = m.nrows();
    let mut s = Diag::<c64>::zeros(n);
    let mut u = vectors.then(|| Mat::<c64>::zeros(n, n));
    let compute = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut buf = MemBuffer::new(self_adjoint_evd_scratch::<c64>(n, compute, Par::Seq, Default::default()));
    self_adjoint_evd(m.as_ref(), s.as_mut(), u.as_mut().map(|u| u.as_mut()), Par::Seq, MemStack::new(&mut buf), Default::default())
        .map_err(|e| Error::convergence(format!("{what} ({e:?})"), f64::NAN))?;
    Ok(((0..n).map(|k| s[k].re).collect(), u))
}

/// The `count` lowest eigenpairs: dense diagonalization up to
/// [`DENSE_LIMIT`] sites, Chebyshev-filtered subspace iteration beyond.
pub fn spectrum_2d(h: &DiscreteHamiltonian2D, count: usize) -> Result<Spectrum2D> {
    if count == 0 || count > h.dim() {
        return Err(Error::invalid(format!("eigenpair count must lie in 1..={}, got {count}", h.dim())));
    }
    let spectrum = if h.dim() <= DENSE_LIMIT { dense_spectrum(h, count)? } else { chebyshev_spectrum(h, count)? };
    let tol = RESIDUAL_TOLERANCE * spectrum.norm_bound;
    if spectrum.max_residual() > tol {
        return Err(Error::convergence("2D eigenpairs", spectrum.max_residual()));
    }
    Ok(spectrum)
}

fn dense_spectrum(h: &DiscreteHamiltonian2D, count: usize) -> Result<Spectrum2D> {
    let m = h.to_dense();
    let (s, u) = hermitian_evd(&m, true, "dense Hermitian eigendecomposition")?;
    let u = u.expect("eigenvectors requested");
    let dim = h.dim();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut scratch = Vec::new();
    for k in 0..count {
        let v: Vec<Complex64> = (0..dim).map(|p| u[(p, k)]).collect();
        let e = s[k];
        residuals.push(residual(h, &v, e, &mut scratch));
        values.push(e);
        vectors.push(v);
    }
    Ok(Spectrum2D { values, vectors, residuals, norm_bound: h.norm_bound(), path: SolverPath::Dense })
}

/// Orthonormalizes the columns of `x` in place (two passes of modified
/// Gram-Schmidt).
fn orthonormalize(x: &mut [Vec<Complex64>]) {
    for _ in 0..2 {
        for k in 0..x.len() {
            let (done, rest) = x.split_at_mut(k);
            let v = &mut rest[0];
            for q in done.iter() {
                let dot: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for vi in v.iter_mut() {
                    *vi /= norm;
                }
            }
        }
    }
}

const CHEBYSHEV_DEGREE: usize = 40;
const CHEBYSHEV_MAX_SWEEPS: usize = 200;

fn chebyshev_spectrum(h: &DiscreteHamiltonian2D, count: usize) -> Result<Spectrum2D> {
    let dim = h.dim();
    let block = (count + (count / 4).max(8)).min(dim);
    let upper = h.norm_bound();
    let mut rng = realization_rng(0x5eed, 0);
    let mut x: Vec<Vec<Complex64>> = (0..block)
        .map(|_| (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect())
        .collect();
    orthonormalize(&mut x);
    let mut scratch = Vec::new();
    let mut ritz = rayleigh_ritz(h, &mut x)?;
    let tol = RESIDUAL_TOLERANCE * upper;
    let mut worst = f64::INFINITY;
    for _ in 0..CHEBYSHEV_MAX_SWEEPS {
        // Damp everything above the largest Ritz value of the block.
        let cut = ritz[block - 1];
        let (c, e) = (0.5 * (upper + cut), 0.5 * (upper - cut));
        x.par_iter_mut().for_each(|v| chebyshev_filter(h, v, c, e, CHEBYSHEV_DEGREE));
        orthonormalize(&mut x);
        ritz = rayleigh_ritz(h, &mut x)?;
        worst = (0..count).map(|k| residual(h, &x[k], ritz[k], &mut scratch)).fold(0.0, f64::max);
        if worst <= 0.1 * tol {
            break;
        }
    }
    if worst > tol {
        return Err(Error::convergence("Chebyshev-filtered subspace iteration", worst));
    }
    x.truncate(count);
    let residuals = x.iter().zip(&ritz).map(|(v, &e)| residual(h, v, e, &mut scratch)).collect();
    ritz.truncate(count);
    Ok(Spectrum2D { values: ritz, vectors: x, residuals, norm_bound: upper, path: SolverPath::ChebyshevSubspace })
}

/// `v ← T_d((H - c)/e) v` by the three-term recurrence.
fn chebyshev_filter(h: &DiscreteHamiltonian2D, v: &mut Vec<Complex64>, c: f64, e: f64, degree: usize) {
    let dim = v.len();
    let mut hv = vec![Complex64::new(0.0, 0.0); dim];
    let mut prev = v.clone();
    h.apply(&prev, &mut hv);
    let mut cur: Vec<Complex64> = hv.iter().zip(&prev).map(|(a, b)| (a - c * b) / e).collect();
    for _ in 1..degree {
        h.apply(&cur, &mut hv);
        let next: Vec<Complex64> =
            hv.iter().zip(&cur).zip(&prev).map(|((a, b), p)| 2.0 * (a - c * b) / e - p).collect();
        prev = std::mem::replace(&mut cur, next);
        // Rescale to keep the growing low components finite.
        let norm = cur.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e100 {
            for (a, b) in cur.iter_mut().zip(prev.iter_mut()) {
                *a /= norm;
                *b /= norm;
            }
        }
    }
    *v = cur;
}

/// Rotates the orthonormal block `x` onto Ritz vectors; returns Ritz values.
fn rayleigh_ritz(h: &DiscreteHamiltonian2D, x: &mut [Vec<Complex64>]) -> Result<Vec<f64>> {
    let m = x.len();
    let hx: Vec<Vec<Complex64>> = x
        .par_iter()
        .map(|v| {
            let mut y = vec![Complex64::new(0.0, 0.0); v.len()];
            h.apply(v, &mut y);
            y
        })
        .collect();
    let mut proj = Mat::<c64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let dot: Complex64 = x[i].iter().zip(&hx[j]).map(|(a, b)| a.conj() * b).sum();
            proj[(i, j)] = dot;
            proj[(j, i)] = dot.conj();
        }
    }
    let (s, u) = hermitian_evd(&proj, true, "Rayleigh-Ritz eigenproblem")?;
    let u = u.expect("eigenvectors requested");
    let dim = x[0].len();
    let rotated: Vec<Vec<Complex64>> = (0..m)
        .map(|k| {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for (j, xj) in x.iter().enumerate() {
                let coef = u[(j, k)];
                for (vi, xi) in v.iter_mut().zip(xj) {
                    *vi += coef * xi;
                }
            }
            v
        })
        .collect();
    for (dst, src) in x.iter_mut().zip(rotated) {
        *dst = src;
    }
    Ok((0..m).map(|k| s[k]).collect())
}

/// Fraction of `|ψ|²` on sites at least `margin` away from the box boundary.
pub fn interior_weight(h: &DiscreteHamiltonian2D, v: &[Complex64], margin: f64) -> f64 {
    let half = 0.5 * h.l - margin;
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let inner: f64 = v
        .iter()
        .enumerate()
        .filter(|(p, _)| {
            let x = h.coordinates(*p);
            x[0].abs() <= half && x[1].abs() <= half
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    inner / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub j: usize,
    pub level: f64,
    pub count: usize,
    pub lower: f64,
    pub upper: f64,
    /// `max |E - (2j-1)B|` over the cluster.
    pub half_width: f64,
    /// `C λ max(1, √((j+1)B)) + ε_h` with the fitted or supplied `C`.
    pub predicted_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    #[serde(rename = "B")]
    pub b: f64,
    pub lambda: f64,
    #[serde(rename = "J")]
    pub bands: usize,
    pub epsilon_h: f64,
    /// Smallest `C` for which every checked eigenvalue fits; absent at `λ = 0`.
    pub fitted_c: Option<f64>,
    /// `C` used for the predicted intervals (fitted unless supplied).
    pub c_used: Option<f64>,
    pub clusters: Vec<Cluster>,
    /// Predicted intervals do not overlap, so the assignment to levels is unambiguous.
    pub intervals_disjoint: bool,
    pub checked: usize,
    /// Eigenvalues outside every predicted interval.
    pub violations: Vec<f64>,
}

/// `max(1, √((j+1)B))`, the `j`-dependence of the cluster radius.
pub fn cluster_scale(j: usize, b: f64) -> f64 {
    ((j as f64 + 1.0) * b).sqrt().max(1.0)
}

/// Assigns every eigenvalue below `2JB` to its nearest Landau level and
/// measures it against `[(2j-1)B - d_j - ε_h, (2j-1)B + d_j + ε_h]`,
/// `d_j = C λ max(1, √((j+1)B))`. Without `c`, `C` is fitted as the
/// smallest value that admits every eigenvalue.
pub fn check_spectral_location(
    eigs: &[f64],
    b: f64,
    lambda: f64,
    bands: usize,
    epsilon_h: f64,
    c: Option<f64>,
) -> Result<ClusterReport> {
    if bands == 0 || !(b > 0.0) {
        return Err(Error::invalid("need J >= 1 and B > 0"));
    }
    let ceiling = 2.0 * bands as f64 * b;
    let nearest = |e: f64| ((((e / b) + 1.0) / 2.0).round() as usize).clamp(1, bands);
    let checked: Vec<f64> = eigs.iter().copied().filter(|&e| e < ceiling).collect();
    let mut fitted_c = None;
    if lambda > 0.0 {
        let mut best: f64 = 0.0;
        for &e in &checked {
            let j = nearest(e);
            let excess = ((e - (2 * j - 1) as f64 * b).abs() - epsilon_h).max(0.0);
            best = best.max(excess / (lambda * cluster_scale(j, b)));
        }
        fitted_c = Some(best);
    }
    let c_used = c.or(fitted_c);
    let radius = |j: usize| c_used.unwrap_or(0.0) * lambda * cluster_scale(j, b) + epsilon_h;
    let clusters = (1..=bands)
        .map(|j| {
            let level = (2 * j - 1) as f64 * b;
            let members: Vec<f64> = checked.iter().copied().filter(|&e| nearest(e) == j).collect();
            Cluster {
                j,
                level,
                count: members.len(),
                lower: members.iter().copied().fold(f64::INFINITY, f64::min),
                upper: members.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                half_width: members.iter().map(|e| (e - level).abs()).fold(0.0, f64::max),
                predicted_half_width: radius(j),
            }
        })
        .collect();
    let intervals_disjoint = (1..bands).all(|j| radius(j) + radius(j + 1) < 2.0 * b) && radius(1) < b;
    let violations = checked
        .iter()
        .copied()
        .filter(|&e| {
            let j = nearest(e);
            (e - (2 * j - 1) as f64 * b).abs() > radius(j) * (1.0 + 1e-12)
        })
        .collect();
    Ok(ClusterReport {
        b,
        lambda,
        bands,
        epsilon_h,
        fitted_c,
        c_used,
        clusters,
        intervals_disjoint,
        checked: checked.len(),
        violations,
    })
}

/// Discretization allowance from a clean run: the largest distance of the
/// given eigenvalues below `2JB` from their nearest Landau level.
pub fn discretization_allowance(clean_eigs: &[f64], b: f64, bands: usize) -> f64 {
    let ceiling = 2.0 * bands as f64 * b;
    clean_eigs
        .iter()
        .filter(|&&e| e < ceiling)
        .map(|&e| {
            let j = ((((e / b) + 1.0) / 2.0).round() as usize).clamp(1, bands);
            (e - (2 * j - 1) as f64 * b).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub trials: usize,
    pub sites: usize,
    pub alpha: f64,
    pub eta: f64,
    /// Fraction of trials with every `|ω_γ| <= α`.
    pub empirical: f64,
    /// `1 - N_sites e^{-α/η}`.
    pub bound: f64,
    /// Binomial standard error of `empirical`.
    pub sigma: f64,
    /// `empirical >= bound - 3σ`.
    pub consistent: bool,
}

/// Monte Carlo estimate of `P(max_γ |ω_γ| <= α)` over the lattice of `Q_L`;
/// trial `t` uses stream `t` of `seed`.
pub fn coupling_bound_probability(l: f64, eta: f64, alpha: f64, trials: usize, seed: u64) -> Result<ProbabilityEstimate> {
    check_eta(eta)?;
    check_box(l)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let radius = lattice_radius(l);
    let sites = ((2 * radius + 1) * (2 * radius + 1)) as usize;
    let hits = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = realization_rng(seed, t);
            (0..sites).all(|_| inverse_cdf(rng.gen::<f64>(), eta).abs() <= alpha)
        })
        .count();
    let empirical = hits as f64 / trials as f64;
    let bound = 1.0 - sites as f64 * (-alpha / eta).exp();
    let p = bound.clamp(0.0, 1.0);
    let sigma = (p * (1.0 - p) / trials as f64).sqrt().max((empirical * (1.0 - empirical) / trials as f64).sqrt());
    Ok(ProbabilityEstimate { trials, sites, alpha, eta, empirical, bound, sigma, consistent: empirical >= bound - 3.0 * sigma })
}

/// Provenance of one disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationManifest {
    #[serde(rename = "B")]
    pub b: f64,
    pub lambda: f64,
    pub eta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
    pub seed: u64,
    #[serde(default)]
    pub realization: u64,
    #[serde(default)]
    pub profile: ProfileSpec,
}

impl RealizationManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        crate::config::require_object(text)?;
        let m: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config { line: Some(e.line()), message: e.to_string() })?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        grid_size(self.l, self.h, self.b)?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be >= 0"));
        }
        self.profile.resolve()?;
        Ok(())
    }

    /// Regenerates the couplings and the discretized operator.
    pub fn build(&self) -> Result<(CouplingField, DiscreteHamiltonian2D)> {
        self.validate()?;
        let profile = self.profile.resolve()?;
        let couplings = sample_couplings_stream(self.l, self.eta, self.seed, self.realization)?;
        let ham = discretize(
            self.l,
            self.h,
            self.b,
            &Perturbation::Random { lambda: self.lambda, profile: &profile, couplings: &couplings },
        )?;
        Ok((couplings, ham))
    }
}

/// CSV rows `index,eigenvalue`.
pub fn write_spectrum_csv<W: Write>(values: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "index,eigenvalue")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{}", fmt_f64(*v))?;
    }
    Ok(())
}
