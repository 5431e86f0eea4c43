//! Hermite and Laguerre families, the oscillator eigenfunctions of
//! `-d²/dt² + B²t²`, and the oscillator integral
//! `I_j(s; B) = ∫ sin(st) t φ_j(t; B)² dt` in closed and quadrature form.
//!
//! Hermite polynomials follow the physicists' convention
//! (`H_1(t) = 2t`). Everything downstream only sees `H_q²`, so the
//! `(-1)^q` ambiguity between conventions never surfaces.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, MAX_NODES};

/// Threshold below which `L'_q(ξ)` is summed from explicit coefficients
/// instead of the `(q L_q - q L_{q-1}) / ξ` form.
const LAGUERRE_SMALL_XI: f64 = 1e-2;

/// Search interval `(0, ROOT_SEARCH_MAX]` for positive roots of `P_j`.
pub const ROOT_SEARCH_MAX: f64 = 20.0;

/// Physicists' Hermite polynomial via `H_{q+1} = 2t H_q - 2q H_{q-1}`.
pub fn hermite_poly(q: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if q == 0 {
        return prev;
    }
    let mut cur = 2.0 * t;
    for k in 1..q {
        let next = 2.0 * t * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Oscillator eigenfunction `φ_j(t; B)`, `j ≥ 1`, normalized in `L²(R)`.
///
/// Evaluated with the normalized recurrence on the functions themselves, so
/// no factorials appear and `j` in the hundreds is fine.
pub fn hermite_function(j: usize, t: f64, b: f64) -> Result<f64> {
    check_band(j)?;
    check_field(b)?;
    let u = b.sqrt() * t;
    let seed = b.powf(0.25) * PI.powf(-0.25) * (-0.5 * u * u).exp();
    Ok(normalized_hermite_value(j - 1, u, seed))
}

/// Orthonormal Hermite polynomials `ĥ_0..=ĥ_max` at `u`, multiplied by
/// `seed / π^{-1/4}`. With `seed = π^{-1/4}` these satisfy
/// `∫ e^{-u²} ĥ_m ĥ_n du = δ_mn`.
pub(crate) fn normalized_hermite_values(max: usize, u: f64, seed: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(seed);
    if max == 0 {
        return;
    }
    out.push(std::f64::consts::SQRT_2 * u * seed);
    for q in 1..max {
        let qf = q as f64;
        let next = (2.0 / (qf + 1.0)).sqrt() * u * out[q] - (qf / (qf + 1.0)).sqrt() * out[q - 1];
        out.push(next);
    }
}

fn normalized_hermite_value(q: usize, u: f64, seed: f64) -> f64 {
    let mut prev = seed;
    if q == 0 {
        return prev;
    }
    let mut cur = std::f64::consts::SQRT_2 * u * seed;
    for k in 1..q {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn normalized_hermite_complex(q: usize, u: Complex64) -> Complex64 {
    let mut prev = Complex64::new(PI.powf(-0.25), 0.0);
    if q == 0 {
        return prev;
    }
    let mut cur = prev * u * std::f64::consts::SQRT_2;
    for k in 1..q {
        let kf = k as f64;
        let next = cur * u * (2.0 / (kf + 1.0)).sqrt() - prev * (kf / (kf + 1.0)).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Laguerre polynomial `L_q(ξ)` via `(q+1) L_{q+1} = (2q+1-ξ) L_q - q L_{q-1}`.
pub fn laguerre(q: usize, xi: f64) -> f64 {
    laguerre_pair(q, xi).0
}

/// `(L_q(ξ), L_{q-1}(ξ))`, with `L_{-1} := 0`.
fn laguerre_pair(q: usize, xi: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..q {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - xi) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Derivative `L'_q(ξ)`.
pub fn laguerre_prime(q: usize, xi: f64) -> f64 {
    if q == 0 {
        return 0.0;
    }
    if xi.abs() < LAGUERRE_SMALL_XI {
        // L_q(ξ) = Σ_k C(q,k) (-ξ)^k / k!, differentiated term by term.
        let mut coeff = 1.0; // C(q,k) (-1)^k / k! at k = 0
        let mut sum = 0.0;
        let mut power = 1.0; // ξ^{k-1}
        for k in 1..=q {
            let kf = k as f64;
            coeff *= -((q - k + 1) as f64) / (kf * kf);
            sum += coeff * kf * power;
            power *= xi;
        }
        return sum;
    }
    let (lq, lqm1) = laguerre_pair(q, xi);
    q as f64 * (lq - lqm1) / xi
}

/// Splitting polynomial `P_j(s) = (s/2)(L_{j-1}(s²/2) - 2 L'_{j-1}(s²/2))`,
/// odd of degree `2j - 1`, with `I_j(s; 1) = P_j(s) e^{-s²/4}`.
pub fn splitting_polynomial(j: usize, s: f64) -> f64 {
    assert!(j >= 1, "band index starts at 1");
    let xi = 0.5 * s * s;
    0.5 * s * (laguerre(j - 1, xi) - 2.0 * laguerre_prime(j - 1, xi))
}

/// Positive roots of `P_j` in `(0, ROOT_SEARCH_MAX]`, ascending, located by
/// sign-change bracketing and bisected down to adjacent floats (well past
/// the `1e-12` needed), so that fields derived from them test as roots.
pub fn splitting_polynomial_roots(j: usize) -> Vec<f64> {
    assert!(j >= 1, "band index starts at 1");
    if j == 1 {
        return Vec::new();
    }
    // Root spacing of P_j shrinks like 1/sqrt(j); 4000 cells per unit covers j in the hundreds.
    let cells = (ROOT_SEARCH_MAX * 4000.0) as usize;
    let step = ROOT_SEARCH_MAX / cells as f64;
    let mut roots = Vec::new();
    let mut lo = step * 1e-3;
    let mut f_lo = splitting_polynomial(j, lo);
    for i in 1..=cells {
        let hi = i as f64 * step;
        let f_hi = splitting_polynomial(j, hi);
        if f_hi == 0.0 {
            roots.push(hi);
        } else if f_lo != 0.0 && f_lo.signum() != f_hi.signum() {
            roots.push(bisect(|s| splitting_polynomial(j, s), lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I_j(s; B) = B^{-1/2} P_j(s B^{-1/2}) e^{-s²/(4B)}`.
pub fn oscillator_integral_closed(j: usize, s: f64, b: f64) -> Result<f64> {
    check_band(j)?;
    check_field(b)?;
    let scale = b.sqrt();
    let sp = s / scale;
    Ok(splitting_polynomial(j, sp) * (-0.25 * sp * sp).exp() / scale)
}

/// `I_j(s; B)` evaluated from its defining integral by Gauss-Hermite quadrature.
///
/// After `u = √B t` the integrand is `sin(s' u) u ĥ_{j-1}(u)² e^{-u²}`. The
/// real-axis sum cancels catastrophically once `e^{-s'²/4}` is small, so the
/// contour is moved to `u = v + i s'/2`, which peels off that factor exactly
/// and leaves a polynomial against `e^{-v²}`. The node count starts at
/// `4(j + 2)` and is doubled until successive values agree to `1e-10`.
pub fn oscillator_integral_quadrature(j: usize, s: f64, b: f64) -> Result<f64> {
    check_band(j)?;
    check_field(b)?;
    let scale = b.sqrt();
    let sp = s / scale;
    let shift = Complex64::new(0.0, 0.5 * sp);
    let evaluate = |nodes: usize| -> Result<f64> {
        let rule = QuadratureRule::gauss_hermite_shared(nodes)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (&v, &w) in rule.nodes().iter().zip(rule.weights()) {
            let u = Complex64::new(v, 0.0) + shift;
            let h = normalized_hermite_complex(j - 1, u);
            acc += u * h * h * w;
        }
        Ok(acc.im * (-0.25 * sp * sp).exp() / scale)
    };
    let mut nodes = 4 * (j + 2);
    let mut last = evaluate(nodes)?;
    loop {
        let next_nodes = 2 * nodes;
        if next_nodes > MAX_NODES {
            return Err(Error::convergence(format!("oscillator quadrature for j = {j}"), f64::NAN));
        }
        let next = evaluate(next_nodes)?;
        if (next - last).abs() < 1e-10 {
            return Ok(next);
        }
        nodes = next_nodes;
        last = next;
    }
}

/// The oscillator eigenbasis of `h_0 = -d²/dt² + B²t²` up to a fixed index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorBasis {
    b: f64,
    max_index: usize,
}

impl OscillatorBasis {
    pub fn new(b: f64, max_index: usize) -> Result<Self> {
        check_field(b)?;
        if max_index < 1 {
            return Err(Error::invalid("oscillator basis needs max_index >= 1"));
        }
        Ok(Self { b, max_index })
    }

    pub fn field(&self) -> f64 {
        self.b
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    /// Eigenvalue `(2j - 1) B` of `φ_j`.
    pub fn level(&self, j: usize) -> f64 {
        (2 * j - 1) as f64 * self.b
    }

    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        if j > self.max_index {
            return Err(Error::invalid(format!(
                "band index {j} exceeds basis size {}",
                self.max_index
            )));
        }
        hermite_function(j, t, self.b)
    }

    /// All of `φ_1(t)..=φ_max(t)` in one recurrence pass.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        let u = self.b.sqrt() * t;
        let seed = self.b.powf(0.25) * PI.powf(-0.25) * (-0.5 * u * u).exp();
        let mut out = Vec::with_capacity(self.max_index);
        normalized_hermite_values(self.max_index - 1, u, seed, &mut out);
        out
    }
}

pub(crate) fn check_band(j: usize) -> Result<()> {
    if j == 0 {
        return Err(Error::invalid("band index j must be >= 1"));
    }
    Ok(())
}

pub(crate) fn check_field(b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::invalid(format!("field strength B must be positive and finite, got {b}")));
    }
    Ok(())
}
