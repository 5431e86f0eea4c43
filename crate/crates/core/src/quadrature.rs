//! Gauss-Hermite quadrature for integrals of the form `∫ e^{-t²} f(t) dt`.
//!
//! Nodes are found by Newton iteration on the orthonormal Hermite recurrence,
//! which keeps full relative accuracy in the small outer weights (the
//! Golub-Welsch eigenvector route loses it).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::eigen::tridiagonal_eigenvalues;
use crate::error::{Error, Result};

/// Largest rule we build; beyond this the orthonormal polynomials at the
/// outermost node overflow `f64`.
pub const MAX_NODES: usize = 640;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureKind {
    /// Weight `e^{-t²}` on the whole real line.
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: QuadratureKind,
}

impl QuadratureRule {
    /// Builds the `n`-point Gauss-Hermite rule. Exact for polynomials of degree `2n - 1`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(Error::invalid(format!(
                "Gauss-Hermite node count must lie in 1..={MAX_NODES}, got {n}"
            )));
        }
        // Jacobi-matrix eigenvalues give every node to near machine
        // precision; Newton on the recurrence then polishes them.
        let off: Vec<f64> = (1..n).map(|i| (i as f64 / 2.0).sqrt()).collect();
        let guesses = tridiagonal_eigenvalues(&vec![0.0; n], &off)?;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let guess = guesses[n - 1 - i].abs();
            let mut z = guess;
            for _ in 0..8 {
                let (p_n, p_nm1, _) = orthonormal_pair(n, z, pim4);
                let dz = p_n / ((2.0 * nf).sqrt() * p_nm1);
                z -= dz;
                if dz.abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
                    break;
                }
            }
            if !((z - guess).abs() <= 1e-8 * guess.max(1.0)) {
                return Err(Error::convergence(format!("Gauss-Hermite node {i} of {n}"), (z - guess).abs()));
            }
            // w = 2 / (2n p_{n-1}²), assembled in logs: the outer weights
            // underflow long before p_{n-1} itself would overflow.
            let (_, p_nm1, log_scale) = orthonormal_pair(n, z, pim4);
            let w = (-(nf.ln()) - 2.0 * (p_nm1.abs().ln() + log_scale)).exp();
            nodes[n - 1 - i] = z;
            nodes[i] = -z;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights, kind: QuadratureKind::GaussHermite })
    }

    /// Shared copy of the `n`-point rule, built once per process.
    pub fn gauss_hermite_shared(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::gauss_hermite(n)?);
        cache.lock().unwrap_or_else(|e| e.into_inner()).insert(n, Arc::clone(&rule));
        Ok(rule)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(t_i)`, approximating `∫ e^{-t²} f(t) dt`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Orthonormal Hermite polynomials `(p_n(z), p_{n-1}(z))` normalized so that
/// `∫ e^{-z²} p_m p_n = δ_mn`, returned as `(p̃_n, p̃_{n-1}, s)` with
/// `p = p̃ e^s`. Rescaling keeps the recurrence finite at the outer nodes of
/// large rules, where `p_n` grows like `e^{z²/2}`.
fn orthonormal_pair(n: usize, z: f64, p0: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut p1 = p0;
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            log_scale += BIG.ln();
        }
    }
    (p1, p2, log_scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_moment(k: u32) -> f64 {
        // ∫ t^k e^{-t²} dt = Γ((k+1)/2) for even k, 0 for odd k.
        if k % 2 == 1 {
            return 0.0;
        }
        let mut v = PI.sqrt();
        let mut m = 1;
        while m < k {
            v *= m as f64 / 2.0;
            m += 2;
        }
        v
    }

    #[test]
    fn nodes_sorted_symmetric_and_weights_positive() {
        for n in [1, 2, 5, 16, 33, 128, 400] {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]), "n = {n}");
            // Outer weights of large rules fall below the f64 range.
            assert!(rule.weights().iter().all(|&w| if n <= 128 { w > 0.0 } else { w >= 0.0 }));
            for i in 0..n {
                assert!((rule.nodes()[i] + rule.nodes()[n - 1 - i]).abs() < 1e-12);
            }
            let total: f64 = rule.weights().iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-13 * PI.sqrt(), "n = {n}: {total}");
        }
    }

    #[test]
    fn monomials_integrated_exactly_up_to_degree_2n_minus_1() {
        for n in [3, 8, 20] {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            for k in 0..(2 * n as u32) {
                let got = rule.integrate(|t| t.powi(k as i32));
                let want = gaussian_moment(k);
                // Odd moments cancel between terms of size ∫|t|^k e^{-t²}.
                let scale = gaussian_moment(k + k % 2).max(1.0);
                assert!((got - want).abs() < 1e-12 * scale, "n={n} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn cosine_transform_matches_closed_form() {
        let rule = QuadratureRule::gauss_hermite(40).unwrap();
        let got = rule.integrate(f64::cos);
        assert!((got - PI.sqrt() * (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(QuadratureRule::gauss_hermite(0).is_err());
        assert!(QuadratureRule::gauss_hermite(MAX_NODES + 1).is_err());
        assert!(QuadratureRule::gauss_hermite(MAX_NODES).is_ok());
    }
}
