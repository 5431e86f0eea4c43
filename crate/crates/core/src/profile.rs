//! The 1-periodic profile `a(t) = α_0 + Σ_{l≥1} 2 Re(α_l e^{i2πlt})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid used to estimate `sup |a|` before golden-section refinement.
const SUP_GRID: usize = 4096;

/// Sampled input is projected onto at most this many harmonics.
pub const MAX_PROJECTED_HARMONICS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub l: u32,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicProfile {
    alpha0: f64,
    harmonics: Vec<Harmonic>,
}

impl PeriodicProfile {
    /// Builds the profile and rescales it so that `sup_t |a(t)| = 1`.
    pub fn new(alpha0: f64, harmonics: impl IntoIterator<Item = (u32, Complex64)>) -> Result<Self> {
        Self::unnormalized(alpha0, harmonics)?.normalized()
    }

    /// Builds the profile exactly as given, without sup-normalization.
    pub fn unnormalized(alpha0: f64, harmonics: impl IntoIterator<Item = (u32, Complex64)>) -> Result<Self> {
        if !alpha0.is_finite() {
            return Err(Error::invalid("constant Fourier term must be finite"));
        }
        let mut merged: Vec<Harmonic> = Vec::new();
        for (l, amplitude) in harmonics {
            if l == 0 {
                return Err(Error::invalid("harmonic index l must be >= 1; use alpha0 for the mean"));
            }
            if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
                return Err(Error::invalid(format!("harmonic {l} has a non-finite amplitude")));
            }
            match merged.iter_mut().find(|h| h.l == l) {
                Some(h) => h.amplitude += amplitude,
                None => merged.push(Harmonic { l, amplitude }),
            }
        }
        merged.retain(|h| h.amplitude != Complex64::new(0.0, 0.0));
        merged.sort_by_key(|h| h.l);
        Ok(Self { alpha0, harmonics: merged })
    }

    /// `a(t) = cos(2πt)`, i.e. `α_1 = 1/2`.
    pub fn cosine() -> Self {
        Self { alpha0: 0.0, harmonics: vec![Harmonic { l: 1, amplitude: Complex64::new(0.5, 0.0) }] }
    }

    /// `a ≡ sign(c)` after normalization.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, [])
    }

    /// Projects samples `a(i/n)`, `i = 0..n`, onto the constant term and at
    /// most [`MAX_PROJECTED_HARMONICS`] harmonics by the trapezoid rule, then normalizes.
    pub fn from_samples(samples: &[f64], max_harmonics: usize) -> Result<Self> {
        let n = samples.len();
        if n < 3 {
            return Err(Error::invalid("need at least 3 samples per period"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        let count = max_harmonics.min(MAX_PROJECTED_HARMONICS).min((n - 1) / 2);
        let alpha0 = samples.iter().sum::<f64>() / n as f64;
        let harmonics = (1..=count as u32).map(|l| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(i, &v)| Complex64::from_polar(v, -2.0 * PI * l as f64 * i as f64 / n as f64))
                .sum();
            (l, sum / n as f64)
        });
        // Drop coefficients at round-off level so a pure cosine stays single-harmonic.
        let scale = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let harmonics: Vec<_> = harmonics.filter(|(_, a)| a.norm() > 1e-13 * scale.max(f64::MIN_POSITIVE)).collect();
        let alpha0 = if alpha0.abs() > 1e-13 * scale { alpha0 } else { 0.0 };
        Self::new(alpha0, harmonics)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Nonzero harmonics, sorted by `l`.
    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn max_harmonic(&self) -> u32 {
        self.harmonics.last().map_or(0, |h| h.l)
    }

    /// At least one `α_l ≠ 0` with `l ≥ 1`, i.e. `a'` does not vanish identically.
    pub fn is_nontrivial(&self) -> bool {
        !self.harmonics.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.alpha0;
        for h in &self.harmonics {
            let phase = 2.0 * PI * h.l as f64 * t;
            v += 2.0 * (h.amplitude.re * phase.cos() - h.amplitude.im * phase.sin());
        }
        v
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for h in &self.harmonics {
            let w = 2.0 * PI * h.l as f64;
            let phase = w * t;
            v -= 2.0 * w * (h.amplitude.re * phase.sin() + h.amplitude.im * phase.cos());
        }
        v
    }

    /// Estimate of `sup_t |a(t)|`: dense grid, then golden-section refinement
    /// around the best grid point.
    pub fn sup_norm(&self) -> f64 {
        let f = |t: f64| self.eval(t).abs();
        let step = 1.0 / SUP_GRID as f64;
        let (best_i, best) = (0..SUP_GRID)
            .map(|i| (i, f(i as f64 * step)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let center = best_i as f64 * step;
        let (mut lo, mut hi) = (center - step, center + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
        }
        best.max(f1).max(f2)
    }

    /// Rescales so that `sup |a| = 1`.
    pub fn normalized(self) -> Result<Self> {
        let sup = self.sup_norm();
        if !(sup > 0.0) {
            return Err(Error::invalid("profile vanishes identically and cannot be normalized"));
        }
        Ok(self.scaled(1.0 / sup))
    }

    /// Multiplies every Fourier coefficient by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha0: self.alpha0 * c,
            harmonics: self.harmonics.iter().map(|h| Harmonic { l: h.l, amplitude: h.amplitude * c }).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }
}

/// Input form of a profile: the `"cosine"` shorthand or a Fourier list
/// `[[l, re, im], ...]` with an optional constant term. Fourier input is
/// sup-normalized unless `"normalize": false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "a profile: \"cosine\" or {\"fourier\": [[l, re, im], ...], \"alpha0\": c}")]
pub enum ProfileSpec {
    Named(NamedProfile),
    Fourier(FourierSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedProfile {
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSpec {
    pub fourier: Vec<(u32, f64, f64)>,
    #[serde(default)]
    pub alpha0: f64,
    #[serde(default = "default_normalize")]
    pub normalize: bool,
}

fn default_normalize() -> bool {
    true
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Named(NamedProfile::Cosine)
    }
}

impl ProfileSpec {
    pub fn cosine() -> Self {
        Self::default()
    }

    pub fn resolve(&self) -> Result<PeriodicProfile> {
        match self {
            ProfileSpec::Named(NamedProfile::Cosine) => Ok(PeriodicProfile::cosine()),
            ProfileSpec::Fourier(f) => {
                let terms = f.fourier.iter().map(|&(l, re, im)| (l, Complex64::new(re, im)));
                if f.normalize {
                    PeriodicProfile::new(f.alpha0, terms)
                } else {
                    PeriodicProfile::unnormalized(f.alpha0, terms)
                }
            }
        }
    }

    /// Parses and resolves; errors carry the JSON line number when parsing fails.
    pub fn from_json(text: &str) -> Result<(Self, PeriodicProfile)> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::Config { line: Some(e.line()), message: e.to_string() })?;
        let profile = spec.resolve()?;
        Ok((spec, profile))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_is_already_normalized() {
        let p = PeriodicProfile::cosine();
        assert!((p.sup_norm() - 1.0).abs() < 1e-15);
        assert!((p.eval(0.25)).abs() < 1e-15);
        assert!((p.eval(0.5) + 1.0).abs() < 1e-15);
        assert_eq!(p.clone().normalized().unwrap(), p);
    }

    #[test]
    fn normalization_hits_unit_sup() {
        let p = PeriodicProfile::new(0.3, [(1, Complex64::new(0.2, -0.7)), (3, Complex64::new(0.0, 0.4))]).unwrap();
        // Independent check on a much finer grid.
        let fine = (0..200_000).map(|i| p.eval(i as f64 / 200_000.0).abs()).fold(0.0, f64::max);
        assert!((fine - 1.0).abs() < 1e-9, "{fine}");
        assert!((p.sup_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_profile_has_no_harmonics() {
        let p = PeriodicProfile::constant(-2.5).unwrap();
        assert!(!p.is_nontrivial());
        assert!((p.eval(0.37) + 1.0).abs() < 1e-15);
        assert!(PeriodicProfile::constant(0.0).is_err());
    }

    #[test]
    fn duplicate_and_zero_harmonics_are_merged() {
        let p = PeriodicProfile::unnormalized(
            0.0,
            [(2, Complex64::new(0.1, 0.0)), (1, Complex64::new(0.0, 0.0)), (2, Complex64::new(0.2, 0.0))],
        )
        .unwrap();
        assert_eq!(p.harmonics().len(), 1);
        assert_eq!(p.harmonics()[0].l, 2);
        assert!((p.harmonics()[0].amplitude.re - 0.3).abs() < 1e-15);
        assert!(PeriodicProfile::unnormalized(0.0, [(0, Complex64::new(1.0, 0.0))]).is_err());
    }

    #[test]
    fn sampled_cosine_projects_to_single_harmonic() {
        let samples: Vec<f64> = (0..64).map(|i| 3.0 * (2.0 * PI * i as f64 / 64.0).cos()).collect();
        let p = PeriodicProfile::from_samples(&samples, 64).unwrap();
        assert_eq!(p.harmonics().len(), 1);
        assert!((p.harmonics()[0].amplitude - Complex64::new(0.5, 0.0)).norm() < 1e-13);
        assert_eq!(p.alpha0(), 0.0);
    }

    #[test]
    fn profile_spec_forms() {
        let (spec, p) = ProfileSpec::from_json("\"cosine\"").unwrap();
        assert_eq!(spec, ProfileSpec::cosine());
        assert_eq!(p, PeriodicProfile::cosine());
        let (_, p) = ProfileSpec::from_json(r#"{"fourier": [[1, 2.0, 0.0]]}"#).unwrap();
        assert!((p.harmonics()[0].amplitude.re - 0.5).abs() < 1e-15);
        let (_, p) = ProfileSpec::from_json(r#"{"fourier": [[1, 2.0, 0.0]], "normalize": false}"#).unwrap();
        assert_eq!(p.harmonics()[0].amplitude.re, 2.0);
        let (_, p) = ProfileSpec::from_json(r#"{"fourier": [], "alpha0": 3}"#).unwrap();
        assert!(!p.is_nontrivial() && p.alpha0() == 1.0);
        assert!(ProfileSpec::from_json(r#"{"fourier": [[0, 1, 0]]}"#).is_err());
        assert!(ProfileSpec::from_json(r#"{"fourier": []}"#).is_err());
        assert!(ProfileSpec::from_json("\"sine\"").is_err());
        let err = ProfileSpec::from_json("{\n\"fourier\": [[1, 1]]\n}").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(_), .. }), "{err:?}");
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = PeriodicProfile::new(0.1, [(1, Complex64::new(0.3, 0.2)), (2, Complex64::new(-0.1, 0.05))]).unwrap();
        for &t in &[0.0, 0.13, 0.5, 0.91] {
            let h = 1e-6;
            let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
            assert!((p.derivative(t) - fd).abs() < 1e-7);
        }
    }
}
