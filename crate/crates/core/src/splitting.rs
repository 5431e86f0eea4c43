//! Splitting of Landau levels under a periodic perturbation: the
//! first-order band function `F_j(k)`, its sign witnesses, the admissible
//! field sets and a numerical estimate of the splitting amplitude.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{band_table, oscillator_moment, spectrum_bands, FiberConfig, DEFAULT_K_SAMPLES};
use crate::profile::PeriodicProfile;
use crate::specfun::{check_band, check_field, oscillator_integral_closed, splitting_polynomial, splitting_polynomial_roots};

/// Threshold for every "is nonzero" decision.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Samples per period used to locate the extrema of `F_j`.
pub const EXTREMUM_GRID: usize = 1024;

/// Relative agreement required for two field values to count as equal.
const FIELD_MATCH: f64 = 1e-9;

/// Largest coupling accepted by [`estimate_splitting`].
pub const MAX_SPLITTING_LAMBDA: f64 = 0.1;

/// `F_j(k) = -2 Σ_l |α_l| I_j(2πl; B) sin(2πkl/B + arg α_l)`, the
/// first-order slope of `E_j(k; λ)` divided by `2B`.
pub fn f_function(j: usize, k: f64, b: f64, profile: &PeriodicProfile) -> Result<f64> {
    check_band(j)?;
    check_field(b)?;
    let mut sum = 0.0;
    for h in profile.harmonics() {
        let l = h.l as f64;
        let i_j = oscillator_integral_closed(j, 2.0 * PI * l, b)?;
        sum += h.amplitude.norm() * i_j * (2.0 * PI * k * l / b + h.amplitude.arg()).sin();
    }
    Ok(-2.0 * sum)
}

/// `∫ a(t + k/B) t φ_j(t)² dt` by direct quadrature; independent of the
/// Fourier series route in [`f_function`].
pub fn f_function_quadrature(j: usize, k: f64, b: f64, profile: &PeriodicProfile) -> Result<f64> {
    let shift = k / b;
    oscillator_moment(j, b, profile.max_harmonic(), |t| profile.eval(t + shift))
}

fn f_extrema(j: usize, b: f64, profile: &PeriodicProfile) -> Result<(f64, f64, f64, f64)> {
    let mut k_min = 0.0;
    let mut k_max = 0.0;
    let mut f_min = f64::INFINITY;
    let mut f_max = f64::NEG_INFINITY;
    for i in 0..EXTREMUM_GRID {
        let k = i as f64 * b / EXTREMUM_GRID as f64;
        let f = f_function(j, k, b, profile)?;
        if f < f_min {
            f_min = f;
            k_min = k;
        }
        if f > f_max {
            f_max = f;
            k_max = k;
        }
    }
    Ok((k_min, f_min, k_max, f_max))
}

/// Grid argmin and argmax `(k_-, k_+)` of `F_j` over `[0, B)`, or `None`
/// when `|F_j| <= 1e-12` everywhere on the grid.
pub fn find_k_pm(j: usize, b: f64, profile: &PeriodicProfile) -> Result<Option<(f64, f64)>> {
    let (k_min, f_min, k_max, f_max) = f_extrema(j, b, profile)?;
    if f_min.abs().max(f_max.abs()) <= ZERO_TOLERANCE {
        return Ok(None);
    }
    Ok(Some((k_min, k_max)))
}

/// Harmonics `l` with `α_l ≠ 0` and `|P_j(2πl/√B)| > 1e-12`.
pub fn witnesses(j: usize, b: f64, profile: &PeriodicProfile) -> Result<Vec<u32>> {
    check_band(j)?;
    check_field(b)?;
    Ok(profile
        .harmonics()
        .iter()
        .filter(|h| splitting_polynomial(j, 2.0 * PI * h.l as f64 / b.sqrt()).abs() > ZERO_TOLERANCE)
        .map(|h| h.l)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAdmissibility {
    pub j: usize,
    pub admissible: bool,
    pub witnesses: Vec<u32>,
    pub k_minus: Option<f64>,
    pub k_plus: Option<f64>,
}

/// Decides `B ∈ M_j`. When admissible, `k_±` are the extrema of `F_j`,
/// which is then a nonzero trigonometric polynomial even if its values fall
/// below the zero tolerance.
pub fn is_admissible(j: usize, b: f64, profile: &PeriodicProfile) -> Result<BandAdmissibility> {
    if !profile.is_nontrivial() {
        return Err(Error::invalid("profile has no nonzero harmonic; splitting is undefined"));
    }
    let witnesses = witnesses(j, b, profile)?;
    let admissible = !witnesses.is_empty();
    let (k_minus, k_plus) = if admissible {
        let (k_min, _, k_max, _) = f_extrema(j, b, profile)?;
        (Some(k_min), Some(k_max))
    } else {
        (None, None)
    };
    Ok(BandAdmissibility { j, admissible, witnesses, k_minus, k_plus })
}

/// Fields in `(0, B_max]` outside `M_J`: those at which some `j <= J`
/// loses every nonzero harmonic to a root of `P_j`.
pub fn excluded_fields(bands: usize, profile: &PeriodicProfile, b_max: f64) -> Result<Vec<f64>> {
    check_field(b_max)?;
    if bands == 0 {
        return Err(Error::invalid("need at least one band"));
    }
    let Some(first) = profile.harmonics().first() else {
        return Err(Error::invalid("profile has no nonzero harmonic; every field is excluded"));
    };
    let mut out: Vec<f64> = Vec::new();
    for j in 2..=bands {
        let roots = splitting_polynomial_roots(j);
        let is_root = |s: f64| roots.iter().any(|r| (s - r).abs() <= FIELD_MATCH * r);
        for &root in &roots {
            // The lowest harmonic must sit on a root; the others are then checked.
            let b = (2.0 * PI * first.l as f64 / root).powi(2);
            if b > b_max {
                continue;
            }
            if profile.harmonics().iter().all(|h| is_root(2.0 * PI * h.l as f64 / b.sqrt())) {
                out.push(b);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= FIELD_MATCH * *b);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "J")]
    pub bands: usize,
    pub records: Vec<BandAdmissibility>,
    /// Upper end of the range searched for excluded fields.
    #[serde(rename = "B_max")]
    pub b_max: f64,
    pub excluded_fields: Vec<f64>,
}

impl AdmissibilityReport {
    /// `B ∈ M_J`.
    pub fn all_admissible(&self) -> bool {
        self.records.iter().all(|r| r.admissible)
    }
}

pub fn admissibility_report(bands: usize, b: f64, profile: &PeriodicProfile, b_max: f64) -> Result<AdmissibilityReport> {
    let records = (1..=bands).map(|j| is_admissible(j, b, profile)).collect::<Result<Vec<_>>>()?;
    let excluded_fields = excluded_fields(bands, profile, b_max)?;
    Ok(AdmissibilityReport { b, bands, records, b_max, excluded_fields })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingEstimate {
    pub j: usize,
    #[serde(rename = "B")]
    pub b: f64,
    pub k_minus: f64,
    pub k_plus: f64,
    pub lambda_grid: Vec<f64>,
    /// `E_j(k_+; λ) - E_j(k_-; λ)` per grid value.
    pub widths: Vec<f64>,
    /// First-order prediction `2B (max F_j - min F_j)`.
    pub kappa_first_order: f64,
    pub kappa_hat: f64,
    pub lambda_star_hat: Option<f64>,
    /// Band `j` at the smallest positive grid coupling.
    pub band_lower: f64,
    pub band_upper: f64,
    /// `[(2j-1)B - κ̂λ/2, (2j-1)B + κ̂λ/2] ⊂ [band_lower, band_upper]`.
    pub interval_contained: bool,
}

/// Estimates `κ_j` by a least-squares fit through the origin of the
/// widths at the three smallest positive couplings, and `λ_j*` as the end
/// of the initial run of grid points whose `width/λ` stays within 10% of it.
pub fn estimate_splitting(
    j: usize,
    b: f64,
    profile: &PeriodicProfile,
    lambda_grid: &[f64],
    basis_size: usize,
) -> Result<SplittingEstimate> {
    check_band(j)?;
    check_field(b)?;
    if lambda_grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("lambda grid must be strictly increasing"));
    }
    if lambda_grid.iter().any(|&l| !(0.0..=MAX_SPLITTING_LAMBDA).contains(&l)) {
        return Err(Error::invalid(format!("lambda grid must lie in [0, {MAX_SPLITTING_LAMBDA}]")));
    }
    let positive: Vec<f64> = lambda_grid.iter().copied().filter(|&l| l > 0.0).collect();
    if positive.is_empty() {
        return Err(Error::invalid("lambda grid needs a positive value"));
    }
    let (k_minus, k_plus) = find_k_pm(j, b, profile)?.ok_or(Error::NotAdmissible { j, b })?;
    let (_, f_min, _, f_max) = f_extrema(j, b, profile)?;

    let cfg = FiberConfig::new(b, 0.0, 0.0, profile.clone(), basis_size)?;
    let widths = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let table = band_table(j, lambda, &[k_minus, k_plus], &cfg)?;
            let row = table.band(j);
            Ok(row[1] - row[0])
        })
        .collect::<Result<Vec<f64>>>()?;

    let fit: Vec<(f64, f64)> =
        lambda_grid.iter().zip(&widths).filter(|(l, _)| **l > 0.0).take(3).map(|(l, w)| (*l, *w)).collect();
    let kappa_hat = (fit.iter().map(|(l, w)| l * w).sum::<f64>() / fit.iter().map(|(l, _)| l * l).sum::<f64>()).max(0.0);

    let mut lambda_star_hat = None;
    for (&l, &w) in lambda_grid.iter().zip(&widths) {
        if l == 0.0 {
            continue;
        }
        if kappa_hat > 0.0 && (w / l - kappa_hat).abs() <= 0.1 * kappa_hat {
            lambda_star_hat = Some(l);
        } else {
            break;
        }
    }

    let lambda_min = positive[0];
    let spectrum = spectrum_bands(j, lambda_min, &cfg, DEFAULT_K_SAMPLES)?;
    let band = &spectrum.intervals[j - 1];
    let level = cfg.level(j);
    let half = 0.5 * kappa_hat * lambda_min;
    let interval_contained = band.lower <= level - half && band.upper >= level + half;

    Ok(SplittingEstimate {
        j,
        b,
        k_minus,
        k_plus,
        lambda_grid: lambda_grid.to_vec(),
        widths,
        kappa_first_order: 2.0 * b * (f_max - f_min),
        kappa_hat,
        lambda_star_hat,
        band_lower: band.lower,
        band_upper: band.upper,
        interval_contained,
    })
}
