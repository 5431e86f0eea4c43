//! Finite-volume Hall conductance from the projection commutator trace
//! `Θ(P) = tr P[[P, Λ_1], [P, Λ_2]]`, integer plateaus across Landau gaps,
//! and the inverse participation ratio.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random_field::{interior_weight, realization_rng, spectrum_2d, DiscreteHamiltonian2D, Spectrum2D};

/// Minimum distance from `E` to the spectrum, in units of the largest eigenpair residual.
pub const GAP_FACTOR: f64 = 10.0;

/// Allowed distance of a plateau value from its integer.
pub const PLATEAU_TOLERANCE: f64 = 0.15;

/// Half-width of the energy window around `E`, as a fraction of `B`, in
/// which interior spectral weight counts against the gap.
pub const GAP_CLEARANCE: f64 = 0.25;

/// The gap is closed once the interior weight near `E` exceeds this
/// fraction of the interior weight carried by one Landau level.
pub const GAP_WEIGHT_FRACTION: f64 = 0.1;

/// Interior margin, in magnetic lengths `1/√B`, used to tell bulk from edge states.
pub const BULK_MARGIN: f64 = 2.0;

/// Interior weight above which an eigenvector counts as a bulk state.
pub const BULK_WEIGHT: f64 = 0.5;

/// Sign relating `Re(-2πiΘ)` to the reported conductance. The operator has
/// `curl A_0 = +B`, and for that orientation the trace gives `-j` in the
/// `j`-th gap; integer quantization `σ = +j` is stated for the opposite
/// orientation, so the orientation is folded in here and nowhere else.
pub const ORIENTATION: f64 = -1.0;

/// Switch corner, relative to the box centre.
pub const SWITCH_STEP: f64 = 0.5;

/// Spectral projection onto the eigenvectors below (or, for the
/// complement, above) the Fermi energy.
#[derive(Debug, Clone)]
pub struct FermiProjection {
    pub energy: f64,
    pub rank: usize,
    pub dim: usize,
    /// `dim × rank`, orthonormal columns.
    pub vectors: Mat<c64>,
    /// Distance from `energy` to the nearest computed eigenvalue.
    pub gap_distance: f64,
    pub complement: bool,
}

fn columns_to_mat(cols: &[&Vec<Complex64>], dim: usize) -> Mat<c64> {
    Mat::from_fn(dim, cols.len(), |p, k| cols[k][p])
}

fn check_gap(spectrum: &Spectrum2D, energy: f64) -> Result<f64> {
    if !energy.is_finite() {
        return Err(Error::invalid("Fermi energy must be finite"));
    }
    let distance = spectrum.values.iter().map(|e| (e - energy).abs()).fold(f64::INFINITY, f64::min);
    let required = GAP_FACTOR * spectrum.max_residual();
    if !(distance > required) {
        return Err(Error::GapViolation { energy, distance, required });
    }
    Ok(distance)
}

impl FermiProjection {
    /// `P = 1_{(-∞, E)}(H)` from the lowest eigenpairs; the computed part
    /// of the spectrum has to reach above `E` unless it is complete.
    pub fn new(spectrum: &Spectrum2D, dim: usize, energy: f64) -> Result<Self> {
        let gap_distance = check_gap(spectrum, energy)?;
        let rank = spectrum.values.iter().filter(|&&e| e < energy).count();
        if rank == spectrum.values.len() && rank < dim {
            return Err(Error::invalid(format!(
                "only {rank} of {dim} eigenpairs computed and all lie below E = {energy}"
            )));
        }
        let cols: Vec<&Vec<Complex64>> = spectrum.vectors[..rank].iter().collect();
        Ok(Self { energy, rank, dim, vectors: columns_to_mat(&cols, dim), gap_distance, complement: false })
    }

    /// `1 - P`, which needs the full spectrum.
    pub fn complement(spectrum: &Spectrum2D, dim: usize, energy: f64) -> Result<Self> {
        if spectrum.values.len() < dim {
            return Err(Error::invalid("the complement projection needs every eigenpair"));
        }
        let gap_distance = check_gap(spectrum, energy)?;
        let below = spectrum.values.iter().filter(|&&e| e < energy).count();
        let cols: Vec<&Vec<Complex64>> = spectrum.vectors[below..].iter().collect();
        Ok(Self { energy, rank: dim - below, dim, vectors: columns_to_mat(&cols, dim), gap_distance, complement: true })
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = &self.vectors;
        let mut coef = vec![Complex64::new(0.0, 0.0); self.rank];
        for (k, c) in coef.iter_mut().enumerate() {
            *c = (0..self.dim).map(|p| v[(p, k)].conj() * x[p]).sum();
        }
        (0..self.dim).map(|p| (0..self.rank).map(|k| v[(p, k)] * coef[k]).sum()).collect()
    }

    /// Largest of `‖P²x - Px‖` and `|⟨y, Px⟩ - ⟨Py, x⟩|` over random unit
    /// vectors: idempotence and self-adjointness in operator norm.
    pub fn projection_defect(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = realization_rng(seed, 0);
        let mut unit = || {
            let v: Vec<Complex64> =
                (0..self.dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect::<Vec<_>>()
        };
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let (x, y) = (unit(), unit());
            let px = self.apply(&x);
            let ppx = self.apply(&px);
            let idem = px.iter().zip(&ppx).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let py = self.apply(&y);
            let lhs: Complex64 = y.iter().zip(&px).map(|(a, b)| a.conj() * b).sum();
            let rhs: Complex64 = py.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
            worst = worst.max(idem).max((lhs - rhs).norm());
        }
        worst
    }
}

/// Eigenpairs reaching past `energy`: starts from the Weyl count
/// `L²E/4π` with a margin and doubles until the top computed eigenvalue
/// exceeds `energy` (or the spectrum is complete).
pub fn fermi_spectrum(ham: &DiscreteHamiltonian2D, energy: f64) -> Result<Spectrum2D> {
    let dim = ham.dim();
    let weyl = ham.l * ham.l * energy.max(0.0) / (4.0 * std::f64::consts::PI);
    let mut count = ((1.5 * weyl) as usize + 16).min(dim);
    loop {
        let spectrum = spectrum_2d(ham, count)?;
        let top = spectrum.values.last().copied().unwrap_or(f64::NEG_INFINITY);
        if top > energy || count == dim {
            return Ok(spectrum);
        }
        count = (2 * count).min(dim);
    }
}

/// `Λ_j(x) = [x_j - o_j >= 1/2]` about the box centre `o`; with cell-centred
/// sites no site lies on a switch line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSwitches {
    pub origin: [f64; 2],
    pub step: f64,
}

impl Default for HalfPlaneSwitches {
    fn default() -> Self {
        Self { origin: [0.0, 0.0], step: SWITCH_STEP }
    }
}

impl HalfPlaneSwitches {
    pub fn value(&self, axis: usize, x: [f64; 2]) -> f64 {
        if x[axis] - self.origin[axis] >= self.step {
            1.0
        } else {
            0.0
        }
    }
}

/// Square trace window. The conductance density is concentrated around the
/// corner where both switch lines meet, so windows are centred there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: [f64; 2],
    pub side: f64,
}

impl Window {
    /// Side `L/3` about the switch corner.
    pub fn central(l: f64) -> Self {
        Self::central_fraction(l, 3.0)
    }

    pub fn central_fraction(l: f64, divisor: f64) -> Self {
        Self { center: [SWITCH_STEP, SWITCH_STEP], side: l / divisor }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        let half = 0.5 * self.side;
        (x[0] - self.center[0]).abs() <= half && (x[1] - self.center[1]).abs() <= half
    }
}

/// Sequential product; the result must not depend on the thread count.
fn product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, c64::new(1.0, 0.0), Par::Seq);
    out
}

/// `Θ(P)`, summed over `window` when given. Uses the identity
/// `P[[P,Λ_1],[P,Λ_2]] = [PΛ_1P, PΛ_2P]`; with `P = VV†` and
/// `M_i = V†Λ_iV` the diagonal entry at `x` is `V_x (M_1M_2 - M_2M_1) V_x†`.
pub fn theta(
    ham: &DiscreteHamiltonian2D,
    projection: &FermiProjection,
    switches: &HalfPlaneSwitches,
    window: Option<&Window>,
) -> Complex64 {
    let r = projection.rank;
    if r == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let v = &projection.vectors;
    let dim = projection.dim;
    let coords: Vec<[f64; 2]> = (0..dim).map(|p| ham.coordinates(p)).collect();
    let masked = |axis: usize| {
        Mat::<c64>::from_fn(dim, r, |p, k| if switches.value(axis, coords[p]) == 1.0 { v[(p, k)] } else { c64::new(0.0, 0.0) })
    };
    let vh = v.adjoint().to_owned();
    let m1 = product(vh.as_ref(), masked(0).as_ref());
    let m2 = product(vh.as_ref(), masked(1).as_ref());
    let k = product(m1.as_ref(), m2.as_ref()) - product(m2.as_ref(), m1.as_ref());
    let sites: Vec<usize> = (0..dim).filter(|&p| window.is_none_or(|w| w.contains(coords[p]))).collect();
    let rows = Mat::<c64>::from_fn(sites.len(), r, |i, q| v[(sites[i], q)]);
    let rk = product(rows.as_ref(), k.as_ref());
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..sites.len() {
        for q in 0..r {
            sum += rk[(i, q)] * rows[(i, q)].conj();
        }
    }
    sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallConductance {
    pub energy: f64,
    pub rank: usize,
    pub theta_re: f64,
    pub theta_im: f64,
    /// `ORIENTATION · Re(-2πiΘ)`.
    pub sigma_hall: f64,
    /// `|Im(-2πiΘ)| = 2π |Re Θ|`.
    pub imag_residual: f64,
    pub window: Option<Window>,
}

pub fn hall_conductance(
    ham: &DiscreteHamiltonian2D,
    projection: &FermiProjection,
    switches: &HalfPlaneSwitches,
    window: Option<&Window>,
) -> HallConductance {
    let t = theta(ham, projection, switches, window);
    let value = Complex64::new(0.0, -2.0 * std::f64::consts::PI) * t;
    HallConductance {
        energy: projection.energy,
        rank: projection.rank,
        theta_re: t.re,
        theta_im: t.im,
        sigma_hall: ORIENTATION * value.re,
        imag_residual: value.im.abs(),
        window: window.copied(),
    }
}

/// Eigenvalues of states with at least half their weight farther than
/// [`BULK_MARGIN`] magnetic lengths from the walls.
pub fn bulk_eigenvalues(ham: &DiscreteHamiltonian2D, spectrum: &Spectrum2D) -> Vec<f64> {
    let margin = BULK_MARGIN / ham.b.sqrt();
    spectrum
        .values
        .iter()
        .zip(&spectrum.vectors)
        .filter(|(_, v)| interior_weight(ham, v, margin) >= BULK_WEIGHT)
        .map(|(e, _)| *e)
        .collect()
}

/// Spectral weight inside the [`BULK_MARGIN`] interior carried by
/// eigenvalues within `GAP_CLEARANCE·B` of `energy`. Returns the nearest such
/// eigenvalues below and above `energy` when that weight exceeds
/// [`GAP_WEIGHT_FRACTION`] of one level's share `area·B/2π`, i.e. when bulk
/// states fill the would-be gap.
pub fn gap_obstruction(ham: &DiscreteHamiltonian2D, spectrum: &Spectrum2D, energy: f64) -> Option<(f64, f64)> {
    let margin = BULK_MARGIN / ham.b.sqrt();
    let inner = (ham.l - 2.0 * margin).max(0.0);
    let level_weight = inner * inner * ham.b / (2.0 * std::f64::consts::PI);
    let clearance = GAP_CLEARANCE * ham.b;
    let mut weight = 0.0;
    let (mut below, mut above) = (f64::NEG_INFINITY, f64::INFINITY);
    for (e, v) in spectrum.values.iter().zip(&spectrum.vectors) {
        if (e - energy).abs() < clearance {
            weight += interior_weight(ham, v, margin);
            if *e < energy {
                below = below.max(*e);
            } else {
                above = above.min(*e);
            }
        }
    }
    (level_weight > 0.0 && weight > GAP_WEIGHT_FRACTION * level_weight).then_some((below, above))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauPoint {
    pub lambda: f64,
    pub energy: f64,
    pub sigma_hall: f64,
    pub imag_residual: f64,
    pub within_tolerance: bool,
}

/// Hall conductance at the centre `E = 2jB` of gap `j` for every member of
/// a family of operators (one per coupling). Aborts with a band-overlap
/// error when [`gap_obstruction`] finds bulk states at `E`.
pub fn plateau_scan(
    family: &[(f64, DiscreteHamiltonian2D)],
    gap: usize,
    switches: &HalfPlaneSwitches,
    window: Option<&Window>,
) -> Result<Vec<PlateauPoint>> {
    if gap == 0 {
        return Err(Error::invalid("gap index starts at 1"));
    }
    family
        .iter()
        .map(|(lambda, ham)| {
            let energy = 2.0 * gap as f64 * ham.b;
            let spectrum = fermi_spectrum(ham, energy)?;
            if let Some((upper, lower)) = gap_obstruction(ham, &spectrum, energy) {
                return Err(Error::BandOverlap { j: gap, lambda: *lambda, upper, lower });
            }
            let p = FermiProjection::new(&spectrum, ham.dim(), energy)?;
            let hc = hall_conductance(ham, &p, switches, window);
            Ok(PlateauPoint {
                lambda: *lambda,
                energy,
                sigma_hall: hc.sigma_hall,
                imag_residual: hc.imag_residual,
                within_tolerance: (hc.sigma_hall - gap as f64).abs() <= PLATEAU_TOLERANCE,
            })
        })
        .collect()
}

/// `Σ|ψ|⁴ / (Σ|ψ|²)²`.
pub fn ipr(v: &[Complex64]) -> Result<f64> {
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if !(norm2 > 0.0) {
        return Err(Error::invalid("inverse participation ratio of a zero vector"));
    }
    Ok(v.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum::<f64>() / (norm2 * norm2))
}
