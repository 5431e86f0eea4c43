//! Dense real symmetric eigensolver: Householder reduction to tridiagonal
//! form followed by implicit-shift QL iteration (the EISPACK `tred2`/`tql2`
//! pair, after the public-domain JAMA translation).

use crate::error::{Error, Result};

/// Entries may differ from their transpose by at most this much.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Square matrix in row-major storage, intended to hold symmetric data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix rows must all have length equal to the row count"));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Writes `v` at `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute row sum (the induced ∞-norm, equal to the 1-norm here).
    pub fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.n.max(1))
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.n.max(1))
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Fails with the worst offending entry when the matrix is not symmetric.
    pub fn check_symmetric(&self) -> Result<()> {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > worst.2 || d.is_nan() {
                    worst = (i, j, d);
                }
            }
        }
        if worst.2 > SYMMETRY_TOLERANCE || worst.2.is_nan() {
            return Err(Error::NotSymmetric { row: worst.0, col: worst.1, deviation: worst.2 });
        }
        Ok(())
    }
}

/// Eigenvalues ascending, eigenvectors as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` (entries `vectors.get(i, k)`) belongs to `values[k]`.
    pub vectors: SymMatrix,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.dim()).map(|i| self.vectors.get(i, k)).collect()
    }
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    m.check_symmetric()?;
    let (d, e) = tridiagonalize(m, false);
    let mut d = d;
    let mut e = e;
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eigen(m: &SymMatrix) -> Result<SymmetricEigen> {
    m.check_symmetric()?;
    let n = m.dim();
    let mut v = m.data.clone();
    let (mut d, mut e) = tred2(n, &mut v, true);
    ql_implicit(&mut d, &mut e, Some(&mut v))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = SymMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new, v[i * n + old]);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues, ascending, of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off.len() + 1 == diag.len()`).
pub(crate) fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let mut d = diag.to_vec();
    let mut e = vec![0.0; d.len()];
    e[1..].copy_from_slice(off);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn tridiagonalize(m: &SymMatrix, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut v = m.data.clone();
    tred2(m.dim(), &mut v, accumulate)
}

/// Householder reduction of the symmetric matrix stored in `v` (row-major).
/// Returns the diagonal `d` and sub-diagonal `e` (`e[0] = 0`). When
/// `accumulate` is set, `v` is overwritten with the orthogonal transform.
fn tred2(n: usize, v: &mut [f64], accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return (d, e);
    }
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..(n - 1) {
            v[idx(n - 1, i)] = v[idx(i, i)];
            v[idx(i, i)] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = v[idx(k, i + 1)] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += v[idx(k, i + 1)] * v[idx(k, j)];
                    }
                    for k in 0..=i {
                        v[idx(k, j)] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v[idx(k, i + 1)] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = v[idx(n - 1, j)];
            v[idx(n - 1, j)] = 0.0;
        }
        v[idx(n - 1, n - 1)] = 1.0;
    } else {
        // Without accumulation the diagonal still has to be read back; the
        // Householder vectors live below the diagonal and are discarded.
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = v[idx(j, j)];
        }
    }
    e[0] = 0.0;
    (d, e)
}

/// Implicit QL on the tridiagonal (`d`, `e` with `e[0]` unused). Rotations
/// are applied to the columns of `z` when supplied. Eigenvalues are left
/// unsorted in `d`.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > 60 {
                    return Err(Error::convergence("implicit QL iteration", e[l].abs()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zk1 = z[k * n + i + 1];
                            let zk = z[k * n + i];
                            z[k * n + i + 1] = s * zk + c * zk1;
                            z[k * n + i] = c * zk - s * zk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set_sym(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn two_by_two() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&m).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_of_size_five() {
        let ev = symmetric_eigenvalues(&SymMatrix::identity(5)).unwrap();
        assert_eq!(ev, vec![1.0; 5]);
    }

    #[test]
    fn trivial_sizes() {
        assert!(symmetric_eigenvalues(&SymMatrix::zeros(0)).unwrap().is_empty());
        let one = SymMatrix::from_rows(&[vec![-4.5]]).unwrap();
        assert_eq!(symmetric_eigenvalues(&one).unwrap(), vec![-4.5]);
        let eig = symmetric_eigen(&one).unwrap();
        assert_eq!(eig.vector(0), vec![1.0]);
    }

    #[test]
    fn trace_identity_on_random_matrix() {
        let m = random_symmetric(50, 7);
        let ev = symmetric_eigenvalues(&m).unwrap();
        let sum: f64 = ev.iter().sum();
        assert!((sum - m.trace()).abs() < 1e-9 * m.trace().abs().max(1.0));
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn residuals_and_orthonormality() {
        let m = random_symmetric(40, 11);
        let eig = symmetric_eigen(&m).unwrap();
        let norm = m.norm_inf();
        for k in 0..40 {
            let v = eig.vector(k);
            let mv = m.mul_vec(&v);
            let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - eig.values[k] * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * norm, "k={k}: {res}");
            for l in 0..40 {
                let dot: f64 = v.iter().zip(eig.vector(l)).map(|(a, b)| a * b).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
        let values_only = symmetric_eigenvalues(&m).unwrap();
        for (a, b) in values_only.iter().zip(&eig.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn known_tridiagonal_spectrum() {
        // Discrete Dirichlet Laplacian: 2 - 2 cos(kπ/(n+1)).
        let n = 30;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 2.0);
            if i + 1 < n {
                m.set_sym(i, i + 1, -1.0);
            }
        }
        let ev = symmetric_eigenvalues(&m).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - want).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let mut m = SymMatrix::zeros(6);
        for (i, v) in [3.0, -1.0, 3.0, 0.0, 7.0, -1.0].iter().enumerate() {
            m.set(i, i, *v);
        }
        let ev = symmetric_eigenvalues(&m).unwrap();
        assert_eq!(ev, vec![-1.0, -1.0, 0.0, 3.0, 3.0, 7.0]);
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        match symmetric_eigenvalues(&m) {
            Err(Error::NotSymmetric { row: 0, col: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
