//! Dense linear algebra and numerically stable scalar helpers.
//!
//! Everything here is sized for the small problems this crate solves
//! (tens of coefficients, tens of GP observations), so matrices are plain
//! row-major `Vec<f64>` buffers and factorizations are textbook dense ones.

use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows; panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// New matrix holding the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if v.len() != self.cols {
            return Err(NumericsError::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Square matrix that has passed a symmetry check.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(Matrix);

impl SpdMatrix {
    const SYMMETRY_RTOL: f64 = 1e-12;

    /// Wraps `m` after checking it is square and symmetric to 1e-12 relative.
    /// Positive definiteness is only established by [`cholesky`].
    pub fn new(m: Matrix) -> Result<Self, NumericsError> {
        if m.rows != m.cols {
            return Err(NumericsError::NotSquare { rows: m.rows, cols: m.cols });
        }
        let scale = m.data.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);
        for i in 0..m.rows {
            for j in 0..i {
                let gap = (m[(i, j)] - m[(j, i)]).abs();
                if gap > Self::SYMMETRY_RTOL * scale {
                    return Err(NumericsError::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

/// Lower-triangular `L` with `L·Lᵀ` equal to the factored matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: Matrix,
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// Diagonal jitter that had to be added for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `L·z`, the map from standard normals to draws with covariance `L·Lᵀ`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| dot(&self.lower.row(i)[..=i], &z[..=i])).collect()
    }

    /// Solves `L·y = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch { expected: n, got: b.len() });
        }
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - dot(&l.row(i)[..i], &y[..i]);
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }

    /// Solves `Lᵀ·x = y`.
    pub fn backward_solve(&self, y: &[f64]) -> Result<Vec<f64>, NumericsError> {
        let n = self.dim();
        if y.len() != n {
            return Err(NumericsError::DimensionMismatch { expected: n, got: y.len() });
        }
        let l = &self.lower;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        Ok(x)
    }

    /// Dense inverse of `L·Lᵀ`.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = solve_spd(self, &e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // symmetrize away round-off
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = avg;
                inv[(j, i)] = avg;
            }
        }
        inv
    }

    /// `log det(L·Lᵀ)`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// `L·Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = j + 1;
                let v = dot(&self.lower.row(i)[..k], &self.lower.row(j)[..k]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

fn try_cholesky(a: &Matrix, jitter: f64) -> Result<Matrix, NumericsError> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] + jitter - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > 0.0) || !d.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Cholesky factorization with jitter escalation.
///
/// A plain factorization is tried first. On a non-positive pivot the diagonal
/// is loaded with `1e-10·trace/dim`, doubling up to `1e-6·trace/dim`; if that
/// still fails the matrix is reported as not positive definite.
pub fn cholesky(m: &SpdMatrix) -> Result<CholeskyFactor, NumericsError> {
    let a = m.matrix();
    let first_err = match try_cholesky(a, 0.0) {
        Ok(lower) => return Ok(CholeskyFactor { lower, jitter: 0.0 }),
        Err(e) => e,
    };
    let n = a.rows.max(1);
    let scale = a.trace() / n as f64;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(first_err);
    }
    let ceiling = 1e-6 * scale;
    let mut jitter = 1e-10 * scale;
    let mut last_err = first_err;
    while jitter <= ceiling * (1.0 + 1e-12) {
        match try_cholesky(a, jitter) {
            Ok(lower) => return Ok(CholeskyFactor { lower, jitter }),
            Err(e) => last_err = e,
        }
        jitter *= 2.0;
    }
    Err(last_err)
}

/// Solves `(L·Lᵀ)·x = b`.
pub fn solve_spd(f: &CholeskyFactor, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let y = f.forward_solve(b)?;
    f.backward_solve(&y)
}

/// Logistic function, symmetric by construction: `σ(-z)` is computed as
/// `1 - σ(z)` for `z > 0`, which makes `σ(z) + σ(-z) == 1` hold bitwise.
/// The price is that the lower tail is resolved only to multiples of
/// `2^-53` and reaches exactly 0 below roughly `z = -37`.
#[inline]
pub fn stable_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        1.0 - 1.0 / (1.0 + z.exp())
    }
}

/// `log(1 + e^z)` without overflow or catastrophic cancellation.
#[inline]
pub fn log1pexp(z: f64) -> f64 {
    if z <= -37.0 {
        z.exp()
    } else if z <= 18.0 {
        z.exp().ln_1p()
    } else if z <= 33.3 {
        z + (-z).exp()
    } else {
        z
    }
}

/// `log(p / (1 - p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Empirical quantile with linear interpolation between order statistics
/// (the default "type 7" definition). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Sample mean and (n-1)-denominator standard deviation; sd is 0 for a
/// single value.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd(rows: &[&[f64]]) -> SpdMatrix {
        SpdMatrix::new(Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn cholesky_of_identity_is_identity() {
        let f = cholesky(&SpdMatrix::new(Matrix::identity(3)).unwrap()).unwrap();
        assert_eq!(f.lower(), &Matrix::identity(3));
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn cholesky_two_by_two() {
        let f = cholesky(&spd(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        let l = f.lower();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        // by hand: [[2,0],[1,√2]]·[[2,1],[0,√2]] = [[4,2],[2,3]]
        let r = f.reconstruct();
        assert!((r[(0, 0)] - 4.0).abs() < 1e-12 && (r[(1, 0)] - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let err = cholesky(&spd(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, NumericsError::NotPositiveDefinite { .. }));
    }

    #[test]
    fn jitter_rescues_singular_psd() {
        // rank one, PSD: fails plain, succeeds with a tiny ridge
        let f = cholesky(&spd(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(f.jitter() > 0.0 && f.jitter() <= 1e-6);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = Matrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]);
        assert!(matches!(SpdMatrix::new(m), Err(NumericsError::NotSymmetric { .. })));
    }

    #[test]
    fn solve_identity_and_two_by_two() {
        let f = cholesky(&SpdMatrix::new(Matrix::identity(2)).unwrap()).unwrap();
        assert_eq!(solve_spd(&f, &[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);

        let f = cholesky(&spd(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        let x = solve_spd(&f, &[10.0, 8.0]).unwrap();
        assert!((x[0] - 1.75).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);

        assert!(matches!(
            solve_spd(&f, &[1.0, 2.0, 3.0]),
            Err(NumericsError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(stable_sigmoid(0.0), 0.5);
        let s = stable_sigmoid(500.0);
        assert!(s > 1.0 - 1e-12 && s <= 1.0);
        assert!((stable_sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn log1pexp_examples() {
        assert!((log1pexp(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        let v = log1pexp(-1000.0);
        assert!((0.0..=1e-300).contains(&v));
        assert_eq!(log1pexp(1000.0), 1000.0);
        for &z in &[-30.0f64, -5.0, -0.1, 0.7, 4.0, 17.9, 18.1, 30.0, 34.0] {
            let exact = z.exp().ln_1p();
            assert!((log1pexp(z) - exact).abs() <= 1e-12 * exact.abs(), "z={z}");
        }
    }

    #[test]
    fn quantile_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert!((quantile_sorted(&xs, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&xs, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn mean_sd_conventions() {
        assert_eq!(mean_sd(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn random_spd(dim: usize, entries: &[f64]) -> Matrix {
        let b = Matrix::from_vec(dim, dim, entries[..dim * dim].to_vec()).unwrap();
        let mut a = b.transpose().matmul(&b).unwrap();
        for i in 0..dim {
            a[(i, i)] += 1.0;
        }
        a
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cholesky_reconstructs(dim in 1usize..=20, entries in prop::collection::vec(-3.0f64..3.0, 400)) {
            let a = random_spd(dim, &entries);
            let f = cholesky(&SpdMatrix::new(a.clone()).unwrap()).unwrap();
            let r = f.reconstruct();
            let mut diff = 0.0;
            for i in 0..dim { for j in 0..dim { diff += (r[(i, j)] - a[(i, j)]).powi(2); } }
            prop_assert!(diff.sqrt() / a.frobenius_norm() <= 1e-10);
            for i in 0..dim { prop_assert!(f.lower()[(i, i)] > 0.0); for j in i + 1..dim { prop_assert_eq!(f.lower()[(i, j)], 0.0); } }
        }

        #[test]
        fn solve_recovers_x(dim in 1usize..=20, entries in prop::collection::vec(-3.0f64..3.0, 400),
                            x in prop::collection::vec(-10.0f64..10.0, 20)) {
            let a = random_spd(dim, &entries);
            let x = &x[..dim];
            let b = a.matvec(x).unwrap();
            let f = cholesky(&SpdMatrix::new(a).unwrap()).unwrap();
            let got = solve_spd(&f, &b).unwrap();
            let err: f64 = got.iter().zip(x).map(|(g, t)| (g - t).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-12);
            prop_assert!(err / norm <= 1e-8);
        }

        #[test]
        fn sigmoid_is_bitwise_symmetric(z in -50.0f64..50.0) {
            prop_assert_eq!(stable_sigmoid(z), 1.0 - stable_sigmoid(-z));
        }

        #[test]
        fn sigmoid_is_monotone(a in -60.0f64..60.0, b in -60.0f64..60.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(stable_sigmoid(lo) <= stable_sigmoid(hi));
        }
    }
}
