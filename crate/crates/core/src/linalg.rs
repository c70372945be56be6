//! Self-contained dense real linear algebra.
//!
//! Row-major `Matrix` plus the factorizations the rest of the crate is built
//! on: symmetric eigendecomposition via cyclic Jacobi rotations, Cholesky
//! factorization, and triangular solves. Everything is `f64`; constructors
//! refuse NaN/Inf so downstream code never has to re-check.

use crate::error::{Error, Result};

/// Dense real matrix in row-major order. Dimensions are always at least 1x1
/// and entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build a matrix from row-major data. Rejects empty dimensions,
    /// length mismatches, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "dimensions must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from explicit rows; validates rectangularity and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("no rows given".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Raw row-major entries.
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest absolute entry (the max-norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of diagonal entries. Requires a square matrix.
    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace requires a square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * rhs`. Inner dimensions must agree.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (m, n, p) = (self.rows, self.cols, rhs.cols);
        let mut out = Matrix::zeros(m, p);
        for i in 0..m {
            let a_row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for (k, &aik) in a_row.iter().enumerate() {
                let b_row = &rhs.data[k * p..(k + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// `(self + selfᵀ) / 2`, squaring away rounding asymmetry.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square(), "symmetrized requires a square matrix");
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }
}

/// Eigenvalues (descending) paired with unit-norm eigenvector columns.
///
/// Column `k` of `eigenvectors` goes with `eigenvalues[k]`. Signs follow a
/// fixed convention: the component of largest magnitude in each column is
/// positive, ties resolved toward the lowest index.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// Dimension of the underlying space (rows of the eigenvector matrix).
    pub fn dim(&self) -> usize {
        self.eigenvectors.rows()
    }

    /// Number of retained eigenpairs (columns may be fewer than `dim` after
    /// an energy truncation).
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Reassemble `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let k = self.len();
        let v = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for c in 0..k {
            let lam = self.eigenvalues[c];
            for i in 0..n {
                let vi = v.get(i, c) * lam;
                for j in 0..n {
                    out.data[i * n + j] += vi * v.get(j, c);
                }
            }
        }
        out
    }
}

/// Default cap on Jacobi sweeps before giving up.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition via cyclic Jacobi rotations.
///
/// `tol` bounds the admissible asymmetry: `max |m_ij - m_ji| <= tol * max|m|`.
/// The input is symmetrized before iterating so the result is well defined
/// for inputs that are symmetric only up to rounding.
pub fn sym_eig(m: &Matrix, tol: f64) -> Result<EigenDecomposition> {
    sym_eig_with(m, tol, DEFAULT_MAX_SWEEPS)
}

/// `sym_eig` with an explicit sweep cap.
pub fn sym_eig_with(m: &Matrix, tol: f64, max_sweeps: usize) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let scale = m.max_abs();
    let mut max_asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    let allowed = tol * scale;
    if max_asym > allowed {
        return Err(Error::NonSymmetric {
            max_asymmetry: max_asym,
            allowed,
        });
    }

    // Work on the symmetrized copy; only the strict upper triangle of `a`
    // is referenced during the sweeps. Eigenvectors accumulate in `vt`
    // (transposed: row k is eigenvector k) so rotations touch contiguous
    // rows. The segment updates run on raw pointers: the stride-n column
    // walks dominate the cost at MNIST sizes and bounds checks there are
    // not elided.
    let mut a = m.symmetrized().data;
    let mut vt = Matrix::identity(n).data;
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let mut converged = false;
    for sweep in 0..max_sweeps {
        let mut off_sum = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                off_sum += a[p * n + q].abs();
            }
        }
        if off_sum == 0.0 {
            converged = true;
            break;
        }
        // Skip small rotations during the first sweeps.
        let thresh = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                // Annihilate entries that are negligible against both diagonals.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;
                // Rotate the remaining upper-triangle entries in the p/q
                // plane: (x, y) <- (x - s(y + x tau), y + s(x - y tau)).
                unsafe {
                    let base = a.as_mut_ptr();
                    // j < p: both entries sit in column segments.
                    rotate_seg(base.add(p), n, base.add(q), n, p, s, tau);
                    // p < j < q: row p meets column q.
                    rotate_seg(
                        base.add(p * n + p + 1),
                        1,
                        base.add((p + 1) * n + q),
                        n,
                        q - p - 1,
                        s,
                        tau,
                    );
                    // q < j: both entries sit in rows p and q.
                    rotate_pair_rows(
                        base.add(p * n + q + 1),
                        base.add(q * n + q + 1),
                        n - q - 1,
                        s,
                        tau,
                    );
                }
                // Accumulate the rotation into the (transposed) eigenvectors.
                rotate_row_pair(&mut vt, n, p, q, s, tau);
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: max_sweeps });
    }

    // Sort descending; stable so degenerate eigenvalues keep sweep order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors.data[i * n + col] = vt[src * n + i];
        }
    }
    canonicalize_column_signs(&mut eigenvectors);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Apply the plane rotation `(rp, rq) <- (c rp - s rq, s rp + c rq)` to rows
/// `p < q` of a row-major `n x n` buffer, in the compensated `tau` form.
#[inline]
fn rotate_row_pair(data: &mut [f64], n: usize, p: usize, q: usize, s: f64, tau: f64) {
    let (head, tail) = data.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let g = *vp;
        let h = *vq;
        *vp = g - s * (h + g * tau);
        *vq = h + s * (g - h * tau);
    }
}

/// Rotate `count` element pairs starting at `px`/`py` with strides `sx`/`sy`.
///
/// # Safety
/// Both strided ranges must lie inside the same allocation and must not
/// overlap each other.
#[inline]
unsafe fn rotate_seg(
    px: *mut f64,
    sx: usize,
    py: *mut f64,
    sy: usize,
    count: usize,
    s: f64,
    tau: f64,
) {
    let mut x = px;
    let mut y = py;
    for _ in 0..count {
        let g = *x;
        let h = *y;
        *x = g - s * (h + g * tau);
        *y = h + s * (g - h * tau);
        x = x.add(sx);
        y = y.add(sy);
    }
}

/// Rotate pairs drawn from two contiguous, non-overlapping runs.
///
/// # Safety
/// `px..px+count` and `py..py+count` must be valid and disjoint.
#[inline]
unsafe fn rotate_pair_rows(px: *mut f64, py: *mut f64, count: usize, s: f64, tau: f64) {
    let xs = std::slice::from_raw_parts_mut(px, count);
    let ys = std::slice::from_raw_parts_mut(py, count);
    for (x, y) in xs.iter_mut().zip(ys.iter_mut()) {
        let g = *x;
        let h = *y;
        *x = g - s * (h + g * tau);
        *y = h + s * (g - h * tau);
    }
}

/// Flip column signs so the largest-magnitude component of each column is
/// positive; ties resolve to the lowest index.
pub(crate) fn canonicalize_column_signs(m: &mut Matrix) {
    let (rows, cols) = (m.rows, m.cols);
    for c in 0..cols {
        let mut best = 0;
        let mut best_abs = 0.0;
        for r in 0..rows {
            let v = m.data[r * cols + c].abs();
            if v > best_abs {
                best_abs = v;
                best = r;
            }
        }
        if m.data[best * cols + c] < 0.0 {
            for r in 0..rows {
                m.data[r * cols + c] = -m.data[r * cols + c];
            }
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `L Lᵀ`, for round-trip checks.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let l = &self.lower;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let kmax = i.min(j) + 1;
                let mut s = 0.0;
                for k in 0..kmax {
                    s += l.get(i, k) * l.get(j, k);
                }
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Cholesky factorization `m = L Lᵀ`. Only the lower triangle of `m` is read;
/// symmetry is the caller's contract.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Cholesky requires a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: s, index: j });
                }
                l.set(i, j, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(CholeskyFactor { lower: l })
}

/// Which triangular system a [`solve_triangular`] call targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangularSide {
    /// Solve `L x = b` by forward substitution.
    Lower,
    /// Solve `Lᵀ x = b` by back substitution.
    LowerTranspose,
}

/// Solve a triangular system against a (possibly multi-column) right-hand side.
pub fn solve_triangular(f: &CholeskyFactor, b: &Matrix, side: TriangularSide) -> Result<Matrix> {
    let n = f.dim();
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, factor is {n}x{n}",
            b.rows()
        )));
    }
    let l = &f.lower;
    let cols = b.cols();
    let mut x = b.clone();
    match side {
        TriangularSide::Lower => {
            for i in 0..n {
                for k in 0..i {
                    let lik = l.get(i, k);
                    if lik != 0.0 {
                        let (done, rest) = x.data.split_at_mut(i * cols);
                        let xk = &done[k * cols..(k + 1) * cols];
                        let xi = &mut rest[..cols];
                        for (o, &v) in xi.iter_mut().zip(xk) {
                            *o -= lik * v;
                        }
                    }
                }
                let d = l.get(i, i);
                for v in &mut x.data[i * cols..(i + 1) * cols] {
                    *v /= d;
                }
            }
        }
        TriangularSide::LowerTranspose => {
            for i in (0..n).rev() {
                for k in (i + 1)..n {
                    let lki = l.get(k, i);
                    if lki != 0.0 {
                        let (head, tail) = x.data.split_at_mut(k * cols);
                        let xi = &mut head[i * cols..(i + 1) * cols];
                        let xk = &tail[..cols];
                        for (o, &v) in xi.iter_mut().zip(xk) {
                            *o -= lki * v;
                        }
                    }
                }
                let d = l.get(i, i);
                for v in &mut x.data[i * cols..(i + 1) * cols] {
                    *v /= d;
                }
            }
        }
    }
    Ok(x)
}

/// Invert a symmetric positive definite matrix through its Cholesky factor.
pub fn invert_spd(m: &Matrix) -> Result<Matrix> {
    let f = cholesky(m)?;
    let y = solve_triangular(&f, &Matrix::identity(m.rows()), TriangularSide::Lower)?;
    solve_triangular(&f, &y, TriangularSide::LowerTranspose)
}

/// Smallest leading count of descending non-negative values whose sum reaches
/// `energy` times the total. `energy = 1.0` keeps everything.
pub(crate) fn energy_truncation_count(values_desc: &[f64], energy: f64) -> usize {
    let total: f64 = values_desc.iter().sum();
    let target = energy * total;
    let mut running = 0.0;
    for (i, v) in values_desc.iter().enumerate() {
        running += v;
        if running >= target {
            return i + 1;
        }
    }
    values_desc.len()
}
