//! Transformation-independent bases for deterministic signals.
//!
//! For a signal and a finite set of transformations (cyclic shifts or 2-D
//! cyclic translations), the correlation matrix accumulated over all
//! transformed copies defines an eigenbasis in which the projection
//! coefficients, viewed as functions of the transformation, are orthogonal:
//! the coefficient Gram matrix equals `diag(λ_k)`.

use crate::error::{Error, Result};
use crate::linalg::{energy_truncation_count, sym_eig, EigenDecomposition, Matrix};

/// A finite set of transformations applied to a fixed-geometry signal.
/// The identity must be present and elements must be distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformationSet {
    /// Cyclic shifts of a 1-D signal; each element rotates by `shift`.
    CyclicShift1d { shifts: Vec<usize> },
    /// Cyclic translations of a row-major 2-D signal.
    CyclicTranslate2d {
        rows: usize,
        cols: usize,
        offsets: Vec<(usize, usize)>,
    },
}

impl TransformationSet {
    /// All cyclic shifts of a length-`n` signal, identity first.
    pub fn all_shifts_1d(n: usize) -> Self {
        TransformationSet::CyclicShift1d {
            shifts: (0..n).collect(),
        }
    }

    /// An explicit shift set; must be non-empty, distinct, and contain 0.
    pub fn shifts_1d(shifts: Vec<usize>) -> Result<Self> {
        validate_elements(&shifts)?;
        Ok(TransformationSet::CyclicShift1d { shifts })
    }

    /// All cyclic translations of an `rows x cols` signal.
    pub fn all_translations_2d(rows: usize, cols: usize) -> Self {
        let offsets = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .collect();
        TransformationSet::CyclicTranslate2d {
            rows,
            cols,
            offsets,
        }
    }

    /// An explicit translation set; must be non-empty, distinct, and contain
    /// the identity `(0, 0)`.
    pub fn translations_2d(
        rows: usize,
        cols: usize,
        offsets: Vec<(usize, usize)>,
    ) -> Result<Self> {
        validate_elements(&offsets)?;
        Ok(TransformationSet::CyclicTranslate2d {
            rows,
            cols,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            TransformationSet::CyclicShift1d { shifts } => shifts.len(),
            TransformationSet::CyclicTranslate2d { offsets, .. } => offsets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Apply every transformation to `x`, in element order.
    pub fn apply_all(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self {
            TransformationSet::CyclicShift1d { shifts } => {
                let n = x.len();
                if let Some(bad) = shifts.iter().find(|s| **s >= n) {
                    return Err(Error::GeometryMismatch(format!(
                        "shift {bad} out of range for signal of length {n}"
                    )));
                }
                Ok(shifts
                    .iter()
                    .map(|s| (0..n).map(|i| x[(i + n - s) % n]).collect())
                    .collect())
            }
            TransformationSet::CyclicTranslate2d {
                rows,
                cols,
                offsets,
            } => {
                if x.len() != rows * cols {
                    return Err(Error::GeometryMismatch(format!(
                        "signal of length {} does not fill a {rows}x{cols} grid",
                        x.len()
                    )));
                }
                if let Some((br, bc)) = offsets.iter().find(|(r, c)| r >= rows || c >= cols) {
                    return Err(Error::GeometryMismatch(format!(
                        "offset ({br}, {bc}) out of range for a {rows}x{cols} grid"
                    )));
                }
                Ok(offsets
                    .iter()
                    .map(|(dr, dc)| {
                        let mut out = vec![0.0; x.len()];
                        for r in 0..*rows {
                            for c in 0..*cols {
                                let sr = (r + rows - dr) % rows;
                                let sc = (c + cols - dc) % cols;
                                out[r * cols + c] = x[sr * cols + sc];
                            }
                        }
                        out
                    })
                    .collect())
            }
        }
    }
}

fn validate_elements<T: Ord + Default>(elements: &[T]) -> Result<()> {
    if elements.is_empty() {
        return Err(Error::ConfigError("transformation set is empty".into()));
    }
    if !elements.iter().any(|e| *e == T::default()) {
        return Err(Error::ConfigError(
            "transformation set must contain the identity".into(),
        ));
    }
    let mut sorted: Vec<&T> = elements.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::ConfigError(
            "transformation set has duplicate elements".into(),
        ));
    }
    Ok(())
}

/// Correlation matrix over the transformation orbit:
/// `R(i, j) = Σ_p (τ_p.x)(i) (τ_p.x)(j)`. Symmetric positive semi-definite.
pub fn transformation_correlation(x: &[f64], ts: &TransformationSet) -> Result<Matrix> {
    let transformed = ts.apply_all(x)?;
    let n = x.len();
    let mut data = vec![0.0; n * n];
    for t in &transformed {
        for i in 0..n {
            let ti = t[i];
            let row = &mut data[i * n..(i + 1) * n];
            for (r, tj) in row.iter_mut().zip(t) {
                *r += ti * tj;
            }
        }
    }
    Matrix::new(n, n, data)
}

/// Eigenbasis of a correlation matrix, truncated to the smallest leading set
/// of eigenvalues holding `energy` of the trace. `energy = 1.0` keeps all.
pub fn invariant_eigenbasis(r: &Matrix, energy: f64) -> Result<EigenDecomposition> {
    if !(0.0 < energy && energy <= 1.0) {
        return Err(Error::ConfigError(format!(
            "energy fraction must be in (0, 1], got {energy}"
        )));
    }
    let eig = sym_eig(r, 1e-9)?;
    let keep = energy_truncation_count(&eig.eigenvalues, energy);
    if keep == eig.len() {
        return Ok(eig);
    }
    let n = eig.dim();
    let mut vectors = Matrix::zeros(n, keep);
    for k in 0..keep {
        for i in 0..n {
            vectors.set(i, k, eig.eigenvectors.get(i, k));
        }
    }
    Ok(EigenDecomposition {
        eigenvalues: eig.eigenvalues[..keep].to_vec(),
        eigenvectors: vectors,
    })
}

/// Projection coefficients `a_k(τ_p) = ⟨τ_p.x, φ_k⟩` for every basis vector
/// (rows) and transformation (columns).
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub entries: Matrix,
}

/// Tabulate the projection coefficients of `x`'s orbit against the columns
/// of `basis`.
pub fn coefficient_table(
    x: &[f64],
    ts: &TransformationSet,
    basis: &Matrix,
) -> Result<CoefficientTable> {
    if basis.rows() != x.len() {
        return Err(Error::GeometryMismatch(format!(
            "basis vectors have dimension {}, signal has {}",
            basis.rows(),
            x.len()
        )));
    }
    let transformed = ts.apply_all(x)?;
    let k = basis.cols();
    let p = transformed.len();
    let mut entries = Matrix::zeros(k, p);
    for (pi, t) in transformed.iter().enumerate() {
        for ki in 0..k {
            let dot: f64 = (0..x.len()).map(|i| t[i] * basis.get(i, ki)).sum();
            entries.set(ki, pi, dot);
        }
    }
    Ok(CoefficientTable { entries })
}

/// Gram matrix of the coefficient functions:
/// `G(k, l) = Σ_p a_k(τ_p) a_l(τ_p)`. Equal to `diag(λ_k)` exactly when the
/// basis solves the eigenproblem of the correlation matrix.
pub fn coefficient_gram(x: &[f64], ts: &TransformationSet, basis: &Matrix) -> Result<Matrix> {
    let table = coefficient_table(x, ts, basis)?;
    table.entries.matmul(&table.entries.transpose())
}
