//! Per-class statistics: means and regularized covariance matrices, with
//! pooling for multi-class reference models.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, EigenDecomposition, Matrix};

/// Samples per parallel accumulation chunk. Fixed so the floating-point
/// summation order (and therefore every downstream bit) is independent of
/// the thread count.
const COV_CHUNK: usize = 512;

/// Identifier of a class model: a single class or a pooled set of classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Vec<u8>);

impl Label {
    pub fn single(id: u8) -> Self {
        Label(vec![id])
    }

    /// Pooled label from constituent class ids; sorted and deduplicated.
    pub fn pooled(ids: &[u8]) -> Self {
        assert!(!ids.is_empty(), "a label needs at least one class id");
        let mut v = ids.to_vec();
        v.sort_unstable();
        v.dedup();
        Label(v)
    }

    pub fn ids(&self) -> &[u8] {
        &self.0
    }

    pub fn is_pooled(&self) -> bool {
        self.0.len() > 1
    }
}

impl From<u8> for Label {
    fn from(id: u8) -> Self {
        Label::single(id)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pooled() {
            write!(f, "pool(")?;
            for (i, id) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{id}")?;
            }
            write!(f, ")")
        } else {
            write!(f, "{}", self.0[0])
        }
    }
}

/// Divisor used for the covariance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `1/N` — the expectation estimate. Default.
    #[default]
    Population,
    /// `1/(N-1)` — the unbiased sample estimate.
    Sample,
}

/// Mean, regularized covariance, and its eigendecomposition for one class
/// (or one pooled set of classes).
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub label: Label,
    pub mean: Vec<f64>,
    pub cov: Matrix,
    pub eig: EigenDecomposition,
    pub sample_count: usize,
}

impl ClassModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Ratio of the largest to the smallest covariance eigenvalue.
    pub fn condition_number(&self) -> f64 {
        let max = self.eig.eigenvalues[0];
        let min = *self.eig.eigenvalues.last().unwrap();
        max / min
    }
}

/// Estimate a class model with population normalization.
///
/// The covariance is `(1/N) Σ (x-μ)(x-μ)ᵀ + ridge·s·I` where `s` is the mean
/// diagonal of the raw covariance, so the ridge is scale-relative.
pub fn estimate_class_model(samples: &[Vec<f64>], label: Label, ridge: f64) -> Result<ClassModel> {
    estimate_class_model_with(samples, label, ridge, Normalization::Population)
}

/// [`estimate_class_model`] with an explicit normalization choice.
pub fn estimate_class_model_with(
    samples: &[Vec<f64>],
    label: Label,
    ridge: f64,
    normalization: Normalization,
) -> Result<ClassModel> {
    let views: Vec<&[f64]> = samples.iter().map(|s| s.as_slice()).collect();
    estimate_from_rows(&views, label, ridge, normalization)
}

/// Estimate one model from the concatenation of several labelled sample sets.
/// This is exactly `estimate_class_model` on the combined samples, not an
/// average of per-class covariances.
pub fn pool_classes(groups: &[(Label, &[Vec<f64>])], ridge: f64) -> Result<ClassModel> {
    if groups.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut ids = Vec::new();
    let mut views = Vec::new();
    for (label, samples) in groups {
        ids.extend_from_slice(label.ids());
        views.extend(samples.iter().map(|s| s.as_slice()));
    }
    estimate_from_rows(&views, Label::pooled(&ids), ridge, Normalization::Population)
}

fn estimate_from_rows(
    rows: &[&[f64]],
    label: Label,
    ridge: f64,
    normalization: Normalization,
) -> Result<ClassModel> {
    let count = rows.len();
    if count < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: count,
        });
    }
    let dim = rows[0].len();
    if dim == 0 {
        return Err(Error::DimensionMismatch("samples have dimension 0".into()));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} has dimension {}, expected {dim}",
                r.len()
            )));
        }
    }

    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(*r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }

    // Accumulate centered outer products into the packed upper triangle,
    // chunked for parallelism, then summed in fixed chunk order.
    let tri_len = dim * (dim + 1) / 2;
    let partials: Vec<Vec<f64>> = rows
        .par_chunks(COV_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; tri_len];
            let mut centered = vec![0.0; dim];
            for r in chunk {
                for ((c, v), m) in centered.iter_mut().zip(*r).zip(&mean) {
                    *c = v - m;
                }
                let mut offset = 0;
                for i in 0..dim {
                    let ci = centered[i];
                    let row = &mut acc[offset..offset + dim - i];
                    for (a, cj) in row.iter_mut().zip(&centered[i..]) {
                        *a += ci * cj;
                    }
                    offset += dim - i;
                }
            }
            acc
        })
        .collect();

    let mut tri = vec![0.0; tri_len];
    for p in &partials {
        for (t, v) in tri.iter_mut().zip(p) {
            *t += v;
        }
    }

    let divisor = match normalization {
        Normalization::Population => count as f64,
        Normalization::Sample => (count - 1) as f64,
    };
    let mut data = vec![0.0; dim * dim];
    let mut offset = 0;
    for i in 0..dim {
        for j in i..dim {
            let v = tri[offset + j - i] / divisor;
            data[i * dim + j] = v;
            data[j * dim + i] = v;
        }
        offset += dim - i;
    }

    let raw_trace: f64 = (0..dim).map(|i| data[i * dim + i]).sum();
    let floor = ridge * raw_trace / dim as f64;
    for i in 0..dim {
        data[i * dim + i] += floor;
    }

    let cov = Matrix::new(dim, dim, data)?;
    let eig = sym_eig(&cov, 1e-9)?;
    Ok(ClassModel {
        label,
        mean,
        cov,
        eig,
        sample_count: count,
    })
}
