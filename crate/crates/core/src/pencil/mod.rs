//! Whitening operators and the symmetric-definite matrix pencil.
//!
//! Given a reference class with covariance `B = Φ Λ Φᵀ`, the whitening
//! operator `L = Λ^(-1/2) Φᵀ` maps that class to unit covariance while the
//! other class keeps an uneven spectrum. The generalized eigenproblem
//! `A ψ̃ = μ B ψ̃` is solved by two independent reductions: eigendecomposing
//! `L A Lᵀ`, or factoring `B = G Gᵀ` and eigendecomposing `G⁻¹ A G⁻ᵀ`. Both
//! return a basis that is orthonormal in the B-weighted inner product, with
//! eigenvalues measuring the variance of one class in the frame where the
//! other is white.

mod features;

pub use features::{
    build_feature_map, build_feature_map_with, extract_features, extract_features_batch,
    parse_blocks, Block, Centering, FeatureMap, FeatureOptions, FeatureSpec, ProjectionKind,
};

use std::sync::Arc;

use rayon::prelude::*;

use crate::covariance::{ClassModel, Label};
use crate::error::{Error, Result};
use crate::linalg::{
    canonicalize_column_signs, cholesky, solve_triangular, sym_eig, Matrix, TriangularSide,
};

/// Relative eigenvalue floor below which a model counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// A whitening map `L` and its inverse (the coloring map), tied to the class
/// model it was derived from.
#[derive(Debug, Clone)]
pub struct WhiteningOperator {
    /// `L = Λ^(-1/2) Φᵀ`; row k is `φ_kᵀ / sqrt(λ_k)` in descending-λ order.
    pub forward: Matrix,
    /// `L⁻¹ = Φ Λ^(1/2)`; column k is the scaled basis vector `sqrt(λ_k) φ_k`.
    pub inverse: Matrix,
    /// Mean of the source model, subtracted before whitening and restored
    /// after coloring.
    pub mean: Vec<f64>,
    pub source_label: Label,
}

impl WhiteningOperator {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Build the whitening operator of a class model.
pub fn whitening_operator(model: &ClassModel) -> Result<WhiteningOperator> {
    let n = model.dim();
    let eig = &model.eig;
    let max = eig.eigenvalues[0];
    let min = *eig.eigenvalues.last().unwrap();
    if min <= SINGULAR_RATIO * max || min <= 0.0 {
        return Err(Error::SingularModel {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let mut forward = Matrix::zeros(n, n);
    let mut inverse = Matrix::zeros(n, n);
    for k in 0..n {
        let root = eig.eigenvalues[k].sqrt();
        for j in 0..n {
            let phi = eig.eigenvectors.get(j, k);
            forward.set(k, j, phi / root);
            inverse.set(j, k, phi * root);
        }
    }
    Ok(WhiteningOperator {
        forward,
        inverse,
        mean: model.mean.clone(),
        source_label: model.label.clone(),
    })
}

/// Whiten one mean-centered sample: `L (x - μ)`.
pub fn whiten_one(op: &WhiteningOperator, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sample has dimension {}, operator expects {}",
            x.len(),
            op.dim()
        )));
    }
    let centered: Vec<f64> = x.iter().zip(&op.mean).map(|(v, m)| v - m).collect();
    op.forward.mul_vec(&centered)
}

/// Color one whitened sample: `L⁻¹ z + μ`.
pub fn color_one(op: &WhiteningOperator, z: &[f64]) -> Result<Vec<f64>> {
    let mut out = op.inverse.mul_vec(z)?;
    for (o, m) in out.iter_mut().zip(&op.mean) {
        *o += m;
    }
    Ok(out)
}

/// Whiten a batch of samples.
pub fn whiten(op: &WhiteningOperator, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|x| whiten_one(op, x))
        .collect()
}

/// Color a batch of samples.
pub fn color(op: &WhiteningOperator, samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    samples.par_iter().map(|z| color_one(op, z)).collect()
}

/// Which reduction solves the pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PencilRoute {
    /// Eigendecompose `L A Lᵀ` with `L` the whitening operator of B.
    Whitening,
    /// Factor `B = G Gᵀ` and eigendecompose `G⁻¹ A G⁻ᵀ`. Default: avoids the
    /// explicit inverse square root of a near-singular B.
    #[default]
    Cholesky,
}

/// Generalized eigenpairs of the pencil `(A, B)`: `A ψ̃_k = μ_k B ψ̃_k`, with
/// `Ψ̃ᵀ B Ψ̃ = I` and eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct PencilBasis {
    pub eigenvalues: Vec<f64>,
    /// Columns are the B-orthonormal eigenvectors ψ̃_k.
    pub vectors: Matrix,
    pub a_model: Arc<ClassModel>,
    pub b_model: Arc<ClassModel>,
}

impl PencilBasis {
    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }
}

/// Solve the pencil `(A, B)` from two class models by the chosen route.
pub fn pencil_eigenbasis(
    a_model: &Arc<ClassModel>,
    b_model: &Arc<ClassModel>,
    route: PencilRoute,
) -> Result<PencilBasis> {
    let n = a_model.dim();
    if b_model.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "pencil models have dimensions {} and {}",
            n,
            b_model.dim()
        )));
    }
    let b_eig = &b_model.eig;
    let (bmax, bmin) = (b_eig.eigenvalues[0], *b_eig.eigenvalues.last().unwrap());
    if bmin <= SINGULAR_RATIO * bmax || bmin <= 0.0 {
        return Err(Error::SingularModel {
            min_eigenvalue: bmin,
            max_eigenvalue: bmax,
        });
    }

    let (eigenvalues, mut vectors) = match route {
        PencilRoute::Whitening => {
            let op = whitening_operator(b_model)?;
            let la = op.forward.matmul(&a_model.cov)?;
            let w = la.matmul(&op.forward.transpose())?.symmetrized();
            let eig = sym_eig(&w, 1e-6)?;
            // ψ̃ = Lᵀ ψ
            let tilde = op.forward.transpose().matmul(&eig.eigenvectors)?;
            (eig.eigenvalues, tilde)
        }
        PencilRoute::Cholesky => {
            let f = cholesky(&b_model.cov)?;
            let q = solve_triangular(&f, &a_model.cov, TriangularSide::Lower)?;
            let wt = solve_triangular(&f, &q.transpose(), TriangularSide::Lower)?;
            let w = wt.symmetrized();
            let eig = sym_eig(&w, 1e-6)?;
            // ψ̃ = G⁻ᵀ v
            let tilde =
                solve_triangular(&f, &eig.eigenvectors, TriangularSide::LowerTranspose)?;
            (eig.eigenvalues, tilde)
        }
    };
    canonicalize_column_signs(&mut vectors);
    Ok(PencilBasis {
        eigenvalues,
        vectors,
        a_model: Arc::clone(a_model),
        b_model: Arc::clone(b_model),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::estimate_class_model;

    fn model_from_cov(cov: Matrix, mean: Vec<f64>) -> Arc<ClassModel> {
        let eig = sym_eig(&cov, 1e-9).unwrap();
        Arc::new(ClassModel {
            label: Label::single(0),
            mean,
            cov,
            eig,
            sample_count: 2,
        })
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn whitening_of_identity_covariance() {
        let m = model_from_cov(Matrix::identity(3), vec![0.0; 3]);
        let op = whitening_operator(&m).unwrap();
        // Any orthogonal matrix whitens the identity; check the invariants.
        let fwd_inv = op.forward.matmul(&op.inverse).unwrap();
        assert!(max_abs_diff(&fwd_inv, &Matrix::identity(3)) < 1e-12);
        let white = op
            .forward
            .matmul(&m.cov)
            .unwrap()
            .matmul(&op.forward.transpose())
            .unwrap();
        assert!(max_abs_diff(&white, &Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn whitening_of_diagonal_covariance() {
        let cov = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = model_from_cov(cov, vec![0.0; 2]);
        let op = whitening_operator(&m).unwrap();
        let expect = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(max_abs_diff(&op.forward, &expect) < 1e-15);
        let expect_inv = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(max_abs_diff(&op.inverse, &expect_inv) < 1e-15);
    }

    #[test]
    fn whitening_invariant_on_dense_covariance() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let m = model_from_cov(cov, vec![0.0; 2]);
        let op = whitening_operator(&m).unwrap();
        let white = op
            .forward
            .matmul(&m.cov)
            .unwrap()
            .matmul(&op.forward.transpose())
            .unwrap();
        assert!(max_abs_diff(&white, &Matrix::identity(2)) < 1e-10);
    }

    #[test]
    fn whitening_rejects_singular_model() {
        let samples = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        let m = estimate_class_model(&samples, Label::single(0), 0.0).unwrap();
        assert!(matches!(
            whitening_operator(&m),
            Err(Error::SingularModel { .. })
        ));
    }

    #[test]
    fn whiten_centers_on_the_model_mean() {
        let cov = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let m = model_from_cov(cov, vec![3.0, -2.0]);
        let op = whitening_operator(&m).unwrap();
        let z = whiten_one(&op, &[3.0, -2.0]).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn color_undoes_whiten() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let m = model_from_cov(cov, vec![0.5, -0.25]);
        let op = whitening_operator(&m).unwrap();
        let xs = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 0.0]];
        let round = color(&op, &whiten(&op, &xs).unwrap()).unwrap();
        for (orig, back) in xs.iter().zip(&round) {
            for (a, b) in orig.iter().zip(back) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pencil_of_identical_classes_is_flat() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let a = model_from_cov(cov.clone(), vec![0.0; 2]);
        let b = model_from_cov(cov, vec![0.0; 2]);
        for route in [PencilRoute::Whitening, PencilRoute::Cholesky] {
            let p = pencil_eigenbasis(&a, &b, route).unwrap();
            for mu in &p.eigenvalues {
                assert!((mu - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pencil_with_identity_reference_is_plain_eig() {
        let cov = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let a = model_from_cov(cov.clone(), vec![0.0; 2]);
        let b = model_from_cov(Matrix::identity(2), vec![0.0; 2]);
        let p = pencil_eigenbasis(&a, &b, PencilRoute::Cholesky).unwrap();
        let plain = sym_eig(&cov, 1e-12).unwrap();
        for (mu, lam) in p.eigenvalues.iter().zip(&plain.eigenvalues) {
            assert!((mu - lam).abs() < 1e-10);
        }
        assert!(max_abs_diff(&p.vectors, &plain.eigenvectors) < 1e-10);
    }

    #[test]
    fn pencil_hand_case_diagonal_pair() {
        // det(A - μB) with A = diag(2,1), B = diag(1,2): μ = 2 and 0.5;
        // B-normalization fixes ψ̃ = e1 and e2/sqrt(2).
        let a = model_from_cov(
            Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap(),
            vec![0.0; 2],
        );
        let b = model_from_cov(
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap(),
            vec![0.0; 2],
        );
        for route in [PencilRoute::Whitening, PencilRoute::Cholesky] {
            let p = pencil_eigenbasis(&a, &b, route).unwrap();
            assert!((p.eigenvalues[0] - 2.0).abs() < 1e-12);
            assert!((p.eigenvalues[1] - 0.5).abs() < 1e-12);
            let expect = Matrix::from_rows(&[
                vec![1.0, 0.0],
                vec![0.0, 1.0 / 2.0f64.sqrt()],
            ])
            .unwrap();
            assert!(max_abs_diff(&p.vectors, &expect) < 1e-12);
        }
    }

    #[test]
    fn pencil_residual_and_b_orthonormality() {
        let a = model_from_cov(
            Matrix::from_rows(&[vec![3.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            vec![0.0; 2],
        );
        let b = model_from_cov(
            Matrix::from_rows(&[vec![2.0, -0.3], vec![-0.3, 1.5]]).unwrap(),
            vec![0.0; 2],
        );
        for route in [PencilRoute::Whitening, PencilRoute::Cholesky] {
            let p = pencil_eigenbasis(&a, &b, route).unwrap();
            // Ψ̃ᵀ B Ψ̃ = I
            let g = p
                .vectors
                .transpose()
                .matmul(&b.cov)
                .unwrap()
                .matmul(&p.vectors)
                .unwrap();
            assert!(max_abs_diff(&g, &Matrix::identity(2)) < 1e-10);
            // A ψ̃ = μ B ψ̃
            let av = a.cov.matmul(&p.vectors).unwrap();
            let bv = b.cov.matmul(&p.vectors).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    let r = av.get(i, k) - p.eigenvalues[k] * bv.get(i, k);
                    assert!(r.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pencil_rejects_mismatched_models() {
        let a = model_from_cov(Matrix::identity(2), vec![0.0; 2]);
        let b = model_from_cov(Matrix::identity(3), vec![0.0; 3]);
        assert!(matches!(
            pencil_eigenbasis(&a, &b, PencilRoute::Cholesky),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
