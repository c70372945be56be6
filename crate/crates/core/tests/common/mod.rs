//! Shared generators and norms for the property suites.
#![allow(dead_code)] // each test target uses a different subset

use std::sync::Arc;

use matpencil::{sym_eig, ClassModel, Label, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.random_range(-1.0..1.0);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Matrix::new(n, n, data).unwrap()
}

/// SPD matrix via `GᵀG + 0.1 I` with G iid uniform in [-1, 1].
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g_data: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = Matrix::new(n, n, g_data).unwrap();
    let mut m = g.transpose().matmul(&g).unwrap();
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 0.1);
    }
    m.symmetrized()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Wrap an exact covariance matrix as a class model.
pub fn model_from_cov(cov: Matrix, mean: Vec<f64>, label: u8) -> Arc<ClassModel> {
    let eig = sym_eig(&cov, 1e-9).unwrap();
    Arc::new(ClassModel {
        label: Label::single(label),
        mean,
        cov,
        eig,
        sample_count: 2,
    })
}

/// Random orthonormal matrix: the eigenvectors of a random symmetric matrix.
pub fn random_orthonormal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let m = random_symmetric(n, rng);
    sym_eig(&m, 1e-9).unwrap().eigenvectors
}
