//! Shared input generators for the benchmarks.

use std::sync::Arc;

use matpencil::{sym_eig, ClassModel, Label, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

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

pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g_data: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = Matrix::new(n, n, g_data).unwrap();
    let mut m = g.transpose().matmul(&g).unwrap();
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 0.1);
    }
    m.symmetrized()
}

pub fn model_from_cov(cov: Matrix) -> Arc<ClassModel> {
    let eig = sym_eig(&cov, 1e-9).unwrap();
    let n = cov.rows();
    Arc::new(ClassModel {
        label: Label::single(0),
        mean: vec![0.0; n],
        cov,
        eig,
        sample_count: 2,
    })
}

pub fn random_vectors(count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}
