//! Monte Carlo properties of pattern transformation.

mod common;

use common::{model_from_cov, random_spd};
use matpencil::{cholesky, transform_pattern, whitening_operator, Matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_samples(cov: &Matrix, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = cov.rows();
    let g = cholesky(cov).unwrap();
    (0..count)
        .map(|_| {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            g.lower().mul_vec(&z).unwrap()
        })
        .collect()
}

fn empirical_covariance(samples: &[Vec<f64>]) -> Matrix {
    let n = samples[0].len();
    let count = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut cov = Matrix::zeros(n, n);
    for s in samples {
        for i in 0..n {
            let ci = s[i] - mean[i];
            for j in 0..n {
                cov.set(i, j, cov.get(i, j) + ci * (s[j] - mean[j]));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            cov.set(i, j, cov.get(i, j) / count);
        }
    }
    cov
}

#[test]
fn transformation_transports_covariance() {
    // 10k draws from N(0, B) pushed through L_Y⁻¹ L_X land on covariance A
    // within 10% relative Frobenius error.
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A4F01);
    let n = 16;
    let cov_b = random_spd(n, &mut rng);
    let cov_a = random_spd(n, &mut rng);
    let from = whitening_operator(&model_from_cov(cov_b.clone(), vec![0.0; n], 0)).unwrap();
    let to = whitening_operator(&model_from_cov(cov_a.clone(), vec![0.0; n], 1)).unwrap();

    let samples = gaussian_samples(&cov_b, 10_000, &mut rng);
    let moved: Vec<Vec<f64>> = samples
        .iter()
        .map(|x| transform_pattern(x, &from, &to).unwrap())
        .collect();
    let emp = empirical_covariance(&moved);

    let mut diff = emp.clone();
    for i in 0..n {
        for j in 0..n {
            diff.set(i, j, emp.get(i, j) - cov_a.get(i, j));
        }
    }
    let rel = diff.frobenius_norm() / cov_a.frobenius_norm();
    assert!(rel < 0.10, "transport error {rel:.4}");
}

#[test]
fn noise_generation_transports_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A4F02);
    let n = 16;
    let cov_a = random_spd(n, &mut rng);
    let to = whitening_operator(&model_from_cov(cov_a.clone(), vec![0.0; n], 0)).unwrap();

    let outputs: Vec<Vec<f64>> = (0..10_000)
        .map(|_| {
            let p: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            matpencil::generate_from_noise(&p, &to).unwrap()
        })
        .collect();
    let emp = empirical_covariance(&outputs);
    let mut diff = emp.clone();
    for i in 0..n {
        for j in 0..n {
            diff.set(i, j, emp.get(i, j) - cov_a.get(i, j));
        }
    }
    let rel = diff.frobenius_norm() / cov_a.frobenius_norm();
    assert!(rel < 0.10, "noise transport error {rel:.4}");
}

#[test]
fn double_transform_returns_home() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A4F03);
    let n = 8;
    let op_x = whitening_operator(&model_from_cov(
        random_spd(n, &mut rng),
        vec![0.5; n],
        0,
    ))
    .unwrap();
    let op_y = whitening_operator(&model_from_cov(
        random_spd(n, &mut rng),
        vec![-0.25; n],
        1,
    ))
    .unwrap();
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let there = transform_pattern(&x, &op_x, &op_y).unwrap();
        let back = transform_pattern(&there, &op_y, &op_x).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
