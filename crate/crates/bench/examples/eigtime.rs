use std::time::Instant;

use matpencil::sym_eig;
use matpencil_bench::{random_symmetric, rng};

fn main() {
    for n in [256usize, 512, 784] {
        let m = random_symmetric(n, &mut rng(1));
        let t = Instant::now();
        let eig = sym_eig(&m, 1e-9).unwrap();
        println!(
            "sym_eig n={n}: {:.2}s (lambda_max {:.3})",
            t.elapsed().as_secs_f64(),
            eig.eigenvalues[0]
        );
    }
}
