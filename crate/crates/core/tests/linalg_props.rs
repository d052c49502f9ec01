use std::f64::consts::PI;

use gramdiff::linalg::{dft2, hermitian_eig, idft2};
use gramdiff::rng::{complex_normal_matrix, stream};
use gramdiff::{Complex64, ComplexMatrix};
use proptest::prelude::*;

/// Direct double sum, independent of the matrix-product implementation.
fn naive_dft2(h: &ComplexMatrix) -> ComplexMatrix {
    let (nr, nt) = h.shape();
    let norm = 1.0 / ((nr * nt) as f64).sqrt();
    ComplexMatrix::from_fn(nr, nt, |p, q| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nr {
            for j in 0..nt {
                let angle = -2.0 * PI * ((p * i) as f64 / nr as f64 + (q * j) as f64 / nt as f64);
                acc += h[(i, j)] * Complex64::from_polar(1.0, angle);
            }
        }
        acc * norm
    })
}

fn random(seed: u64, rows: usize, cols: usize) -> ComplexMatrix {
    complex_normal_matrix(&mut stream(seed, &[]), rows, cols, 1.0)
}

proptest! {
    #[test]
    fn parseval_and_round_trip(seed in any::<u64>(), rows in 1usize..=64, cols in 1usize..=16) {
        let h = random(seed, rows, cols);
        let a = dft2(&h);
        prop_assert!((a.fro_norm() - h.fro_norm()).abs() <= 1e-10 * h.fro_norm());
        prop_assert!(idft2(&a).max_abs_diff(&h) <= 1e-10);
    }

    #[test]
    fn matches_direct_sum(seed in any::<u64>(), rows in 1usize..=12, cols in 1usize..=6) {
        let h = random(seed, rows, cols);
        prop_assert!(dft2(&h).max_abs_diff(&naive_dft2(&h)) <= 1e-10);
    }

    #[test]
    fn dft2_is_linear(seed in any::<u64>(), a in -3.0f64..3.0) {
        let x = random(seed, 8, 4);
        let y = random(seed ^ 1, 8, 4);
        let mut lhs_in = x.clone();
        lhs_in.axpy(a, &y);
        let mut rhs = dft2(&x);
        rhs.axpy(a, &dft2(&y));
        prop_assert!(dft2(&lhs_in).max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn eig_reconstructs(seed in any::<u64>(), n in 1usize..=16, rank in 1usize..=16) {
        let a = random(seed, n, rank.min(n)).gram();
        let eig = hermitian_eig(&a).unwrap();
        let scale = a.fro_norm().max(1.0);
        prop_assert!(eig.reconstruct().max_abs_diff(&a) <= 1e-10 * scale);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1] - 1e-10 * scale));
        prop_assert!(eig.min_eigenvalue() >= -1e-10 * scale);
        let v = &eig.eigenvectors;
        let vhv = v.adjoint().matmul(v).unwrap();
        prop_assert!(vhv.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-10);
        let trace: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((trace - a.trace().re).abs() <= 1e-10 * scale);
    }
}

#[test]
fn eig_of_diagonal_is_sorted_diagonal() {
    let d = ComplexMatrix::diag_real(&[1.0, 4.0, 2.0]);
    let eig = hermitian_eig(&d).unwrap();
    assert_eq!(eig.eigenvalues, vec![4.0, 2.0, 1.0]);
}
