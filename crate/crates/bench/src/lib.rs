//! Fixtures shared by the kernel benchmarks in `benches/`.

use faber_decay::{toeplitz_build, ComplexMatrix, ToeplitzSpec, C64};

/// `Toeplitz(-i, [i], -2)` of order `n`, the tridiagonal exponential example.
pub fn tridiagonal(n: usize) -> ComplexMatrix {
    let spec = ToeplitzSpec::new(vec![C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(-2.0, 0.0)], 1, n);
    toeplitz_build(&spec).expect("valid stencil").into_matrix()
}

/// `Toeplitz(1, [2], 0.1, -1)` of order `n`, the Krylov example.
pub fn krylov_example(n: usize) -> ComplexMatrix {
    let spec =
        ToeplitzSpec::new(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.1, 0.0), C64::new(-1.0, 0.0)], 1, n);
    toeplitz_build(&spec).expect("valid stencil").into_matrix()
}

pub fn ones(n: usize) -> Vec<C64> {
    vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n]
}
