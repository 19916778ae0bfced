use super::{ComplexMatrix, ZERO};
use crate::error::Result;

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * p, a.cols() * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// Kronecker sum `A ⊗ I + I ⊗ B` of two square matrices.
pub fn kron_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let na = a.ensure_square()?;
    let nb = b.ensure_square()?;
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let (i1, i2) = (i / nb, i % nb);
        for j in 0..n {
            let (j1, j2) = (j / nb, j % nb);
            let mut z = ZERO;
            if i2 == j2 {
                z += a[(i1, j1)];
            }
            if i1 == j1 {
                z += b[(i2, j2)];
            }
            out[(i, j)] = z;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;
    use rand::{Rng, SeedableRng};

    fn random(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn diagonal_kron_sum() {
        let d = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let s = kron_sum(&d, &d).unwrap();
        assert_eq!(s, ComplexMatrix::from_real_diag(&[2.0, 3.0, 3.0, 4.0]));
    }

    #[test]
    fn zero_summand_gives_identity_kron() {
        let b = random(3, 7);
        let s = kron_sum(&ComplexMatrix::zeros(2, 2), &b).unwrap();
        assert_eq!(s, kron(&ComplexMatrix::identity(2), &b));
    }

    #[test]
    fn matches_entrywise_lexicographic_formula() {
        let (a, b) = (random(3, 1), random(3, 2));
        let s = kron_sum(&a, &b).unwrap();
        let n = 3;
        // 1-based: row = (k2-1) n + k1, col = (l2-1) n + l1
        for k2 in 1..=n {
            for k1 in 1..=n {
                for l2 in 1..=n {
                    for l1 in 1..=n {
                        let mut expected = C64::new(0.0, 0.0);
                        if k1 == l1 {
                            expected += a[(k2 - 1, l2 - 1)];
                        }
                        if k2 == l2 {
                            expected += b[(k1 - 1, l1 - 1)];
                        }
                        let got = s[((k2 - 1) * n + k1 - 1, (l2 - 1) * n + l1 - 1)];
                        assert_eq!(got, expected);
                    }
                }
            }
        }
        let explicit = &kron(&a, &ComplexMatrix::identity(3)) + &kron(&ComplexMatrix::identity(3), &b);
        assert!((&explicit - &s).max_abs() == 0.0);
    }

    #[test]
    fn non_square_rejected() {
        assert!(kron_sum(&ComplexMatrix::zeros(2, 3), &ComplexMatrix::identity(2)).is_err());
    }
}
