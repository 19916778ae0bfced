use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Pivots below this fraction of the largest entry are treated as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Row-pivoted LU factorization `P A = L U`, packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.ensure_square()?;
        let scale = a.max_abs();
        if scale == 0.0 {
            return Err(Error::Singular { step: 0, pivot: 0.0 });
        }
        let tiny = PIVOT_THRESHOLD * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot_abs) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs <= tiny {
                return Err(Error::Singular { step: k + 1, pivot: pivot_abs });
            }
            if p != k {
                perm.swap(p, k);
                let data = lu.as_mut_slice();
                for j in 0..n {
                    data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[(k, k)];
            let (upper, lower) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for row in lower.chunks_exact_mut(n) {
                if row[k] == ZERO {
                    continue;
                }
                let l = row[k] / pivot;
                row[k] = l;
                for (x, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn order(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A X = B` for all columns of `B`.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.order();
        if b.rows() != n {
            return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, expected {n}", b.rows())));
        }
        let p = b.cols();
        let mut x = ComplexMatrix::zeros(n, p);
        for (i, &src) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(src));
        }
        let data = x.as_mut_slice();
        // forward substitution with unit lower triangle
        for i in 0..n {
            let (done, rest) = data.split_at_mut(i * p);
            let xi = &mut rest[..p];
            for k in 0..i {
                let l = self.lu[(i, k)];
                if l == ZERO {
                    continue;
                }
                for (a, &b) in xi.iter_mut().zip(&done[k * p..(k + 1) * p]) {
                    *a -= l * b;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * p);
            let xi = &mut head[i * p..];
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                if u == ZERO {
                    continue;
                }
                for (a, &b) in xi.iter_mut().zip(&tail[(k - i - 1) * p..(k - i) * p]) {
                    *a -= u * b;
                }
            }
            let inv = 1.0 / self.lu[(i, i)];
            for a in xi.iter_mut() {
                *a *= inv;
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        let rhs = ComplexMatrix::new(b.len(), 1, b.to_vec())?;
        Ok(self.solve(&rhs)?.into_vec())
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve(&ComplexMatrix::identity(self.order()))
    }

    /// `ln |det A|`.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.order()).map(|i| self.lu[(i, i)].norm().ln()).sum()
    }
}

/// Solves `A X = B` by row-pivoted elimination.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    LuFactorization::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_diagonal() {
        let b = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64 - 1.0));
        assert_eq!(solve_linear(&ComplexMatrix::identity(3), &b).unwrap(), b);
        let x = solve_linear(&ComplexMatrix::from_real_diag(&[2.0, 4.0]), &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(x, ComplexMatrix::from_real_diag(&[0.5, 0.25]));
    }

    #[test]
    fn random_well_conditioned_residual() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 10;
        let a = ComplexMatrix::from_fn(n, n, |i, j| {
            let base = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if i == j {
                base + C64::new(6.0, 0.0)
            } else {
                base
            }
        });
        let b = ComplexMatrix::from_fn(n, 3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let x = solve_linear(&a, &b).unwrap();
        let r = &(&a * &x) - &b;
        assert!(r.frobenius_norm() / b.frobenius_norm() <= 1e-12);
    }

    #[test]
    fn pivoting_needed() {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let x = solve_linear(&a, &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(x, a);
    }

    #[test]
    fn singular_detected() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(solve_linear(&a, &ComplexMatrix::identity(2)), Err(Error::Singular { .. })));
        assert!(matches!(LuFactorization::new(&ComplexMatrix::zeros(3, 3)), Err(Error::Singular { .. })));
    }
}
