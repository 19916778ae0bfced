//! Extreme eigenpairs of Hermitian matrices.
//!
//! Householder reduction to a real symmetric tridiagonal matrix, Sturm-sequence
//! bisection for the extreme eigenvalues, then inverse iteration on the
//! tridiagonal for the eigenvectors. One reduction serves both ends of the
//! spectrum, which the field-of-values sweep exploits.

use super::{vector, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Relative Hermitian defect tolerated on input.
const HERMITIAN_TOL: f64 = 1e-12;
/// Required eigenvector residual relative to `|H|`.
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ExtremeEigenpairs {
    pub min_value: f64,
    pub min_vector: Vec<C64>,
    pub max_value: f64,
    pub max_vector: Vec<C64>,
}

/// Largest eigenvalue of a Hermitian matrix with a unit eigenvector.
pub fn hermitian_extreme_eigenpair(h: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    let pairs = hermitian_extreme_eigenpairs(h)?;
    Ok((pairs.max_value, pairs.max_vector))
}

/// Smallest and largest eigenpairs of a Hermitian matrix.
pub fn hermitian_extreme_eigenpairs(h: &ComplexMatrix) -> Result<ExtremeEigenpairs> {
    let n = h.ensure_square()?;
    let scale = h.frobenius_norm();
    let defect = (h - &h.adjoint()).frobenius_norm();
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { defect });
    }
    if scale == 0.0 {
        let mut e1 = vec![ZERO; n];
        e1[0] = ONE;
        return Ok(ExtremeEigenpairs { min_value: 0.0, min_vector: e1.clone(), max_value: 0.0, max_vector: e1 });
    }

    let reduced = Tridiagonal::reduce(h);
    let lo = reduced.bisect(0);
    let hi = reduced.bisect(n - 1);
    let norm = lo.abs().max(hi.abs());

    let max_vector = reduced.eigenvector(h, hi, norm)?;
    let min_vector = reduced.eigenvector(h, lo, norm)?;
    Ok(ExtremeEigenpairs { min_value: lo, min_vector, max_value: hi, max_vector })
}

/// Spectral norm via the largest eigenvalue of the smaller Gram matrix.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    let gram = if a.rows() >= a.cols() { a.adjoint().matmul(a) } else { a.matmul(&a.adjoint()) }
        .expect("shapes agree by construction");
    // symmetrize to remove rounding asymmetry
    let m = gram.rows();
    let gram = ComplexMatrix::from_fn(m, m, |i, j| if i >= j { gram[(i, j)] } else { gram[(j, i)].conj() });
    if gram.max_abs() == 0.0 {
        return 0.0;
    }
    let reduced = Tridiagonal::reduce(&gram);
    reduced.bisect(m - 1).max(0.0).sqrt()
}

struct Reflector {
    offset: usize,
    u: Vec<C64>,
    tau: f64,
}

/// `H = (Q D) T (Q D)^*` with `T` real symmetric tridiagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    phases: Vec<C64>,
    reflectors: Vec<Reflector>,
}

impl Tridiagonal {
    fn reduce(h: &ComplexMatrix) -> Self {
        let n = h.rows();
        let mut a = h.clone();
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
            let xnorm = vector::norm(&x);
            if xnorm == 0.0 {
                continue;
            }
            let phase = if x[0] == ZERO { ONE } else { x[0] / x[0].norm() };
            let alpha = -phase * xnorm;
            let mut u = x;
            u[0] -= alpha;
            let tau = 2.0 / u.iter().map(|z| z.norm_sqr()).sum::<f64>();

            // p = tau * B u over the trailing block B
            let mut p = vec![ZERO; m];
            for (r, pr) in p.iter_mut().enumerate() {
                let row = &a.row(k + 1 + r)[k + 1..];
                *pr = row.iter().zip(&u).fold(ZERO, |acc, (&b, &ui)| acc + b * ui) * tau;
            }
            let kappa = vector::dot(&u, &p) * (0.5 * tau);
            let w: Vec<C64> = p.iter().zip(&u).map(|(&pi, &ui)| pi - kappa * ui).collect();
            for r in 0..m {
                let (ur, wr) = (u[r], w[r]);
                let row = &mut a.row_mut(k + 1 + r)[k + 1..];
                for (c, b) in row.iter_mut().enumerate() {
                    *b -= ur * w[c].conj() + wr * u[c].conj();
                }
            }
            a[(k + 1, k)] = alpha;
            a[(k, k + 1)] = alpha.conj();
            for i in k + 2..n {
                a[(i, k)] = ZERO;
                a[(k, i)] = ZERO;
            }
            reflectors.push(Reflector { offset: k + 1, u, tau });
        }

        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        let mut phases = Vec::with_capacity(n);
        phases.push(ONE);
        for i in 0..n.saturating_sub(1) {
            let e = a[(i + 1, i)];
            let mag = e.norm();
            let delta = phases[i];
            phases.push(if mag == 0.0 { delta } else { delta * (e / mag) });
            off.push(mag);
        }
        Self { diag, off, phases, reflectors }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly less than `x`.
    fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    fn bisect(&self, k: usize) -> f64 {
        let n = self.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1] } else { 0.0 } + if i + 1 < n { self.off[i] } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let pad = f64::EPSILON * lo.abs().max(hi.abs()) * n as f64 + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration at `lambda`, back-transformed and checked against `h`.
    fn eigenvector(&self, h: &ComplexMatrix, lambda: f64, norm: f64) -> Result<Vec<C64>> {
        let n = self.len();
        let max_iter = 10 * n.max(1);
        let factor = ShiftedTridiagonalLu::new(&self.diag, &self.off, lambda, norm);
        // deterministic, non-degenerate start
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64 * 1.618_033_988_75).fract() - 0.5)).collect();
        for iter in 0..max_iter {
            factor.solve(&mut y);
            let s = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !s.is_finite() || s == 0.0 {
                y = (0..n).map(|i| if (i + iter) % 3 == 0 { 1.0 } else { 0.5 }).collect();
                continue;
            }
            y.iter_mut().for_each(|v| *v /= s);
            if iter < 2 {
                continue;
            }
            let u = self.back_transform(&y);
            let hu = h.matvec(&u);
            let res = hu.iter().zip(&u).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
            if res <= RESIDUAL_TOL * norm {
                return Ok(u);
            }
            if iter >= 12 {
                break;
            }
        }
        Err(Error::NoConvergence { what: "Hermitian inverse iteration", iterations: max_iter.min(13) })
    }

    fn back_transform(&self, y: &[f64]) -> Vec<C64> {
        let mut z: Vec<C64> = y.iter().zip(&self.phases).map(|(&v, &d)| d * v).collect();
        for r in self.reflectors.iter().rev() {
            let tail = &mut z[r.offset..];
            let coef = vector::dot(&r.u, tail) * r.tau;
            vector::axpy(-coef, &r.u, tail);
        }
        let s = vector::norm(&z);
        z.iter_mut().for_each(|v| *v /= s);
        z
    }
}

/// Pivoted LU of `T - lambda I` for a real symmetric tridiagonal `T`.
struct ShiftedTridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedTridiagonalLu {
    fn new(diag: &[f64], off: &[f64], lambda: f64, norm: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - lambda).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.du2[i] * b[i + 2];
            }
            b[i] = v / self.d[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&g + &g.adjoint()).scale_real(0.5)
    }

    #[test]
    fn diagonal_example() {
        let (lambda, u) = hermitian_extreme_eigenpair(&ComplexMatrix::from_real_diag(&[1.0, 3.0])).unwrap();
        assert!((lambda - 3.0).abs() < 1e-14);
        assert!((u[1].norm() - 1.0).abs() < 1e-12 && u[0].norm() < 1e-12);
    }

    #[test]
    fn swap_example() {
        let h = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let (lambda, u) = hermitian_extreme_eigenpair(&h).unwrap();
        assert!((lambda - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[0].norm() - s).abs() < 1e-12 && (u[1].norm() - s).abs() < 1e-12);
        assert!((u[0] - u[1]).norm() < 1e-12, "components share a phase");
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_extreme_eigenpair(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn residual_contract_on_random_and_clustered() {
        for (seed, n) in [(1u64, 8usize), (2, 31), (3, 64)] {
            let h = random_hermitian(n, seed);
            let pairs = hermitian_extreme_eigenpairs(&h).unwrap();
            let norm = pairs.max_value.abs().max(pairs.min_value.abs());
            for (lambda, u) in [(pairs.max_value, &pairs.max_vector), (pairs.min_value, &pairs.min_vector)] {
                let r: Vec<C64> = h.matvec(u).iter().zip(u).map(|(a, b)| a - b * lambda).collect();
                assert!(vector::norm(&r) <= 1e-10 * norm);
                assert!((vector::norm(u) - 1.0).abs() < 1e-12);
            }
        }
        // tightly clustered spectrum of a Hermitian Toeplitz matrix
        let n = 150;
        let h = ComplexMatrix::from_fn(n, n, |i, j| match j as isize - i as isize {
            0 => C64::new(2.0, 0.0),
            1 => C64::new(0.0, 1.0),
            -1 => C64::new(0.0, -1.0),
            _ => ZERO,
        });
        let (lambda, u) = hermitian_extreme_eigenpair(&h).unwrap();
        let exact = 2.0 + 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lambda - exact).abs() < 1e-12);
        let r: Vec<C64> = h.matvec(&u).iter().zip(&u).map(|(a, b)| a - b * lambda).collect();
        assert!(vector::norm(&r) <= 1e-10 * 4.0);
    }

    #[test]
    fn largest_eigenvalue_dominates_rayleigh_samples() {
        let h = random_hermitian(8, 42);
        let (lambda, _) = hermitian_extreme_eigenpair(&h).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let v: Vec<C64> =
                (0..8).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let q = vector::dot(&v, &h.matvec(&v)).re / vector::dot(&v, &v).re;
            best = best.max(q);
        }
        assert!(best <= lambda + 1e-8, "sampled {best} above {lambda}");
        // power refinement from the best sample direction gets within 1e-8 from below
        let pairs = hermitian_extreme_eigenpairs(&h).unwrap();
        let q = vector::dot(&pairs.max_vector, &h.matvec(&pairs.max_vector)).re;
        assert!((q - lambda).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&ComplexMatrix::identity(4)) - 1.0).abs() < 1e-14);
        let d = ComplexMatrix::from_diag(&[C64::new(3.0, 0.0), C64::new(0.0, -4.0)]);
        assert!((spectral_norm(&d) - 4.0).abs() < 1e-13);
        let j = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((spectral_norm(&j) - 1.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
    }
}
