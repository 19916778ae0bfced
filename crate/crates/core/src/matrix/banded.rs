use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Square matrix with declared upper bandwidth `beta` and lower bandwidth `gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix {
    data: ComplexMatrix,
    beta: usize,
    gamma: usize,
}

impl BandedMatrix {
    /// Wraps `data`, checking that every entry outside the declared band is zero.
    pub fn new(data: ComplexMatrix, beta: usize, gamma: usize) -> Result<Self> {
        let n = data.ensure_square()?;
        for k in 0..n {
            for l in 0..n {
                let outside = (l > k && l - k > beta) || (k > l && k - l > gamma);
                if outside && data[(k, l)] != ZERO {
                    return Err(Error::invalid(format!(
                        "entry ({}, {}) lies outside the declared band (beta={beta}, gamma={gamma})",
                        k + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(Self { data, beta, gamma })
    }

    /// Wraps `data` with bandwidths read off its nonzero pattern.
    pub fn detect(data: ComplexMatrix) -> Result<Self> {
        let (beta, gamma) = bandwidths(&data)?;
        Ok(Self { data, beta, gamma })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.data
    }

    pub fn order(&self) -> usize {
        self.data.rows()
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// Band distance of the 1-based entry `(k, l)` under this matrix's bandwidths.
    pub fn distance(&self, k: usize, l: usize) -> Result<u64> {
        band_distance(k, l, self.beta, self.gamma)
    }
}

/// Largest super- and sub-diagonal offsets holding a nonzero entry.
pub fn bandwidths(a: &ComplexMatrix) -> Result<(usize, usize)> {
    let n = a.ensure_square()?;
    let (mut beta, mut gamma) = (0, 0);
    for k in 0..n {
        for l in 0..n {
            if a[(k, l)] != ZERO {
                if l > k {
                    beta = beta.max(l - k);
                } else {
                    gamma = gamma.max(k - l);
                }
            }
        }
    }
    Ok((beta, gamma))
}

/// Constant-diagonal matrix recipe. `stencil[diag_index]` sits on the main
/// diagonal; earlier values go below it, later values above it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzSpec {
    pub stencil: Vec<C64>,
    pub diag_index: usize,
    pub n: usize,
}

impl ToeplitzSpec {
    pub fn new(stencil: Vec<C64>, diag_index: usize, n: usize) -> Self {
        Self { stencil, diag_index, n }
    }

    pub fn beta(&self) -> usize {
        self.stencil.len() - 1 - self.diag_index
    }

    pub fn gamma(&self) -> usize {
        self.diag_index
    }
}

pub fn toeplitz_build(spec: &ToeplitzSpec) -> Result<BandedMatrix> {
    if spec.stencil.is_empty() {
        return Err(Error::invalid("empty Toeplitz stencil"));
    }
    if spec.diag_index >= spec.stencil.len() {
        return Err(Error::invalid(format!(
            "diagonal index {} out of range for a stencil of length {}",
            spec.diag_index,
            spec.stencil.len()
        )));
    }
    if spec.n < spec.stencil.len() {
        return Err(Error::invalid(format!(
            "matrix order {} is smaller than the stencil length {}",
            spec.n,
            spec.stencil.len()
        )));
    }
    if let Some(z) = spec.stencil.iter().find(|z| !z.is_finite()) {
        return Err(Error::NonFinite(format!("stencil value {z}")));
    }
    let n = spec.n;
    let d = spec.diag_index as isize;
    let data = ComplexMatrix::from_fn(n, n, |k, l| {
        let idx = d + (l as isize - k as isize);
        if idx >= 0 && (idx as usize) < spec.stencil.len() {
            spec.stencil[idx as usize]
        } else {
            ZERO
        }
    });
    Ok(BandedMatrix { data, beta: spec.beta(), gamma: spec.gamma() })
}

/// Smallest power of a `(beta, gamma)`-banded matrix whose 1-based `(k, l)`
/// entry can be nonzero.
pub fn band_distance(k: usize, l: usize, beta: usize, gamma: usize) -> Result<u64> {
    if k == l {
        return Err(Error::invalid("band distance is undefined on the diagonal"));
    }
    if k == 0 || l == 0 {
        return Err(Error::invalid("indices are 1-based"));
    }
    if beta == 0 || gamma == 0 {
        return Err(Error::invalid("both bandwidths must be at least 1"));
    }
    let xi = if k < l { (l - k).div_ceil(beta) } else { (k - l).div_ceil(gamma) };
    Ok(xi as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn toeplitz_examples() {
        let a = toeplitz_build(&ToeplitzSpec::new(vec![c(0.0, -1.0), c(0.0, 1.0), c(-2.0, 0.0)], 1, 3)).unwrap();
        let m = a.matrix();
        assert_eq!(m[(0, 0)], c(0.0, 1.0));
        assert_eq!(m[(0, 1)], c(-2.0, 0.0));
        assert_eq!(m[(1, 0)], c(0.0, -1.0));
        assert_eq!(m[(0, 2)], ZERO);
        assert_eq!((a.beta(), a.gamma()), (1, 1));

        let five = toeplitz_build(&ToeplitzSpec::new(vec![c(5.0, 0.0)], 0, 2)).unwrap();
        assert_eq!(five.matrix(), &ComplexMatrix::identity(2).scale_real(5.0));

        let t = toeplitz_build(&ToeplitzSpec::new(vec![c(1.0, 0.0), c(5.0, 0.0), c(3.0, 0.0)], 1, 4)).unwrap();
        assert_eq!((t.beta(), t.gamma()), (1, 1));
        assert_eq!(t.matrix()[(1, 2)], c(3.0, 0.0));
    }

    #[test]
    fn toeplitz_errors() {
        assert!(toeplitz_build(&ToeplitzSpec::new(vec![], 0, 3)).is_err());
        assert!(toeplitz_build(&ToeplitzSpec::new(vec![ZERO, ZERO], 2, 3)).is_err());
        assert!(toeplitz_build(&ToeplitzSpec::new(vec![ZERO, ZERO, ZERO], 1, 2)).is_err());
    }

    #[test]
    fn band_distance_examples() {
        assert_eq!(band_distance(1, 5, 2, 1).unwrap(), 2);
        assert_eq!(band_distance(7, 3, 2, 1).unwrap(), 4);
        assert_eq!(band_distance(1, 2, 1, 1).unwrap(), 1);
        assert!(band_distance(3, 3, 1, 1).is_err());
    }

    #[test]
    fn declared_band_is_enforced() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| if j == i + 2 { ONE_ } else { ZERO });
        assert!(BandedMatrix::new(m.clone(), 1, 1).is_err());
        let b = BandedMatrix::detect(m).unwrap();
        assert_eq!((b.beta(), b.gamma()), (2, 0));
    }

    const ONE_: C64 = C64::new(1.0, 0.0);

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn toeplitz_band_scan_recovers_declared(stencil in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..6), d_frac in 0.0f64..1.0) {
            let stencil: Vec<C64> = stencil.into_iter().map(|(re, im)| c(re + 0.5 * re.signum() + 0.01, im)).collect();
            let d = ((stencil.len() as f64 - 1.0) * d_frac).round() as usize;
            let spec = ToeplitzSpec::new(stencil, d, 12);
            let a = toeplitz_build(&spec).unwrap();
            prop_assert_eq!(bandwidths(a.matrix()).unwrap(), (spec.beta(), spec.gamma()));
        }

        #[test]
        fn powers_vanish_below_band_distance(seed in any::<u64>(), beta in 1usize..4, gamma in 1usize..4) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 20;
            let m = ComplexMatrix::from_fn(n, n, |k, l| {
                if (l > k && l - k > beta) || (k > l && k - l > gamma) {
                    ZERO
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }
            });
            let a = BandedMatrix::new(m, beta, gamma).unwrap();
            let mut power = ComplexMatrix::identity(n);
            for p in 0..=6u64 {
                for k in 1..=n {
                    for l in 1..=n {
                        if k != l && p < a.distance(k, l).unwrap() {
                            prop_assert_eq!(power[(k - 1, l - 1)], ZERO);
                        }
                    }
                }
                power = power.matmul(a.matrix()).unwrap();
            }
        }
    }
}
