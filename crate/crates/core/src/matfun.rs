//! Dense reference evaluation of the matrix functions the bounds are checked against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, LuFactorization, C64, ONE};
use crate::regions::Region;

/// Scaled 1-norm threshold for the degree-13 Pade approximant.
pub const EXPM_THETA: f64 = 5.4;
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub const SQRT_TOL: f64 = 1e-13;
pub const SQRT_MAX_ITER: usize = 100;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::NonFinite("expm input".into()));
    }
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let squarings = if norm > EXPM_THETA { (norm / EXPM_THETA).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(Error::Domain(format!("expm: norm {norm:.3e} is out of range")));
    }
    let x = a.scale_real(0.5f64.powi(squarings));
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let ident = ComplexMatrix::identity(n);
    let lin = |c6: usize, c4: usize, c2: usize| &x6.combine(b(c6), &x4, b(c4)) + &x2.scale(b(c2));

    let u_high = &x6 * &lin(13, 11, 9);
    let mut u_inner = &u_high + &lin(7, 5, 3);
    u_inner += &ident.scale(b(1));
    let u = &x * &u_inner;
    let v_high = &x6 * &lin(12, 10, 8);
    let mut v = &v_high + &lin(6, 4, 2);
    v += &ident.scale(b(0));

    let lu = LuFactorization::new(&(&v - &u))?;
    let mut r = lu.solve(&(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::NonFinite(format!("expm overflowed (norm {norm:.3e})")));
    }
    Ok(r)
}

/// Principal square root and inverse square root by the scaled product-form
/// Denman-Beavers iteration.
///
/// Divergence or a singular iterate means the spectrum touches the closed
/// negative real axis, where the principal branch is undefined.
pub fn sqrtm_pair(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = a.ensure_square()?;
    let ident = ComplexMatrix::identity(n);
    let mut m = a.clone();
    let mut y = a.clone();
    let mut z = ident.clone();
    let mut scaling = true;
    let mut last_step = f64::INFINITY;
    for _ in 0..SQRT_MAX_ITER {
        let lu = LuFactorization::new(&m)?;
        let m_inv = lu.inverse()?;
        let mu = if scaling { (-lu.log_abs_det() / (2.0 * n as f64)).exp() } else { 1.0 };
        let mu2 = mu * mu;
        let factor = m_inv.scale_real(1.0 / mu2).add_identity(ONE).scale_real(0.5 * mu);
        let y_next = &y * &factor;
        z = &z * &factor;
        m = m.combine(C64::new(0.25 * mu2, 0.0), &m_inv, C64::new(0.25 / mu2, 0.0)).add_identity(C64::new(0.5, 0.0));
        if !y_next.is_finite() || !z.is_finite() {
            return Err(Error::domain("square root iteration diverged"));
        }
        let step = (&y_next - &y).frobenius_norm();
        let size = y_next.frobenius_norm();
        y = y_next;
        if scaling && (&m - &ident).frobenius_norm() < 1e-2 {
            scaling = false;
        }
        // the second test catches stagnation at the rounding floor
        if step <= SQRT_TOL * size || (!scaling && step >= last_step && step <= 1e-8 * size) {
            return Ok((y, z));
        }
        last_step = step;
    }
    Err(Error::NoConvergence { what: "square root iteration", iterations: SQRT_MAX_ITER })
}

/// The matrix functions with a dense reference evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFunctionKind {
    /// `e^z`
    Exp,
    /// `e^{-z}`
    NegExp,
    /// `z^{-1/2}`, principal branch
    InvSqrt,
    /// `e^{-sqrt z}`
    ExpNegSqrt,
    /// `(1 - e^{-z})/z`
    Phi1,
}

impl MatrixFunctionKind {
    pub const ALL: [Self; 5] = [Self::Exp, Self::NegExp, Self::InvSqrt, Self::ExpNegSqrt, Self::Phi1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::NegExp => "negexp",
            Self::InvSqrt => "invsqrt",
            Self::ExpNegSqrt => "expsqrt",
            Self::Phi1 => "phi1",
        }
    }

    /// Scalar value at `z`.
    pub fn eval_scalar(self, z: C64) -> C64 {
        match self {
            Self::Exp => z.exp(),
            Self::NegExp => (-z).exp(),
            Self::InvSqrt => z.sqrt().inv(),
            Self::ExpNegSqrt => (-z.sqrt()).exp(),
            Self::Phi1 => phi1_scalar(z),
        }
    }

    /// Point where the function stops being analytic, if any.
    pub fn singularity(self) -> Option<C64> {
        match self {
            Self::InvSqrt | Self::ExpNegSqrt => Some(C64::new(0.0, 0.0)),
            Self::Exp | Self::NegExp | Self::Phi1 => None,
        }
    }

    /// Checks that a region enclosing `W(A)` satisfies the domain condition.
    pub fn check_domain(self, region: &Region) -> Result<()> {
        let (lo, _) = match region {
            Region::Ellipse(e) => e.real_range(),
            Region::Disk(d) => (d.center.re - d.radius, d.center.re + d.radius),
        };
        match self {
            Self::InvSqrt | Self::ExpNegSqrt if lo <= 0.0 => {
                Err(Error::domain(format!("{} needs W(A) in the open right half-plane", self.name())))
            }
            Self::Phi1 if region.contains(C64::new(0.0, 0.0), 0.0) => Err(Error::domain("phi1 needs 0 outside W(A)")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MatrixFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            Error::invalid(format!("unknown function '{s}' (expected exp, negexp, invsqrt, expsqrt or phi1)"))
        })
    }
}

/// `(1 - e^{-z})/z`, by its Taylor series near the removable singularity.
fn phi1_scalar(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // sum_k (-z)^k/(k+1)!; 12 terms leave a remainder below 1e-17
        let mut term = ONE;
        let mut sum = ONE;
        for k in 1..12 {
            term = term * (-z) / (k + 1) as f64;
            sum += term;
        }
        sum
    } else {
        (ONE - (-z).exp()) / z
    }
}

/// Dense evaluation of `f(A)`. Domain conditions on `W(A)` are the caller's
/// responsibility; violations show up as singular or divergent iterations.
pub fn eval_matfun(kind: MatrixFunctionKind, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    match kind {
        MatrixFunctionKind::Exp => expm(a),
        MatrixFunctionKind::NegExp => expm(&-a),
        MatrixFunctionKind::InvSqrt => Ok(sqrtm_pair(a)?.1),
        MatrixFunctionKind::ExpNegSqrt => expm(&-&sqrtm_pair(a)?.0),
        MatrixFunctionKind::Phi1 => {
            let rhs = &ComplexMatrix::identity(n) - &expm(&-a)?;
            LuFactorization::new(a)?.solve(&rhs)
        }
    }
}

/// `(row, |F[row, col]|)` for every row of a column; indices are 1-based.
pub fn column_magnitudes(f: &ComplexMatrix, col: usize) -> Result<Vec<(usize, f64)>> {
    if col == 0 || col > f.cols() {
        return Err(Error::invalid(format!("column {col} is outside 1..={}", f.cols())));
    }
    Ok((0..f.rows()).map(|i| (i + 1, f[(i, col - 1)].norm())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::faber::{faber_coefficients, DEFAULT_MAX_TERMS, DEFAULT_QUAD};
    use crate::matrix::{kron, kron_sum, toeplitz_build, ToeplitzSpec};
    use crate::regions::{fit_ellipse, fov_boundary, DEFAULT_ANGLES, DEFAULT_SAFETY};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
    }

    fn rel_diff(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
        (x - y).frobenius_norm() / y.frobenius_norm().max(1e-300)
    }

    #[test]
    fn expm_trivial_cases() {
        assert_eq!(expm(&ComplexMatrix::zeros(3, 3)).unwrap(), ComplexMatrix::identity(3));
        let e = expm(&ComplexMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
        assert!((e[(0, 0)].re - 1f64.exp()).abs() < 1e-13 * 1f64.exp());
        assert!((e[(1, 1)].re - 2f64.exp()).abs() < 1e-13 * 2f64.exp());
        assert!(e[(0, 1)].norm() == 0.0 && e[(1, 0)].norm() == 0.0);
        // large norm goes through many squarings
        let e = expm(&ComplexMatrix::from_real_diag(&[30.0, -30.0])).unwrap();
        assert!((e[(0, 0)].re / 30f64.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expm_nilpotent_and_rotation() {
        let j = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let e = expm(&j.scale_real(7.0)).unwrap();
        assert!((e[(0, 1)].re - 7.0).abs() < 1e-12 && (e[(0, 0)].re - 1.0).abs() < 1e-14);
        let r = ComplexMatrix::from_real(2, 2, &[0.0, -3.0, 3.0, 0.0]).unwrap();
        let e = expm(&r).unwrap();
        assert!((e[(0, 0)].re - 3f64.cos()).abs() < 1e-13 && (e[(1, 0)].re - 3f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn expm_reports_overflow() {
        let a = ComplexMatrix::from_real_diag(&[1000.0]);
        assert!(matches!(expm(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn expm_of_kronecker_sum_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (a, b) = (random(4, 1.0, &mut rng), random(4, 1.0, &mut rng));
            let lhs = expm(&kron_sum(&a, &b).unwrap()).unwrap();
            let rhs = kron(&expm(&a).unwrap(), &expm(&b).unwrap());
            assert!(rel_diff(&lhs, &rhs) < 1e-10, "{}", rel_diff(&lhs, &rhs));
        }
    }

    #[test]
    fn expm_inverse_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [3, 10, 25] {
            let mut a = random(n, 1.0, &mut rng);
            a = a.scale_real(10.0 / crate::matrix::spectral_norm(&a));
            let prod = &expm(&a).unwrap() * &expm(&-&a).unwrap();
            assert!((&prod - &ComplexMatrix::identity(n)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn sqrt_examples() {
        let (s, si) = sqrtm_pair(&ComplexMatrix::identity(3).scale_real(4.0)).unwrap();
        assert!((&s - &ComplexMatrix::identity(3).scale_real(2.0)).max_abs() < 1e-14);
        assert!((&si - &ComplexMatrix::identity(3).scale_real(0.5)).max_abs() < 1e-14);
        let (s, _) = sqrtm_pair(&ComplexMatrix::from_real_diag(&[1.0, 9.0])).unwrap();
        assert!((s[(0, 0)].re - 1.0).abs() < 1e-13 && (s[(1, 1)].re - 3.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_residual_on_shifted_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = rand_distr::StandardNormal;
        for n in [5, 20, 60] {
            let a = ComplexMatrix::from_fn(n, n, |_, _| {
                let (x, y): (f64, f64) = (rng.sample(normal), rng.sample(normal));
                c(x, y) * 0.1
            })
            .add_identity(c(5.0, 0.0));
            let (s, si) = sqrtm_pair(&a).unwrap();
            let norm_a = crate::matrix::spectral_norm(&a);
            assert!(crate::matrix::spectral_norm(&(&(&s * &s) - &a)) <= 1e-10 * norm_a);
            let ident = ComplexMatrix::identity(n);
            assert!(crate::matrix::spectral_norm(&(&(&s * &si) - &ident)) <= 1e-10);
            assert!(crate::matrix::spectral_norm(&(&(&si * &s) - &ident)) <= 1e-10);
        }
    }

    #[test]
    fn sqrt_picks_principal_branch() {
        // normal input with eigenvalues spread over the right half-plane and near the cut
        let eig = [c(4.0, 0.0), c(0.1, 3.0), c(0.1, -3.0), c(-2.0, 0.5), c(1.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(5, 1.0, &mut rng).add_identity(c(3.0, 0.0));
        let x_inv = LuFactorization::new(&x).unwrap().inverse().unwrap();
        let a = &(&x * &ComplexMatrix::from_diag(&eig)) * &x_inv;
        let (s, _) = sqrtm_pair(&a).unwrap();
        let d = &(&x_inv * &s) * &x;
        for (i, &lam) in eig.iter().enumerate() {
            let root = d[(i, i)];
            assert!((root - lam.sqrt()).norm() < 1e-8, "{root} vs {}", lam.sqrt());
            assert!(root.arg() > -std::f64::consts::FRAC_PI_2 && root.arg() <= std::f64::consts::FRAC_PI_2);
        }
    }

    #[test]
    fn sqrt_fails_on_cut() {
        assert!(sqrtm_pair(&ComplexMatrix::from_real_diag(&[-1.0, 2.0])).is_err());
        assert!(sqrtm_pair(&ComplexMatrix::from_real_diag(&[0.0, 2.0])).is_err());
    }

    #[test]
    fn scalar_values() {
        let one = ComplexMatrix::identity(3);
        let p = eval_matfun(MatrixFunctionKind::Phi1, &one).unwrap();
        assert!((p[(1, 1)].re - (1.0 - (-1f64).exp())).abs() < 1e-13);
        assert!((p[(1, 1)].re - 0.632_121).abs() < 1e-6);
        let g = eval_matfun(MatrixFunctionKind::ExpNegSqrt, &one.scale_real(4.0)).unwrap();
        assert!((g[(2, 2)].re - (-2f64).exp()).abs() < 1e-14);
        let inv = eval_matfun(MatrixFunctionKind::InvSqrt, &one.scale_real(4.0)).unwrap();
        assert!((inv[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi1_scalar_is_smooth_across_series_switch() {
        for z in [c(0.0, 0.0), c(1e-12, 0.0), c(0.0999, 0.0), c(0.1001, 0.0), c(0.05, 0.08)] {
            let series = phi1_scalar(z);
            let direct = if z.norm() > 1e-3 { (ONE - (-z).exp()) / z } else { ONE - z / 2.0 + z * z / 6.0 };
            assert!((series - direct).norm() < 1e-13, "{z}");
        }
        assert_eq!(phi1_scalar(c(0.0, 0.0)), ONE);
    }

    #[test]
    fn matrix_functions_commute_with_argument() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..4 {
            let a = random(12, 0.3, &mut rng).add_identity(c(2.0, 0.0));
            for kind in MatrixFunctionKind::ALL {
                let f = eval_matfun(kind, &a).unwrap();
                let comm = &(&f * &a) - &(&a * &f);
                assert!(comm.max_abs() <= 1e-10 * f.max_abs().max(1.0) * a.max_abs(), "{kind}");
            }
        }
    }

    #[test]
    fn matrix_functions_agree_with_scalar_on_diagonal() {
        let d = [c(1.0, 0.5), c(2.5, -1.0), c(0.3, 0.0)];
        let a = ComplexMatrix::from_diag(&d);
        for kind in MatrixFunctionKind::ALL {
            let f = eval_matfun(kind, &a).unwrap();
            for (i, &z) in d.iter().enumerate() {
                assert!((f[(i, i)] - kind.eval_scalar(z)).norm() < 1e-12 * kind.eval_scalar(z).norm(), "{kind}");
            }
        }
    }

    #[test]
    fn kind_parsing_and_domain() {
        for kind in MatrixFunctionKind::ALL {
            assert_eq!(kind.name().parse::<MatrixFunctionKind>().unwrap(), kind);
        }
        assert!("sin".parse::<MatrixFunctionKind>().is_err());
        let left: Region = crate::regions::EllipseRegion::new(c(1.0, 0.0), 2.0, 1.0).unwrap().into();
        assert!(MatrixFunctionKind::InvSqrt.check_domain(&left).is_err());
        assert!(MatrixFunctionKind::Phi1.check_domain(&left).is_err());
        assert!(MatrixFunctionKind::Exp.check_domain(&left).is_ok());
    }

    #[test]
    fn column_magnitude_examples() {
        let cols = column_magnitudes(&ComplexMatrix::identity(3), 1).unwrap();
        assert_eq!(cols, vec![(1, 1.0), (2, 0.0), (3, 0.0)]);
        let d = ComplexMatrix::from_real_diag(&[2.0, -3.0, 4.0]);
        let cols = column_magnitudes(&d, 2).unwrap();
        assert_eq!(cols.iter().filter(|(_, v)| *v != 0.0).collect::<Vec<_>>(), vec![&(2, 3.0)]);
        assert!(column_magnitudes(&d, 0).is_err() && column_magnitudes(&d, 4).is_err());
    }

    #[test]
    fn column_of_exponential_peaks_near_diagonal() {
        let spec = ToeplitzSpec::new(vec![c(0.0, -1.0), c(0.0, 1.0), c(-2.0, 0.0)], 1, 200);
        let f = expm(toeplitz_build(&spec).unwrap().matrix()).unwrap();
        let col = column_magnitudes(&f, 127).unwrap();
        assert_eq!(col.len(), 200);
        let peak = col.iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0;
        assert!(peak.abs_diff(127) <= 2, "peak at {peak}");
    }

    #[test]
    fn faber_series_converges_to_exponential() {
        let spec = ToeplitzSpec::new(vec![c(0.0, 1.0), c(0.0, 3.0), c(0.0, -1.0), c(0.0, -1.0)], 1, 20);
        let a = toeplitz_build(&spec).unwrap().into_matrix();
        let region: Region = fit_ellipse(&fov_boundary(&a, DEFAULT_ANGLES).unwrap(), DEFAULT_SAFETY).unwrap().into();
        let coeffs = faber_coefficients(&|z: C64| z.exp(), &region, 1.5, DEFAULT_QUAD, DEFAULT_MAX_TERMS).unwrap();
        let exact = expm(&a).unwrap();
        let err = |terms| {
            crate::matrix::spectral_norm(&(&exact - &crate::faber::faber_series_apply(&coeffs, &a, terms).unwrap()))
        };
        let (e10, e30, e60) = (err(10), err(30), err(60));
        assert!(e10 > e30 && e30 >= e60);
        assert!(e60 <= 1e-8, "{e60}");
    }
}
