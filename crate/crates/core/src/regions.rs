//! Field-of-values sampling and enclosing ellipse/disk regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{hermitian_extreme_eigenpairs, vector, ComplexMatrix, C64};

pub const DEFAULT_ANGLES: usize = 256;
pub const DEFAULT_SAFETY: f64 = 1.01;
/// Relative semi-axis gap below which an ellipse is treated as a disk, and
/// relative minor axis below which it is treated as a segment.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// A boundary point `u* A u` of the field of values, with `u` the top
/// eigenvector of the Hermitian part of `e^{i theta} A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FovSample {
    pub theta: f64,
    pub point: C64,
}

/// Axis-aligned ellipse `((x-c1)/a)^2 + ((y-c2)/b)^2 <= 1`.
///
/// `b > a` describes a vertical ellipse. One semi-axis may be zero, giving
/// a segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipseRegion {
    pub center: C64,
    pub a: f64,
    pub b: f64,
}

impl EllipseRegion {
    pub fn new(center: C64, a: f64, b: f64) -> Result<Self> {
        if !(center.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("ellipse parameters".into()));
        }
        if a < 0.0 || b < 0.0 || a + b == 0.0 {
            return Err(Error::invalid(format!(
                "ellipse semi-axes must be nonnegative and not both zero (a={a}, b={b})"
            )));
        }
        Ok(Self { center, a, b })
    }

    /// `rho^2 = a^2 - b^2`; negative for vertical ellipses.
    pub fn rho_sq(&self) -> f64 {
        self.a * self.a - self.b * self.b
    }

    /// Focal half-distance, imaginary for vertical ellipses.
    pub fn rho(&self) -> C64 {
        C64::new(self.rho_sq(), 0.0).sqrt()
    }

    /// Capacity-normalizing factor `(a+b)/rho`; infinite for a disk.
    pub fn cap_r(&self) -> C64 {
        C64::new(self.a + self.b, 0.0) / self.rho()
    }

    pub fn is_disk_degenerate(&self) -> bool {
        (self.a - self.b).abs() <= DEGENERACY_TOL * self.a.max(self.b)
    }

    pub fn is_segment_degenerate(&self) -> bool {
        self.a.min(self.b) <= DEGENERACY_TOL * self.a.max(self.b)
    }

    pub fn is_vertical(&self) -> bool {
        self.b > self.a && !self.is_disk_degenerate()
    }

    /// `sqrt(((x-c1)/a)^2 + ((y-c2)/b)^2)`; a zero semi-axis contributes
    /// nothing when the offset along it is zero and infinity otherwise.
    pub fn normalized_radius(&self, w: C64) -> f64 {
        let d = w - self.center;
        let term = |off: f64, axis: f64| {
            if axis > 0.0 {
                (off / axis).powi(2)
            } else if off == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        (term(d.re, self.a) + term(d.im, self.b)).sqrt()
    }

    pub fn contains(&self, w: C64, slack: f64) -> bool {
        self.normalized_radius(w) <= 1.0 + slack
    }

    /// Smallest disk with the same center containing the ellipse.
    pub fn enclosing_disk(&self) -> DiskRegion {
        DiskRegion { center: self.center, radius: self.a.max(self.b) }
    }

    /// `self` when horizontal, otherwise the enclosing circle as an ellipse.
    pub fn horizontal_cover(&self) -> Self {
        if self.is_vertical() {
            let r = self.a.max(self.b);
            Self { center: self.center, a: r, b: r }
        } else {
            *self
        }
    }

    /// Largest real part over the ellipse is `c1 + a`, smallest `c1 - a`.
    pub fn real_range(&self) -> (f64, f64) {
        (self.center.re - self.a, self.center.re + self.a)
    }

    /// Whether the closed ellipse meets the ray `(-inf, 0]`.
    pub fn meets_nonpositive_axis(&self) -> bool {
        let (c1, c2) = (self.center.re, self.center.im);
        if self.b == 0.0 {
            return c2 == 0.0 && c1 - self.a <= 0.0;
        }
        if c2.abs() > self.b {
            return false;
        }
        // leftmost and rightmost points of the horizontal chord at y = 0
        let half = self.a * (1.0 - (c2 / self.b).powi(2)).max(0.0).sqrt();
        c1 - half <= 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskRegion {
    pub center: C64,
    pub radius: f64,
}

impl DiskRegion {
    pub fn new(center: C64, radius: f64) -> Result<Self> {
        if !(center.is_finite() && radius.is_finite()) {
            return Err(Error::NonFinite("disk parameters".into()));
        }
        if radius <= 0.0 {
            return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn is_degenerate(&self) -> bool {
        self.radius == 0.0
    }

    pub fn contains(&self, w: C64, slack: f64) -> bool {
        (w - self.center).norm() <= self.radius * (1.0 + slack)
    }
}

/// Enclosing region handed to the conformal maps and bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Ellipse(EllipseRegion),
    Disk(DiskRegion),
}

impl Region {
    pub fn center(&self) -> C64 {
        match self {
            Region::Ellipse(e) => e.center,
            Region::Disk(d) => d.center,
        }
    }

    pub fn contains(&self, w: C64, slack: f64) -> bool {
        match self {
            Region::Ellipse(e) => e.contains(w, slack),
            Region::Disk(d) => d.contains(w, slack),
        }
    }
}

impl From<EllipseRegion> for Region {
    fn from(e: EllipseRegion) -> Self {
        Region::Ellipse(e)
    }
}

impl From<DiskRegion> for Region {
    fn from(d: DiskRegion) -> Self {
        Region::Disk(d)
    }
}

/// Samples the field-of-values boundary at `theta_j = 2 pi j / n_angles`.
pub fn fov_boundary(a: &ComplexMatrix, n_angles: usize) -> Result<Vec<FovSample>> {
    let n = a.ensure_square()?;
    if n_angles < 8 {
        return Err(Error::invalid(format!("need at least 8 angles, got {n_angles}")));
    }
    let angle = |j: usize| 2.0 * std::f64::consts::PI * j as f64 / n_angles as f64;
    let rayleigh = |u: &[C64]| vector::dot(u, &a.matvec(u));
    let hermitian_part = |theta: f64| {
        let rot = C64::from_polar(1.0, theta);
        let mut h = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new((rot * a[(i, i)]).re, 0.0);
            for j in 0..i {
                let z = (rot * a[(i, j)] + (rot * a[(j, i)]).conj()) * 0.5;
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    };

    let mut samples = vec![FovSample { theta: 0.0, point: C64::new(0.0, 0.0) }; n_angles];
    if n_angles % 2 == 0 {
        // the Hermitian part at theta + pi is the negative of the one at theta
        let half = n_angles / 2;
        for j in 0..half {
            let pairs = hermitian_extreme_eigenpairs(&hermitian_part(angle(j)))?;
            samples[j] = FovSample { theta: angle(j), point: rayleigh(&pairs.max_vector) };
            samples[j + half] = FovSample { theta: angle(j + half), point: rayleigh(&pairs.min_vector) };
        }
    } else {
        for (j, s) in samples.iter_mut().enumerate() {
            let pairs = hermitian_extreme_eigenpairs(&hermitian_part(angle(j)))?;
            *s = FovSample { theta: angle(j), point: rayleigh(&pairs.max_vector) };
        }
    }
    Ok(samples)
}

fn bounding_box(samples: &[FovSample]) -> (C64, f64, f64) {
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in samples {
        xlo = xlo.min(s.point.re);
        xhi = xhi.max(s.point.re);
        ylo = ylo.min(s.point.im);
        yhi = yhi.max(s.point.im);
    }
    (C64::new(0.5 * (xlo + xhi), 0.5 * (ylo + yhi)), 0.5 * (xhi - xlo), 0.5 * (yhi - ylo))
}

/// Axis-aligned ellipse from the bounding box of the samples, scaled until
/// every sample is inside and then by `safety`.
pub fn fit_ellipse(samples: &[FovSample], safety: f64) -> Result<EllipseRegion> {
    if samples.len() < 8 {
        return Err(Error::invalid(format!("need at least 8 samples, got {}", samples.len())));
    }
    if !(safety >= 1.0) {
        return Err(Error::invalid(format!("safety factor must be >= 1, got {safety}")));
    }
    let (center, mut a, mut b) = bounding_box(samples);
    let scale = a.max(b);
    if scale == 0.0 {
        return Err(Error::invalid("all samples coincide; fit a disk instead"));
    }
    // squash a numerically flat direction to an exact segment
    if a <= DEGENERACY_TOL * scale {
        a = 0.0;
    }
    if b <= DEGENERACY_TOL * scale {
        b = 0.0;
    }
    let probe = EllipseRegion { center, a, b };
    let s = samples.iter().map(|p| probe.normalized_radius(p.point)).fold(0.0, f64::max);
    let grow = s.max(1.0) * safety;
    EllipseRegion::new(center, a * grow, b * grow)
}

/// Disk centered at the bounding-box midpoint. A zero radius marks a
/// degenerate fit.
pub fn fit_disk(samples: &[FovSample], safety: f64) -> Result<DiskRegion> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    if !(safety >= 1.0) {
        return Err(Error::invalid(format!("safety factor must be >= 1, got {safety}")));
    }
    let (center, _, _) = bounding_box(samples);
    let radius = samples.iter().map(|s| (s.point - center).norm()).fold(0.0, f64::max) * safety;
    Ok(DiskRegion { center, radius })
}

/// Ellipse with semi-axes `a (1 + eps/b)` and `b + eps`, which keeps every
/// boundary point at least `eps` away from the original ellipse.
pub fn inflate_for_perturbation(e: &EllipseRegion, eps_m: f64) -> Result<EllipseRegion> {
    if !(eps_m >= 0.0) {
        return Err(Error::invalid(format!("perturbation budget must be nonnegative, got {eps_m}")));
    }
    if e.b <= 0.0 {
        return Err(Error::invalid("cannot inflate a segment (b = 0)"));
    }
    EllipseRegion::new(e.center, e.a * (1.0 + eps_m / e.b), e.b + eps_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn samples_of(points: &[C64]) -> Vec<FovSample> {
        // repeat so the minimum sample count is met
        points.iter().cycle().take(points.len().max(8)).map(|&point| FovSample { theta: 0.0, point }).collect()
    }

    fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn hermitian_field_is_a_real_interval() {
        let s = fov_boundary(&ComplexMatrix::from_real_diag(&[0.0, 1.0]), 32).unwrap();
        assert_eq!(s.len(), 32);
        for p in &s {
            assert!(p.point.im.abs() < 1e-14);
            assert!((-1e-14..=1.0 + 1e-14).contains(&p.point.re));
        }
        let e = fit_ellipse(&s, DEFAULT_SAFETY).unwrap();
        assert!(e.b <= 1e-8 * e.a && e.is_segment_degenerate());
    }

    #[test]
    fn jordan_block_field_is_half_disk() {
        let j = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        for p in fov_boundary(&j, 64).unwrap() {
            assert!((p.point.norm() - 0.5).abs() < 1e-8);
        }
        // oracle: random unit vectors never exceed modulus 1/2
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut best: f64 = 0.0;
        for _ in 0..1_000_000 {
            let v = [
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ];
            let q = (v[0].conj() * v[1]).norm() / (v[0].norm_sqr() + v[1].norm_sqr());
            best = best.max(q);
        }
        assert!(best <= 0.5 + 1e-15 && best > 0.499);
    }

    #[test]
    fn normal_matrix_samples_stay_in_eigenvalue_hull() {
        // unitary similarity of diag(0, 1, i) by a Householder reflector
        let v = [c(0.3, -0.2), c(1.0, 0.5), c(-0.7, 0.1)];
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let q = ComplexMatrix::from_fn(3, 3, |i, j| {
            let id = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            id - v[i] * v[j].conj() * (2.0 / vv)
        });
        let d = ComplexMatrix::from_diag(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        let a = q.matmul(&d).unwrap().matmul(&q.adjoint()).unwrap();
        for s in fov_boundary(&a, 64).unwrap() {
            let (x, y) = (s.point.re, s.point.im);
            // triangle x >= 0, y >= 0, x + y <= 1
            assert!(x >= -1e-10 && y >= -1e-10 && x + y <= 1.0 + 1e-10, "{:?}", s.point);
        }
    }

    #[test]
    fn fit_examples() {
        let e = fit_ellipse(&samples_of(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]), 1.0).unwrap();
        assert_eq!((e.center, e.a, e.b), (c(0.0, 0.0), 1.0, 1.0));
        assert!(e.is_disk_degenerate());
        let e = fit_ellipse(&samples_of(&[c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 0.5), c(0.0, -0.5)]), 1.0).unwrap();
        assert_eq!((e.a, e.b), (2.0, 0.5));

        let d = fit_disk(&samples_of(&[c(1.0, 0.0), c(-1.0, 0.0)]), 1.01).unwrap();
        assert_eq!(d.center, c(0.0, 0.0));
        assert!((d.radius - 1.01).abs() < 1e-15);
        let d = fit_disk(&samples_of(&[c(2.0, -1.0)]), 1.01).unwrap();
        assert_eq!((d.center, d.radius), (c(2.0, -1.0), 0.0));
        assert!(d.is_degenerate());
    }

    #[test]
    fn recovers_synthetic_ellipse_and_circle() {
        let n = DEFAULT_ANGLES;
        let pts: Vec<FovSample> = (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                FovSample { theta: t, point: c(2.0 + 3.0 * t.cos(), t.sin()) }
            })
            .collect();
        let e = fit_ellipse(&pts, DEFAULT_SAFETY).unwrap();
        assert!(pts.iter().all(|p| e.contains(p.point, 0.0)));
        assert!((e.a / 3.0 - 1.0).abs() < 0.05 && (e.b - 1.0).abs() < 0.05);

        let circle: Vec<FovSample> = (0..n)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                FovSample { theta: t, point: c(3.0, 0.0) + C64::from_polar(2.0, t) }
            })
            .collect();
        let d = fit_disk(&circle, DEFAULT_SAFETY).unwrap();
        assert!((d.center - c(3.0, 0.0)).norm() < 1e-12);
        assert!((d.radius - 2.0 * DEFAULT_SAFETY).abs() < 1e-12);
    }

    #[test]
    fn inflation_examples() {
        let e = EllipseRegion::new(c(0.0, 0.0), 2.0, 1.0).unwrap();
        let f = inflate_for_perturbation(&e, 0.1).unwrap();
        assert!((f.a - 2.2).abs() < 1e-15 && (f.b - 1.1).abs() < 1e-15);
        assert_eq!(inflate_for_perturbation(&e, 0.0).unwrap(), e);
        let u = EllipseRegion::new(c(0.0, 0.0), 1.0, 1.0).unwrap();
        let g = inflate_for_perturbation(&u, 0.5).unwrap();
        assert_eq!((g.a, g.b), (1.5, 1.5));
        assert!(inflate_for_perturbation(&EllipseRegion::new(c(0.0, 0.0), 1.0, 0.0).unwrap(), 0.1).is_err());
    }

    #[test]
    fn inflated_boundary_keeps_distance() {
        let e = EllipseRegion::new(c(1.0, -0.5), 2.0, 0.7).unwrap();
        let eps = 0.3;
        let f = inflate_for_perturbation(&e, eps).unwrap();
        let m = 4096;
        let inner: Vec<C64> = (0..m)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                e.center + c(e.a * t.cos(), e.b * t.sin())
            })
            .collect();
        for j in 0..512 {
            let t = 2.0 * std::f64::consts::PI * j as f64 / 512.0;
            let w = f.center + c(f.a * t.cos(), f.b * t.sin());
            let dist = inner.iter().map(|z| (w - *z).norm()).fold(f64::INFINITY, f64::min);
            assert!(dist >= eps * (1.0 - 1e-3), "distance {dist} at angle {t}");
        }
    }

    #[test]
    fn branch_cut_test() {
        assert!(!EllipseRegion::new(c(5.0, 0.0), 2.0, 1.0).unwrap().meets_nonpositive_axis());
        assert!(EllipseRegion::new(c(1.0, 0.0), 2.0, 1.0).unwrap().meets_nonpositive_axis());
        // left of the imaginary axis but above the cut
        assert!(!EllipseRegion::new(c(0.5, 3.0), 2.0, 1.0).unwrap().meets_nonpositive_axis());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn fitted_regions_contain_all_samples(seed in any::<u64>(), n in 3usize..12) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(n, &mut rng);
            let s = fov_boundary(&a, 64).unwrap();
            let e = fit_ellipse(&s, DEFAULT_SAFETY).unwrap();
            let d = fit_disk(&s, DEFAULT_SAFETY).unwrap();
            for p in &s {
                prop_assert!(e.contains(p.point, 0.0));
                prop_assert!(d.contains(p.point, 0.0));
            }
        }

        #[test]
        fn inflation_is_nested(a in 0.1f64..5.0, b in 0.1f64..5.0, e1 in 0.0f64..1.0, de in 0.0f64..1.0) {
            let e = EllipseRegion::new(c(0.0, 0.0), a, b).unwrap();
            let (small, big) = (inflate_for_perturbation(&e, e1).unwrap(), inflate_for_perturbation(&e, e1 + de).unwrap());
            prop_assert!(small.a <= big.a && small.b <= big.b);
        }
    }
}
