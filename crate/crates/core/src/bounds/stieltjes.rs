use std::fmt;
use std::sync::Arc;

use super::{DecayEnvelope, EnvelopeFormula, CROUZEIX};
use crate::error::{Error, Result};
use crate::matrix::band_distance;
use crate::quadrature::{integrate_to_infinity, integrate_with, QuadOptions};
use crate::regions::DiskRegion;

const REL_TOL: f64 = 1e-10;
const SPLIT_CANDIDATES: i32 = 20;

/// Measure `dmu(t) = w(t) dt` on `[t_lo, t_hi]` plus point masses.
#[derive(Clone)]
pub struct StieltjesMeasure {
    weight: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub point_masses: Vec<(f64, f64)>,
    pub name: String,
}

impl fmt::Debug for StieltjesMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StieltjesMeasure")
            .field("name", &self.name)
            .field("t_lo", &self.t_lo)
            .field("t_hi", &self.t_hi)
            .field("point_masses", &self.point_masses)
            .finish()
    }
}

impl StieltjesMeasure {
    pub fn new(
        name: impl Into<String>,
        weight: impl Fn(f64) -> f64 + Send + Sync + 'static,
        t_lo: f64,
        t_hi: f64,
        point_masses: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if !(t_lo >= 0.0 && t_hi > t_lo) || t_lo.is_infinite() {
            return Err(Error::invalid(format!("bad support [{t_lo}, {t_hi}]")));
        }
        if point_masses.iter().any(|&(t, m)| !(t >= 0.0 && t.is_finite() && m >= 0.0 && m.is_finite())) {
            return Err(Error::invalid("point masses need finite t >= 0 and mass >= 0"));
        }
        Ok(Self { weight: Arc::new(weight), t_lo, t_hi, point_masses, name: name.into() })
    }

    /// Lebesgue measure on `[0, inf)`, giving `1/z`.
    pub fn inverse() -> Self {
        Self::new("inverse", |_| 1.0, 0.0, f64::INFINITY, Vec::new()).expect("valid preset")
    }

    /// Lebesgue measure on `[0, 1]`, giving `(1 - e^{-z})/z`.
    pub fn phi1() -> Self {
        Self::new("phi1", |_| 1.0, 0.0, 1.0, Vec::new()).expect("valid preset")
    }

    pub fn weight(&self, t: f64) -> f64 {
        (self.weight)(t)
    }
}

/// Bound on an off-diagonal entry of `e^{-tA}` for `xi > R t`, with `W(A)` in `disk`.
fn exp_entry_log(disk: &DiskRegion, xi: f64, t: f64) -> f64 {
    let (c1, r) = (disk.center.re, disk.radius);
    if t == 0.0 {
        return f64::NEG_INFINITY;
    }
    (2.0 * xi).ln() - t * c1 - (xi - r * t).ln() + xi * (1.0 + (r * t).ln() - xi.ln())
}

fn certified(res: crate::quadrature::QuadResult) -> f64 {
    res.value + res.error
}

fn integrate(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: REL_TOL, ..QuadOptions::default() };
    let r = if hi.is_infinite() { integrate_to_infinity(g, lo, &opts)? } else { integrate_with(g, lo, hi, &opts)? };
    Ok(certified(r))
}

/// Entry bound for `f(A) = int e^{-tA} dmu(t)` at band distance `xi`: the
/// exponential-entry bound on `[0, T]` plus the norm bound
/// `CROUZEIX e^{-t(c1 - R)}` on `[T, t_hi]`. The split `T` stays below
/// `xi/R`, where the first integrand blows up; the best of a few splits is taken.
pub fn laplace_stieltjes_bound(mu: &StieltjesMeasure, disk: &DiskRegion, xi: u64) -> Result<f64> {
    if xi == 0 {
        return Err(Error::invalid("band distance must be positive"));
    }
    let (x, c1, r) = (xi as f64, disk.center.re, disk.radius);
    let cap = if r > 0.0 { x / r } else { f64::INFINITY };
    let tail_decay = c1 - r;
    let head = |hi: f64| integrate(|t| (exp_entry_log(disk, x, t).exp()) * mu.weight(t), mu.t_lo, hi.min(mu.t_hi));
    let tail = |lo: f64| -> Result<f64> {
        let lo = lo.max(mu.t_lo);
        if lo >= mu.t_hi {
            return Ok(0.0);
        }
        if mu.t_hi.is_infinite() && tail_decay <= 0.0 {
            return Err(Error::domain(format!("tail diverges: c1 - R = {tail_decay} <= 0 with unbounded support")));
        }
        Ok(CROUZEIX * integrate(|t| (-t * tail_decay).exp() * mu.weight(t), lo, mu.t_hi)?)
    };
    let masses =
        |split: f64| -> f64 {
            mu.point_masses
                .iter()
                .map(|&(t, m)| {
                    if t < split {
                        m * exp_entry_log(disk, x, t).exp()
                    } else {
                        m * CROUZEIX * (-t * tail_decay).exp()
                    }
                })
                .sum()
        };

    if mu.t_hi < cap {
        // no tail needed, unless a point mass sits beyond the support
        return Ok(head(mu.t_hi)? + masses(cap));
    }
    let mut best = f64::INFINITY;
    for k in 1..=SPLIT_CANDIDATES {
        let split = cap * (1.0 - 0.5f64.powi(k));
        let v = head(split)? + tail(split)? + masses(split);
        best = best.min(v);
    }
    Ok(best)
}

/// Value of the `(1 - e^{-z})/z` envelope; infinite for `xi <= R`.
pub fn phi1_bound_value(d: &DiskRegion, xi: u64) -> Result<f64> {
    let x = xi as f64;
    if x <= d.radius {
        return Ok(f64::INFINITY);
    }
    integrate(|t| exp_entry_log(d, x, t).exp(), 0.0, 1.0)
}

/// Envelope for `(1 - e^{-z})/z`, valid for `xi > R`.
pub fn phi1_bound(d: &DiskRegion) -> DecayEnvelope {
    DecayEnvelope {
        xi_min: d.radius.floor() as u64 + 1,
        formula: EnvelopeFormula::Phi1(*d),
        description: format!("(1-exp(-z))/z on disk c={}, R={}", d.center, d.radius),
    }
}

/// `int_0^1 e^{-2 t c1} t^{2 xi} / (xi - R t)^2 dt`.
pub fn kron_weight_integral(d: &DiskRegion, xi: u64) -> Result<f64> {
    let (x, c1, r) = (xi as f64, d.center.re, d.radius);
    if x <= r {
        return Err(Error::invalid(format!("xi = {xi} must exceed R = {r}")));
    }
    integrate(
        |t| if t == 0.0 { 0.0 } else { (-2.0 * t * c1 + 2.0 * x * t.ln() - 2.0 * (x - r * t).ln()).exp() },
        0.0,
        1.0,
    )
}

/// Bound on `|((1 - e^{-z})/z)(A (+) A)|` at the entry whose factor indices
/// have band distances `xi1` and `xi2`. `None` unless both exceed `R`.
pub fn kron_phi1_bound(d: &DiskRegion, xi1: u64, xi2: u64) -> Result<Option<f64>> {
    let r = d.radius;
    if xi1 == 0 || xi2 == 0 || xi1 as f64 <= r || xi2 as f64 <= r {
        return Ok(None);
    }
    let (x1, x2) = (xi1 as f64, xi2 as f64);
    let (i1, i2) = (kron_weight_integral(d, xi1)?, kron_weight_integral(d, xi2)?);
    let log = 4f64.ln() + x1.ln() + x2.ln() + (x1 + x2) * (1.0 + r.ln()) - x1 * x1.ln() - x2 * x2.ln()
        + 0.5 * (i1.ln() + i2.ln());
    Ok(Some(log.exp()))
}

/// Splits 1-based indices of an `n^2`-order Kronecker sum:
/// `row = (k2-1) n + k1`, `col = (l2-1) n + l1`. Returns `(k1, k2, l1, l2)`.
pub fn lex_split(row: usize, col: usize, n: usize) -> Result<(usize, usize, usize, usize)> {
    let max = n * n;
    if n == 0 || row == 0 || col == 0 || row > max || col > max {
        return Err(Error::invalid(format!("indices ({row}, {col}) outside 1..={max}")));
    }
    Ok(((row - 1) % n + 1, (row - 1) / n + 1, (col - 1) % n + 1, (col - 1) / n + 1))
}

/// Kronecker-sum entry bound with factor bandwidths `(beta, gamma)`.
pub fn kron_entry_bound(
    d: &DiskRegion,
    beta: usize,
    gamma: usize,
    n: usize,
    row: usize,
    col: usize,
) -> Result<Option<f64>> {
    let (k1, k2, l1, l2) = lex_split(row, col, n)?;
    if k1 == l1 || k2 == l2 {
        return Ok(None);
    }
    let xi1 = band_distance(k1, l1, beta, gamma)?;
    let xi2 = band_distance(k2, l2, beta, gamma)?;
    kron_phi1_bound(d, xi1, xi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;
    use crate::quadrature::integrate_adaptive;

    fn disk(c: f64, r: f64) -> DiskRegion {
        DiskRegion::new(C64::new(c, 0.0), r).unwrap()
    }

    #[test]
    fn finite_support_reduces_to_phi1_integral() {
        let d = disk(3.0, 2.0);
        for xi in 3..8 {
            let general = laplace_stieltjes_bound(&StieltjesMeasure::phi1(), &d, xi).unwrap();
            let direct = phi1_bound_value(&d, xi).unwrap();
            assert!((general - direct).abs() <= 1e-14 * direct);
        }
        let v = laplace_stieltjes_bound(&StieltjesMeasure::phi1(), &d, 4).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn point_mass_at_origin_contributes_nothing() {
        let d = disk(3.0, 2.0);
        let with_mass = StieltjesMeasure::new("phi1+mass", |_| 1.0, 0.0, 1.0, vec![(0.0, 5.0)]).unwrap();
        for xi in 3..6 {
            assert_eq!(
                laplace_stieltjes_bound(&with_mass, &d, xi).unwrap(),
                laplace_stieltjes_bound(&StieltjesMeasure::phi1(), &d, xi).unwrap()
            );
        }
    }

    #[test]
    fn inverse_measure_needs_decaying_tail() {
        let mu = StieltjesMeasure::inverse();
        let v = laplace_stieltjes_bound(&mu, &disk(5.0, 2.0), 4).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(laplace_stieltjes_bound(&mu, &disk(1.0, 2.0), 4).is_err());
    }

    #[test]
    fn phi1_envelope_validity_and_limits() {
        let env = phi1_bound(&disk(3.0, 2.0));
        assert_eq!(env.xi_min, 3);
        assert!(env.value(2).unwrap().is_none());
        let tiny = phi1_bound(&disk(1.0, 1e-300));
        assert!(tiny.value(1).unwrap().unwrap() < 1e-200);
    }

    #[test]
    fn phi1_integrand_against_riemann_sum() {
        let d = disk(0.0, 1.0);
        let v = phi1_bound_value(&d, 2).unwrap();
        let g = |t: f64| 4.0 * (std::f64::consts::E * t / 2.0).powi(2) / (2.0 - t);
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let riemann: f64 = (0..n).map(|i| g((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((v - riemann).abs() < 1e-8, "{v} vs {riemann}");
        assert!((integrate_adaptive(g, 0.0, 1.0, 1e-12).unwrap() - riemann).abs() < 1e-8);
    }

    #[test]
    fn kron_bound_properties() {
        let d = disk(4.0, 1.2);
        assert_eq!(kron_phi1_bound(&d, 3, 5).unwrap(), kron_phi1_bound(&d, 5, 3).unwrap());
        assert!(kron_phi1_bound(&d, 1, 5).unwrap().is_none());
        let mut prev = f64::INFINITY;
        for xi in 2..=20 {
            let i = kron_weight_integral(&d, xi).unwrap();
            assert!(i < prev);
            prev = i;
        }
    }

    #[test]
    fn lex_split_examples() {
        assert_eq!(lex_split(1, 1, 30).unwrap(), (1, 1, 1, 1));
        let (k1, k2, _, _) = lex_split(300, 1, 30).unwrap();
        assert_eq!((k1, k2), (30, 10));
        for row in [1, 31, 900] {
            let (k1, k2, l1, l2) = lex_split(row, row, 30).unwrap();
            assert_eq!((k2 - 1) * 30 + k1, row);
            assert_eq!((l2 - 1) * 30 + l1, row);
        }
        assert!(lex_split(901, 1, 30).is_err());
    }
}
