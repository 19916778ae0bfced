//! Conformal maps of ellipse/disk exteriors, Faber coefficients and
//! polynomials, and the generic series-tail and level-curve bounds.
//!
//! Every region is reduced to three numbers: the center `c`, the half sum
//! `h = (a+b)/2` of the semi-axes (the disk radius for a disk) and
//! `r2 = a^2 - b^2` (zero for a disk, negative for a vertical ellipse). The
//! exterior map is then
//!
//! ```text
//! psi(z) = c + h z + r2 / (4 h z)
//! ```
//!
//! so no square root of `r2` is ever taken and the disk is the `r2 = 0` case.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::regions::Region;

pub const DEFAULT_QUAD: usize = 2048;
pub const DEFAULT_MAX_TERMS: usize = 4096;
/// Inflation applied to the sampled level-curve maximum.
pub const LEVEL_MAX_INFLATION: f64 = 1.001;
const TAIL_REL_CUTOFF: f64 = 1e-16;

#[derive(Clone, Copy, Debug, PartialEq)]
struct MapParams {
    center: C64,
    half_sum: f64,
    r2: f64,
}

impl MapParams {
    fn of(region: &Region) -> Self {
        match region {
            Region::Disk(d) => Self { center: d.center, half_sum: d.radius, r2: 0.0 },
            Region::Ellipse(e) => Self {
                center: e.center,
                half_sum: 0.5 * (e.a + e.b),
                r2: if e.is_disk_degenerate() { 0.0 } else { e.rho_sq() },
            },
        }
    }
}

/// Exterior map of the unit disk onto the exterior of `region`.
pub fn psi(region: &Region, z: C64) -> Result<C64> {
    let p = MapParams::of(region);
    if p.r2 == 0.0 {
        return Ok(p.center + z * p.half_sum);
    }
    if z.norm() == 0.0 {
        return Err(Error::invalid("psi is singular at z = 0 for an ellipse"));
    }
    Ok(p.center + z * p.half_sum + (p.r2 / (4.0 * p.half_sum)) / z)
}

/// Inverse of [`psi`]; of the two preimages the one with larger modulus is taken.
pub fn phi(region: &Region, w: C64) -> C64 {
    let p = MapParams::of(region);
    let d = w - p.center;
    if p.r2 == 0.0 {
        return d / p.half_sum;
    }
    let s = (d * d - p.r2).sqrt();
    let (plus, minus) = ((d + s) / (2.0 * p.half_sum), (d - s) / (2.0 * p.half_sum));
    if plus.norm() >= minus.norm() {
        plus
    } else {
        minus
    }
}

/// Coefficients `f_j` of the Faber expansion of a function, computed on the
/// circle `|z| = tau`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaberCoefficients {
    pub region: Region,
    pub tau: f64,
    pub coeffs: Vec<C64>,
    pub n_quad: usize,
    /// Largest `|f(psi(z))|` over the quadrature nodes.
    pub level_max: f64,
}

fn level_values<F: Fn(C64) -> C64>(f: &F, region: &Region, tau: f64, n_quad: usize) -> Result<Vec<C64>> {
    if !(tau > 1.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be a finite value > 1, got {tau}")));
    }
    if n_quad < 8 {
        return Err(Error::invalid(format!("too few quadrature nodes ({n_quad})")));
    }
    (0..n_quad)
        .map(|k| {
            let z = C64::from_polar(tau, 2.0 * std::f64::consts::PI * k as f64 / n_quad as f64);
            let v = f(psi(region, z)?);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("f is not finite on the level curve tau = {tau}")))
            }
        })
        .collect()
}

/// Largest `|f|` over `n_quad` equispaced points of the level curve `psi(|z| = tau)`.
pub fn level_curve_max<F: Fn(C64) -> C64>(f: &F, region: &Region, tau: f64, n_quad: usize) -> Result<f64> {
    Ok(level_values(f, region, tau, n_quad)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Trapezoid rule on `|z| = tau`. Coefficients `j = 0..min(max_terms, n_quad/2)`
/// are kept; higher indices would alias with the negative Laurent powers.
pub fn faber_coefficients<F: Fn(C64) -> C64>(
    f: &F,
    region: &Region,
    tau: f64,
    n_quad: usize,
    max_terms: usize,
) -> Result<FaberCoefficients> {
    if !n_quad.is_power_of_two() || n_quad < 256 {
        return Err(Error::invalid(format!("n_quad must be a power of two >= 256, got {n_quad}")));
    }
    let mut buf = level_values(f, region, tau, n_quad)?;
    let level_max = buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
    FftPlanner::new().plan_fft_forward(n_quad).process(&mut buf);
    let count = max_terms.min(n_quad / 2).max(1);
    let inv_n = 1.0 / n_quad as f64;
    let mut scale = inv_n;
    let coeffs = buf[..count]
        .iter()
        .map(|&v| {
            let c = v * scale;
            scale /= tau;
            c
        })
        .collect();
    Ok(FaberCoefficients { region: *region, tau, coeffs, n_quad, level_max })
}

/// `2 sum_{j >= xi} |f_j|`, stopped once a term is negligible against the sum.
pub fn faber_tail_bound(coeffs: &FaberCoefficients, xi: usize) -> Result<f64> {
    let c = &coeffs.coeffs;
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut sum = 0.0;
    for (j, z) in c.iter().enumerate().skip(xi) {
        let term = z.norm();
        sum += term;
        if j > xi && term <= TAIL_REL_CUTOFF * sum.max(scale) {
            return Ok(2.0 * sum);
        }
    }
    Err(Error::NoConvergence { what: "Faber coefficient tail", iterations: c.len() })
}

/// `2 tau/(tau-1) max|f(psi)| tau^{-xi}` with the sampled maximum inflated slightly.
pub fn level_curve_bound<F: Fn(C64) -> C64>(f: &F, region: &Region, tau: f64, xi: usize, n_quad: usize) -> Result<f64> {
    let m = level_curve_max(f, region, tau, n_quad)?;
    Ok(level_curve_value(m, tau, xi))
}

fn level_curve_value(level_max: f64, tau: f64, xi: usize) -> f64 {
    let log = (2.0 * tau / (tau - 1.0)).ln() + (LEVEL_MAX_INFLATION * level_max).ln() - xi as f64 * tau.ln();
    log.exp()
}

/// Candidate values of tau.
#[derive(Clone, Debug, PartialEq)]
pub enum TauGrid {
    /// `count` log-spaced points on `[lo, hi]`, then `refine` more between
    /// the neighbours of the best one.
    LogSpaced {
        lo: f64,
        hi: f64,
        count: usize,
        refine: usize,
    },
    Points(Vec<f64>),
}

impl TauGrid {
    pub const DEFAULT_COUNT: usize = 200;
    pub const DEFAULT_LO: f64 = 1.0 + 1e-3;
    pub const FALLBACK_MAX: f64 = 1e3;

    pub fn log_spaced(lo: f64, hi: f64) -> Self {
        TauGrid::LogSpaced { lo, hi, count: Self::DEFAULT_COUNT, refine: Self::DEFAULT_COUNT }
    }

    /// Default grid: up to just inside the image of the nearest singularity.
    pub fn for_region(region: &Region, singularity: Option<C64>) -> Result<Self> {
        let hi = match singularity {
            Some(s) => {
                let t = phi(region, s).norm();
                if t <= 1.0 {
                    return Err(Error::domain(format!("singularity {s} lies inside the region")));
                }
                0.999 * t
            }
            None => Self::FALLBACK_MAX,
        };
        if hi <= Self::DEFAULT_LO {
            return Err(Error::domain("singularity too close to the region for any admissible tau"));
        }
        Ok(Self::log_spaced(Self::DEFAULT_LO, hi))
    }
}

fn log_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || hi <= lo {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..count).map(|i| (l + (h - l) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauOptimum {
    pub tau: f64,
    pub bound: f64,
}

/// Chooses tau on the grid by minimizing the decay factor
/// `max|f(psi)| tau^{-xi}` and reports the level-curve bound there.
pub fn optimize_tau<F: Fn(C64) -> C64>(
    f: &F,
    region: &Region,
    xi: usize,
    grid: &TauGrid,
    n_quad: usize,
) -> Result<TauOptimum> {
    let score = |tau: f64| -> Option<(f64, f64)> {
        let m = level_curve_max(f, region, tau, n_quad).ok()?;
        let s = m.ln() - xi as f64 * tau.ln();
        (s.is_finite() || s == f64::NEG_INFINITY).then_some((s, m))
    };
    let best_of = |pts: &[f64]| -> Option<(usize, f64, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, &t) in pts.iter().enumerate() {
            if let Some((s, m)) = score(t) {
                if best.is_none_or(|(_, bs, _)| s < bs) {
                    best = Some((i, s, m));
                }
            }
        }
        best
    };
    let no_tau = || Error::domain("no admissible tau on the grid");
    let (tau, m) = match grid {
        TauGrid::Points(pts) => {
            let (i, _, m) = best_of(pts).ok_or_else(no_tau)?;
            (pts[i], m)
        }
        TauGrid::LogSpaced { lo, hi, count, refine } => {
            let pts = log_points(*lo, *hi, *count);
            let (i, s, m) = best_of(&pts).ok_or_else(no_tau)?;
            let (a, b) = (pts[i.saturating_sub(1)], pts[(i + 1).min(pts.len() - 1)]);
            let fine = log_points(a, b, *refine);
            match best_of(&fine) {
                Some((j, fs, fm)) if fs < s => (fine[j], fm),
                _ => (pts[i], m),
            }
        }
    };
    Ok(TauOptimum { tau, bound: level_curve_value(m, tau, xi) })
}

/// Successive Faber polynomials `Phi_0(A), Phi_1(A), ...` of a region.
pub struct FaberSequence<'a> {
    x: ComplexMatrix,
    shift: f64,
    prev: Option<ComplexMatrix>,
    cur: Option<ComplexMatrix>,
    index: usize,
    a: &'a ComplexMatrix,
}

impl<'a> FaberSequence<'a> {
    pub fn new(region: &Region, a: &'a ComplexMatrix) -> Result<Self> {
        a.ensure_square()?;
        let p = MapParams::of(region);
        if !(p.half_sum > 0.0) {
            return Err(Error::invalid("region has zero size"));
        }
        let x = a.add_identity(-p.center).scale_real(1.0 / p.half_sum);
        Ok(Self { x, shift: p.r2 / (4.0 * p.half_sum * p.half_sum), prev: None, cur: None, index: 0, a })
    }
}

impl Iterator for FaberSequence<'_> {
    type Item = ComplexMatrix;

    fn next(&mut self) -> Option<ComplexMatrix> {
        let n = self.a.rows();
        let next = match (self.index, &self.prev, &self.cur) {
            (0, _, _) => ComplexMatrix::identity(n),
            (1, _, _) => self.x.clone(),
            (2, _, Some(cur)) => (&self.x * cur).add_identity(C64::new(-2.0 * self.shift, 0.0)),
            (_, Some(prev), Some(cur)) => &(&self.x * cur) - &prev.scale_real(self.shift),
            _ => unreachable!("recurrence state is filled in order"),
        };
        self.prev = self.cur.take();
        self.cur = Some(next.clone());
        self.index += 1;
        Some(next)
    }
}

/// `Phi_j(A)` for the region's Faber polynomials.
pub fn faber_poly_apply(region: &Region, j: usize, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(FaberSequence::new(region, a)?.nth(j).expect("sequence is infinite"))
}

/// Truncated Faber series `sum_{j <= terms} f_j Phi_j(A)`.
pub fn faber_series_apply(coeffs: &FaberCoefficients, a: &ComplexMatrix, terms: usize) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    let mut acc = ComplexMatrix::zeros(n, n);
    for (phi_j, &f_j) in FaberSequence::new(&coeffs.region, a)?.zip(coeffs.coeffs.iter()).take(terms + 1) {
        acc += &phi_j.scale(f_j);
    }
    Ok(acc)
}
