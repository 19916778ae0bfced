//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

pub const DEFAULT_MAX_INTERVALS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 0.0, max_intervals: DEFAULT_MAX_INTERVALS }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self { abs_tol: 0.0, rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> Result<Piece> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let center = g(mid);
    let mut kron = WGK[7] * center;
    let mut gauss = WG[3] * center;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = g(mid - dx) + g(mid + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    if !kron.is_finite() || !gauss.is_finite() {
        return Err(Error::NonFinite(format!("integrand on [{lo}, {hi}]")));
    }
    Ok(Piece { lo, hi, value: kron * half, error: ((kron - gauss) * half).abs() })
}

/// Integrates `g` over `[lo, hi]`, bisecting the interval with the largest
/// error estimate until the total estimate meets the tolerances.
pub fn integrate_with<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("finite limits required; use integrate_to_infinity"));
    }
    if lo == hi {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    if lo > hi {
        let r = integrate_with(g, hi, lo, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let first = kronrod(&g, lo, hi)?;
    let (mut value, mut error) = (first.value, first.error);
    let mut heap = BinaryHeap::from([first]);
    loop {
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::NoConvergence { what: "adaptive quadrature", iterations: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval cannot be split further in floating point
            return Err(Error::NoConvergence {
                what: "adaptive quadrature (interval underflow)",
                iterations: heap.len(),
            });
        }
        let (left, right) = (kronrod(&g, worst.lo, mid)?, kronrod(&g, mid, worst.hi)?);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // resum occasionally to shed accumulated cancellation
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// `|result - integral| <= tol (1 + |result|)` for smooth integrands.
pub fn integrate_adaptive<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    // tol (1 + |I|) >= max(tol, tol |I|)
    Ok(integrate_with(g, lo, hi, &QuadOptions { abs_tol: tol, rel_tol: tol, max_intervals: DEFAULT_MAX_INTERVALS })?
        .value)
}

/// Integral over `[lo, inf)` through `t = lo + s/(1-s)`.
pub fn integrate_to_infinity<G: Fn(f64) -> f64>(g: G, lo: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let mapped = |s: f64| {
        let one_minus = 1.0 - s;
        let v = g(lo + s / one_minus);
        // the integrand must vanish at infinity; treat underflowed products as zero
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    integrate_with(mapped, 0.0, 1.0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        assert!((integrate_adaptive(|t| t * t, 0.0, 1.0, 1e-13).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((integrate_adaptive(f64::exp, 0.0, 1.0, 1e-13).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((integrate_adaptive(|t| t * t, 1.0, 0.0, 1e-13).unwrap() + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn near_singular_log() {
        let v = integrate_adaptive(|t| 1.0 / (1.0 - t), 0.0, 0.99, 1e-11).unwrap();
        assert!((v + 0.01f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_to_infinity(|t| t * (-2.0 * t).exp(), 0.0, &QuadOptions::relative(1e-12)).unwrap();
        assert!((r.value - 0.25).abs() < 1e-11);
    }

    #[test]
    fn interval_cap_reports_failure() {
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 0.0, max_intervals: 4 };
        assert!(matches!(
            integrate_with(|t: f64| (50.0 * t).sin(), 0.0, 10.0, &opts),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn nonfinite_integrand_reported() {
        assert!(matches!(integrate_adaptive(|t| 1.0 / t, -1.0, 1.0, 1e-10), Err(Error::NonFinite(_))));
    }
}
