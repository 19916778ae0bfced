use super::{DecayEnvelope, EnvelopeFormula};
use crate::error::{Error, Result};
use crate::faber::phi;
use crate::matrix::C64;
use crate::regions::{EllipseRegion, Region};

/// Smallest admissible tau; at or below it a geometric envelope is never valid.
const TAU_FLOOR: f64 = 1.0 + 1e-12;

/// Envelope for `e^A` when `W(A)` lies in `e`. Valid for `xi > b`; vertical
/// ellipses and the segment `b = 0` use the same expression.
pub fn exp_bound(e: &EllipseRegion) -> Result<DecayEnvelope> {
    Ok(DecayEnvelope {
        xi_min: e.b.floor() as u64 + 1,
        formula: EnvelopeFormula::Exp(*e),
        description: format!("exp on ellipse a={}, b={}, c={}", e.a, e.b, e.center),
    })
}

/// Closed-form exponential bound. Infinite for `xi <= b`.
pub fn exp_bound_value(e: &EllipseRegion, xi: u64) -> f64 {
    exp_bound_log(e, xi).exp()
}

fn exp_bound_log(e: &EllipseRegion, xi: u64) -> f64 {
    let x = xi as f64;
    if x <= e.b {
        return f64::INFINITY;
    }
    let (sum, r2) = (e.a + e.b, e.rho_sq());
    let s = (x * x + r2).sqrt();
    let q = 1.0 + r2 / (x * x + x * s);
    std::f64::consts::LN_2 + e.center.re + ((x + s) / (x + s - sum)).ln() + x * (q + sum.ln() - (x + s).ln())
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

/// Sampled minimum of `g` over `pts`, sharpened by golden section between
/// the neighbours of the best sample.
fn sampled_min(g: &impl Fn(f64) -> f64, pts: &[f64]) -> f64 {
    let (k, best) =
        pts.iter()
            .map(|&x| g(x))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let (lo, hi) = (pts[k.saturating_sub(1)], pts[(k + 1).min(pts.len() - 1)]);
    if hi > lo {
        best.min(golden_min(g, lo, hi))
    } else {
        best
    }
}

/// `min |phi(w)|` over the disk `|w| <= eps` joined with the cut `(-inf, 0]`.
/// Every level curve with a smaller parameter encloses neither.
fn min_phi_over_cut(region: &Region, eps: f64) -> f64 {
    let modulus = |w: C64| phi(region, w).norm();
    let circle = if eps > 0.0 {
        let n = 4096;
        let angles: Vec<f64> = (0..=n).map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64).collect();
        sampled_min(&|t: f64| modulus(C64::from_polar(eps, t)), &angles)
    } else {
        modulus(C64::new(0.0, 0.0))
    };
    let center = region.center();
    let far = 1e3 * (center.norm() + 1.0 + eps);
    let start = eps.max(1e-12 * far);
    let n = 4000;
    let mut radii: Vec<f64> = (0..=n).map(|k| start * (far / start).powf(k as f64 / n as f64)).collect();
    radii.insert(0, eps);
    let ray = sampled_min(&|r: f64| modulus(C64::new(-r, 0.0)), &radii);
    circle.min(ray)
}

fn check_horizontal_off_cut(e: &EllipseRegion) -> Result<()> {
    if e.is_vertical() {
        return Err(Error::invalid("this bound needs a horizontal ellipse (a >= b)"));
    }
    if e.meets_nonpositive_axis() {
        return Err(Error::domain(format!(
            "ellipse (a={}, b={}, c={}) meets the branch cut (-inf, 0]",
            e.a, e.b, e.center
        )));
    }
    Ok(())
}

/// Level-curve parameter for `A^{-1/2}` with exclusion radius `eps`: the
/// closed form `|phi(eps c/|c|)|`, capped by the numerical minimum of `|phi|`
/// over the exclusion disk and the branch cut.
pub fn invsqrt_tau(e: &EllipseRegion, eps: f64) -> Result<f64> {
    check_horizontal_off_cut(e)?;
    let c_abs = e.center.norm();
    let eps_max = c_abs - (e.a * (e.a + e.b)).sqrt();
    if !(eps > 0.0 && eps <= eps_max) {
        return Err(Error::invalid(format!("eps must lie in (0, {eps_max}], got {eps}")));
    }
    let region = Region::Ellipse(*e);
    let closed = phi(&region, e.center * (eps / c_abs)).norm();
    Ok(closed.min(min_phi_over_cut(&region, eps)))
}

/// Envelope for `A^{-1/2}`: `(2/sqrt(eps)) tau/(tau-1) tau^{-xi}`.
pub fn invsqrt_bound(e: &EllipseRegion, eps: f64) -> Result<DecayEnvelope> {
    let tau = invsqrt_tau(e, eps)?;
    let valid = tau > TAU_FLOOR;
    Ok(DecayEnvelope {
        xi_min: if valid { 1 } else { u64::MAX },
        formula: EnvelopeFormula::Geometric { prefactor: 2.0 / eps.sqrt() * tau / (tau - 1.0), tau },
        description: format!(
            "inverse square root on ellipse a={}, b={}, c={}, eps={eps}, tau={tau}",
            e.a, e.b, e.center
        ),
    })
}

/// Envelope for `e^{-sqrt(A)}`: `2 tau/(tau-1) tau^{-xi}` with `tau = |phi(0)|`,
/// capped by the cut.
pub fn expsqrt_bound(e: &EllipseRegion) -> Result<DecayEnvelope> {
    check_horizontal_off_cut(e)?;
    let region = Region::Ellipse(*e);
    let tau = phi(&region, C64::new(0.0, 0.0)).norm().min(min_phi_over_cut(&region, 0.0));
    if tau <= TAU_FLOOR {
        return Err(Error::domain(format!("tau = {tau} is not above 1; the region is too close to the origin")));
    }
    Ok(DecayEnvelope {
        xi_min: 1,
        formula: EnvelopeFormula::Geometric { prefactor: 2.0 * tau / (tau - 1.0), tau },
        description: format!("exp(-sqrt) on ellipse a={}, b={}, c={}, tau={tau}", e.a, e.b, e.center),
    })
}

/// The inverse-square-root prefactor with `(a^2-b^2)^2` under the root instead
/// of `a^2-b^2`. Kept for comparison only; envelopes use `tau/(tau-1)`.
pub fn printed_invsqrt_prefactor(e: &EllipseRegion, eps: f64) -> f64 {
    let c = e.center;
    let w = c * (1.0 - eps / c.norm());
    let z = (w + (w * w - e.rho_sq().powi(2)).sqrt()).norm();
    z / (z - (e.a + e.b))
}
