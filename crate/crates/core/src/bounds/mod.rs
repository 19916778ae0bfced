//! Entry-decay envelopes for specific functions.

mod closed_form;
mod stieltjes;

pub use closed_form::{
    exp_bound, exp_bound_value, expsqrt_bound, invsqrt_bound, invsqrt_tau, printed_invsqrt_prefactor,
};
pub use stieltjes::{
    kron_entry_bound, kron_phi1_bound, kron_weight_integral, laplace_stieltjes_bound, lex_split, phi1_bound,
    phi1_bound_value, StieltjesMeasure,
};

use std::fmt::Write as _;

use crate::error::Result;
use crate::regions::{DiskRegion, EllipseRegion};

/// Constant in `|f(A)| <= C sup_{W(A)} |f|`.
pub const CROUZEIX: f64 = 11.08;

/// How an envelope is evaluated at a given band distance.
#[derive(Clone, Debug)]
pub enum EnvelopeFormula {
    /// Closed form for `e^A` on an ellipse.
    Exp(EllipseRegion),
    /// `prefactor * tau^{-xi}`.
    Geometric { prefactor: f64, tau: f64 },
    /// Quadrature form for `(1 - e^{-z})/z` on a disk.
    Phi1(DiskRegion),
    /// Laplace-Stieltjes bound for a general measure on a disk.
    Laplace { measure: StieltjesMeasure, disk: DiskRegion },
}

/// Map from band distance to an upper bound on the matching entries.
#[derive(Clone, Debug)]
pub struct DecayEnvelope {
    /// Smallest band distance at which the bound holds; `u64::MAX` when it never does.
    pub xi_min: u64,
    pub formula: EnvelopeFormula,
    pub description: String,
}

impl DecayEnvelope {
    /// Bound at `xi`, or `None` below the validity threshold.
    pub fn value(&self, xi: u64) -> Result<Option<f64>> {
        if xi < self.xi_min || xi == 0 {
            return Ok(None);
        }
        let v = match &self.formula {
            EnvelopeFormula::Exp(e) => exp_bound_value(e, xi),
            EnvelopeFormula::Geometric { prefactor, tau } => prefactor * tau.powf(-(xi as f64)),
            EnvelopeFormula::Phi1(d) => phi1_bound_value(d, xi)?,
            EnvelopeFormula::Laplace { measure, disk } => laplace_stieltjes_bound(measure, disk, xi)?,
        };
        Ok(Some(v))
    }

    pub fn is_valid_at(&self, xi: u64) -> bool {
        xi >= self.xi_min && xi > 0
    }

    /// Header `xi,bound,valid`; invalid rows carry `inf` and `valid = 0`.
    pub fn to_csv(&self, xis: impl IntoIterator<Item = u64>) -> Result<String> {
        let mut out = String::from("xi,bound,valid\n");
        for xi in xis {
            match self.value(xi)? {
                Some(v) => writeln!(out, "{xi},{v:.16e},1"),
                None => writeln!(out, "{xi},inf,0"),
            }
            .expect("writing to a String cannot fail");
        }
        Ok(out)
    }
}
