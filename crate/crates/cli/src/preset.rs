//! Built-in presets: fixed matrices, functions and studies with their seeds.

use std::path::PathBuf;

use anyhow::{bail, Result};
use faber_decay::regions::{DEFAULT_ANGLES, DEFAULT_SAFETY};
use faber_decay::{MatrixFunctionKind, ToeplitzSpec, C64};
use serde::{Deserialize, Serialize};

/// Env var consulted for the pde225 Matrix Market file when no path is given.
pub const PDE225_ENV: &str = "FABER_DECAY_PDE225";
/// Where pde225 lives in the Matrix Market collection.
pub const PDE225_IDENTIFIER: &str = "NEP/matpde/pde225 (Matrix Market, math.nist.gov/MatrixMarket)";
pub const DEFAULT_SEED: u64 = 20_151_107;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatrixRecipe {
    Toeplitz {
        spec: ToeplitzSpec,
    },
    /// `A (+) A` for a Toeplitz factor `A`.
    KroneckerSum {
        factor: ToeplitzSpec,
    },
    /// A Matrix Market file that is not shipped; `path` overrides the env var.
    MatrixMarket {
        identifier: String,
        path: Option<PathBuf>,
    },
}

/// Which envelope a column study is checked against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnBound {
    /// Closed-form exponential envelope on the fitted ellipse.
    Exp,
    /// Inverse square root envelope with exclusion radius `eps`.
    InvSqrt { eps: f64 },
    /// Quadrature envelope for `(1 - e^{-z})/z` on the fitted disk.
    Phi1,
    /// Product envelope for `(1 - e^{-z})/z` of a Kronecker sum, using the factor's disk.
    KronPhi1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Study {
    /// Magnitudes of one column of `f(A)` (1-based) against an envelope.
    Column { column: usize, bound: ColumnBound },
    /// Exact Arnoldi for `f(A) v`, `v` the normalized ones vector, against the a-priori residual bound.
    Arnoldi { tol: f64, m_max: usize },
    /// Constant-accuracy and relaxed inexact Arnoldi runs side by side.
    Inexact { tol: f64, eps_m: f64, m: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub summary: String,
    pub matrix: MatrixRecipe,
    pub function: MatrixFunctionKind,
    pub study: Study,
    /// Angles used to sample the field-of-values boundary.
    pub angles: usize,
    /// Growth factor applied to the fitted region.
    pub safety: f64,
    pub seed: u64,
}

impl Preset {
    pub fn needs_external_file(&self) -> bool {
        matches!(self.matrix, MatrixRecipe::MatrixMarket { .. })
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn r(v: f64) -> C64 {
    c(v, 0.0)
}

fn toeplitz(stencil: Vec<C64>, diag_index: usize, n: usize) -> MatrixRecipe {
    MatrixRecipe::Toeplitz { spec: ToeplitzSpec::new(stencil, diag_index, n) }
}

fn pde225() -> MatrixRecipe {
    MatrixRecipe::MatrixMarket { identifier: PDE225_IDENTIFIER.into(), path: None }
}

fn preset(name: &str, summary: &str, matrix: MatrixRecipe, function: MatrixFunctionKind, study: Study) -> Preset {
    Preset {
        name: name.into(),
        summary: summary.into(),
        matrix,
        function,
        study,
        angles: DEFAULT_ANGLES,
        safety: DEFAULT_SAFETY,
        seed: DEFAULT_SEED,
    }
}

/// Every preset, in reproduction order.
pub fn presets() -> Vec<Preset> {
    use MatrixFunctionKind::*;
    let fig5_matrix = || toeplitz(vec![r(1.0), r(2.0), r(0.1), r(-1.0)], 1, 200);
    vec![
        preset(
            "fig1a",
            "exp(A), A = Toeplitz(-i, [i], -2), n = 200, column 127",
            toeplitz(vec![c(0.0, -1.0), c(0.0, 1.0), r(-2.0)], 1, 200),
            Exp,
            Study::Column { column: 127, bound: ColumnBound::Exp },
        ),
        preset(
            "fig1b",
            "exp(A), A = Toeplitz(i, [3i], -i, -i), n = 100, column 67",
            toeplitz(vec![c(0.0, 1.0), c(0.0, 3.0), c(0.0, -1.0), c(0.0, -1.0)], 1, 100),
            Exp,
            Study::Column { column: 67, bound: ColumnBound::Exp },
        ),
        preset(
            "fig2a",
            "A^{-1/2}, A = Toeplitz(i, [3+3i], -i, -i), n = 100, column 67, eps = 0.05",
            toeplitz(vec![c(0.0, 1.0), c(3.0, 3.0), c(0.0, -1.0), c(0.0, -1.0)], 1, 100),
            InvSqrt,
            Study::Column { column: 67, bound: ColumnBound::InvSqrt { eps: 0.05 } },
        ),
        preset(
            "fig2b",
            "A^{-1/2}, A = Toeplitz(1, [5], 3), n = 100, column 67, eps = 0.05",
            toeplitz(vec![r(1.0), r(5.0), r(3.0)], 1, 100),
            InvSqrt,
            Study::Column { column: 67, bound: ColumnBound::InvSqrt { eps: 0.05 } },
        ),
        preset(
            "fig3",
            "(I - exp(-A)) A^{-1}, A = Toeplitz(0.8, [3], -1, -3), n = 200, column 127",
            toeplitz(vec![r(0.8), r(3.0), r(-1.0), r(-3.0)], 1, 200),
            Phi1,
            Study::Column { column: 127, bound: ColumnBound::Phi1 },
        ),
        preset(
            "fig4a",
            "(I - exp(-A)) A^{-1} for A (+) A, A = Toeplitz(-0.1, [4], 0.9i), n = 30, column 300",
            MatrixRecipe::KroneckerSum { factor: ToeplitzSpec::new(vec![r(-0.1), r(4.0), c(0.0, 0.9)], 1, 30) },
            Phi1,
            Study::Column { column: 300, bound: ColumnBound::KronPhi1 },
        ),
        preset(
            "fig4b",
            "(I - exp(-A)) A^{-1} for A (+) A, A = Toeplitz(-1, [4], 1, 0.5), n = 30, column 300",
            MatrixRecipe::KroneckerSum { factor: ToeplitzSpec::new(vec![r(-1.0), r(4.0), r(1.0), r(0.5)], 1, 30) },
            Phi1,
            Study::Column { column: 300, bound: ColumnBound::KronPhi1 },
        ),
        preset(
            "arnoldi-toeplitz",
            "exact Arnoldi for exp(-A) v, A = Toeplitz(1, [2], 0.1, -1), n = 200, against the a-priori residual bound",
            fig5_matrix(),
            NegExp,
            Study::Arnoldi { tol: 1e-10, m_max: 40 },
        ),
        preset(
            "arnoldi-pde225",
            "exact Arnoldi for exp(-A) v, A = pde225, against the a-priori residual bound",
            pde225(),
            NegExp,
            Study::Arnoldi { tol: 1e-10, m_max: 60 },
        ),
        preset(
            "fig5-left",
            "inexact Arnoldi for exp(-A) v, A = Toeplitz(1, [2], 0.1, -1), n = 200, tol = 1e-10, eps_m = 0.1, m = 20",
            fig5_matrix(),
            NegExp,
            Study::Inexact { tol: 1e-10, eps_m: 0.1, m: 20 },
        ),
        preset(
            "fig5-right",
            "inexact Arnoldi for exp(-A) v, A = pde225, tol = 1e-10, eps_m = 0.1, m = 31",
            pde225(),
            NegExp,
            Study::Inexact { tol: 1e-10, eps_m: 0.1, m: 31 },
        ),
        preset(
            "ex.inex.expsqrt",
            "inexact Arnoldi for exp(-sqrt(A)) v, A = Toeplitz(-1, 1, [3], 0.1), n = 200, tol = 1e-10, eps_m = 0.1, m = 35",
            toeplitz(vec![r(-1.0), r(1.0), r(3.0), r(0.1)], 2, 200),
            ExpNegSqrt,
            Study::Inexact { tol: 1e-10, eps_m: 0.1, m: 35 },
        ),
    ]
}

pub fn preset_names() -> Vec<String> {
    presets().into_iter().map(|p| p.name).collect()
}

pub fn find_preset(name: &str) -> Result<Preset> {
    match presets().into_iter().find(|p| p.name == name) {
        Some(p) => Ok(p),
        None => bail!("unknown preset '{name}'; available presets: {}", preset_names().join(", ")),
    }
}
