//! Arnoldi approximation of `f(A) v`, residual monitoring, and the inexact
//! variant whose matrix-vector products are allowed to loosen as the entries
//! of `f(H_m) e_1` decay.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{exp_bound, exp_bound_value, expsqrt_bound, CROUZEIX};
use crate::error::{Error, Result};
use crate::matfun::{eval_matfun, MatrixFunctionKind};
use crate::matrix::{vector, ComplexMatrix, C64, ZERO};
use crate::regions::{inflate_for_perturbation, EllipseRegion};

/// `h_{k+1,k} <= BREAKDOWN_REL * |H|_F` ends the iteration.
pub const BREAKDOWN_REL: f64 = 1e-14;

/// A possibly inexact product `A v + w` with `|w| <= tolerance`.
pub trait MatVecOracle {
    fn dim(&self) -> usize;
    fn apply(&mut self, v: &[C64], tolerance: f64) -> Vec<C64>;
}

/// Exact dense product; the tolerance is ignored.
pub struct ExactMatVec<'a> {
    a: &'a ComplexMatrix,
}

impl<'a> ExactMatVec<'a> {
    pub fn new(a: &'a ComplexMatrix) -> Self {
        Self { a }
    }
}

impl MatVecOracle for ExactMatVec<'_> {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&mut self, v: &[C64], _tolerance: f64) -> Vec<C64> {
        self.a.matvec(v)
    }
}

/// Adds a seeded random perturbation of norm exactly `tolerance` to every
/// product and records it.
pub struct PerturbedMatVec<'a> {
    a: &'a ComplexMatrix,
    rng: ChaCha8Rng,
    perturbations: Vec<Vec<C64>>,
}

impl<'a> PerturbedMatVec<'a> {
    pub fn new(a: &'a ComplexMatrix, seed: u64) -> Self {
        Self { a, rng: ChaCha8Rng::seed_from_u64(seed), perturbations: Vec::new() }
    }

    /// `w_1, w_2, ...` in the order the products were requested.
    pub fn perturbations(&self) -> &[Vec<C64>] {
        &self.perturbations
    }
}

impl MatVecOracle for PerturbedMatVec<'_> {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&mut self, v: &[C64], tolerance: f64) -> Vec<C64> {
        let mut y = self.a.matvec(v);
        let w = if tolerance > 0.0 {
            let mut w: Vec<C64> = (0..y.len())
                .map(|_| C64::new(self.rng.sample(StandardNormal), self.rng.sample(StandardNormal)))
                .collect();
            let norm = vector::norm(&w);
            vector::scale(&mut w, tolerance / norm);
            vector::axpy(C64::new(1.0, 0.0), &w, &mut y);
            w
        } else {
            vec![ZERO; y.len()]
        };
        self.perturbations.push(w);
        y
    }
}

/// `A V_m = V_m H_m + h_next v_{m+1} e_m^T` (up to the recorded perturbations).
#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition {
    /// `v_1, ..., v_{m+1}`; only `m` vectors after a breakdown.
    basis: Vec<Vec<C64>>,
    hessenberg: ComplexMatrix,
    /// Subdiagonal `h_{k+1,k}` for `k = 1..m`; the last one is `h_next`.
    subdiagonal: Vec<f64>,
    pub h_next: f64,
    pub breakdown: bool,
    /// `|v|` of the starting vector.
    pub start_norm: f64,
    /// Matvec tolerances used at each step.
    pub tolerances: Vec<f64>,
}

impl ArnoldiDecomposition {
    pub fn steps(&self) -> usize {
        self.hessenberg.rows()
    }

    pub fn hessenberg(&self) -> &ComplexMatrix {
        &self.hessenberg
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// `n x k` matrix of the first `k` basis vectors.
    pub fn basis_matrix(&self, k: usize) -> ComplexMatrix {
        assert!(k >= 1 && k <= self.basis.len());
        let n = self.basis[0].len();
        ComplexMatrix::from_fn(n, k, |i, j| self.basis[j][i])
    }

    /// The decomposition after `j` steps of the same run.
    pub fn prefix(&self, j: usize) -> Result<Self> {
        let m = self.steps();
        if j == 0 || j > m {
            return Err(Error::invalid(format!("prefix length {j} outside 1..={m}")));
        }
        if j == m {
            return Ok(self.clone());
        }
        Ok(Self {
            basis: self.basis[..=j].to_vec(),
            hessenberg: self.hessenberg.leading(j, j),
            subdiagonal: self.subdiagonal[..j].to_vec(),
            h_next: self.subdiagonal[j - 1],
            breakdown: false,
            start_norm: self.start_norm,
            tolerances: self.tolerances[..j].to_vec(),
        })
    }

    /// `max |V^* V - I|` over the stored basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.basis.len();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in i..k {
                let g = vector::dot(&self.basis[i], &self.basis[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// `|A V_m - V_m H_m - h_next v_{m+1} e_m^T|_F`.
    pub fn relation_defect(&self, a: &ComplexMatrix) -> Result<f64> {
        let m = self.steps();
        let vm = self.basis_matrix(m);
        let mut r = &a.matmul(&vm)? - &vm.matmul(&self.hessenberg)?;
        if self.basis.len() > m {
            for (i, &v) in self.basis[m].iter().enumerate() {
                r[(i, m - 1)] -= v * self.h_next;
            }
        }
        Ok(r.frobenius_norm())
    }
}

/// Runs `m` Arnoldi steps with modified Gram-Schmidt and one full
/// reorthogonalization pass. Step `k` requests its product at `tolerances[k-1]`.
pub fn arnoldi(op: &mut dyn MatVecOracle, v: &[C64], m: usize, tolerances: &[f64]) -> Result<ArnoldiDecomposition> {
    let n = op.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch(format!("start vector has length {}, operator order {n}", v.len())));
    }
    if m == 0 || tolerances.len() != m {
        return Err(Error::invalid(format!(
            "need m >= 1 and one tolerance per step (m = {m}, {} given)",
            tolerances.len()
        )));
    }
    let start_norm = vector::norm(v);
    if !(start_norm > 0.0) || !start_norm.is_finite() {
        return Err(Error::invalid("start vector must be nonzero and finite"));
    }
    let mut first = v.to_vec();
    vector::scale(&mut first, 1.0 / start_norm);

    let mut basis = vec![first];
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut subdiagonal = Vec::with_capacity(m);
    let mut h_fro_sq = 0.0;
    let mut breakdown = false;
    for k in 0..m {
        let mut w = op.apply(&basis[k], tolerances[k]);
        let mut col = vec![ZERO; k + 1];
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let coef = vector::dot(q, &w);
                vector::axpy(-coef, q, &mut w);
                col[i] += coef;
            }
        }
        h_fro_sq += col.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let h = vector::norm(&w);
        columns.push(col);
        if h <= BREAKDOWN_REL * h_fro_sq.sqrt() {
            subdiagonal.push(0.0);
            breakdown = true;
            break;
        }
        h_fro_sq += h * h;
        subdiagonal.push(h);
        vector::scale(&mut w, 1.0 / h);
        basis.push(w);
    }
    let steps = columns.len();
    let mut hessenberg = ComplexMatrix::zeros(steps, steps);
    for (j, col) in columns.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            hessenberg[(i, j)] = z;
        }
        if j + 1 < steps {
            hessenberg[(j + 1, j)] = C64::new(subdiagonal[j], 0.0);
        }
    }
    Ok(ArnoldiDecomposition {
        basis,
        hessenberg,
        h_next: subdiagonal[steps - 1],
        subdiagonal,
        breakdown,
        start_norm,
        tolerances: tolerances[..steps].to_vec(),
    })
}

/// First column of `f(H_m)`, scaled by the start norm.
fn projected_solution(dec: &ArnoldiDecomposition, kind: MatrixFunctionKind) -> Result<Vec<C64>> {
    let f = eval_matfun(kind, dec.hessenberg())?;
    Ok((0..dec.steps()).map(|i| f[(i, 0)] * dec.start_norm).collect())
}

fn combine_basis(dec: &ArnoldiDecomposition, coeffs: &[C64]) -> Vec<C64> {
    let mut y = vec![ZERO; dec.basis[0].len()];
    for (q, &c) in dec.basis.iter().zip(coeffs) {
        vector::axpy(c, q, &mut y);
    }
    y
}

/// `|v| V_m f(H_m) e_1`.
pub fn krylov_approx(dec: &ArnoldiDecomposition, kind: MatrixFunctionKind) -> Result<Vec<C64>> {
    Ok(combine_basis(dec, &projected_solution(dec, kind)?))
}

/// `|v| h_{m+1,m} |e_m^T f(H_m) e_1|`, the norm of the differential-equation
/// residual in exact arithmetic.
pub fn residual_rm(dec: &ArnoldiDecomposition, kind: MatrixFunctionKind) -> Result<f64> {
    if dec.h_next == 0.0 {
        return Ok(0.0);
    }
    let y = projected_solution(dec, kind)?;
    Ok(dec.h_next * y[dec.steps() - 1].norm())
}

/// `|A y_m - V_m H_m f(H_m) e_1 |v||`, evaluated directly with the true `A`.
pub fn differential_residual(a: &ComplexMatrix, dec: &ArnoldiDecomposition, kind: MatrixFunctionKind) -> Result<f64> {
    let coeffs = projected_solution(dec, kind)?;
    let y = combine_basis(dec, &coeffs);
    let h_y = dec.hessenberg().matvec(&coeffs);
    let mut r = a.matvec(&y);
    for (q, &c) in dec.basis.iter().zip(&h_y) {
        vector::axpy(-c, q, &mut r);
    }
    Ok(vector::norm(&r))
}

/// A-priori bound on the residual of the Arnoldi approximation of `e^{-A} v`
/// (unit `v`) when `W(A)` lies in `e` and every `h_{m+1,m} <= h_bound`.
/// `None` for `m <= b + 1`.
pub fn apriori_residual_bound(e: &EllipseRegion, h_bound: f64, m: usize) -> Option<f64> {
    if m == 0 || (m as f64) <= e.b + 1.0 {
        return None;
    }
    let negated = EllipseRegion { center: -e.center, ..*e };
    Some(h_bound * exp_bound_value(&negated, m as u64 - 1))
}

/// Smallest `m <= m_max` whose a-priori bound is below `tol`.
pub fn apriori_steps(e: &EllipseRegion, h_bound: f64, tol: f64, m_max: usize) -> Option<usize> {
    (1..=m_max).find(|&m| apriori_residual_bound(e, h_bound, m).is_some_and(|b| b < tol))
}

/// Per-step matvec tolerances for an inexact Arnoldi run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InexactSchedule {
    pub tol: f64,
    pub eps_m: f64,
    pub m: usize,
    /// Entry bounds `s_j`; empty for a constant schedule.
    pub s: Vec<f64>,
    pub eps_bar: Vec<f64>,
}

impl InexactSchedule {
    /// `eps_j = tol/m` at every step.
    pub fn constant(tol: f64, m: usize) -> Self {
        let eps = tol / m as f64;
        Self { tol, eps_m: eps * (m as f64).sqrt(), m, s: Vec::new(), eps_bar: vec![eps; m] }
    }

    /// `sqrt(sum eps_bar_j^2)`.
    pub fn total(&self) -> f64 {
        self.eps_bar.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

/// Relaxed tolerances: `(tol/m) max(1, 1/s_j)` while that respects the
/// remaining budget spread over the remaining steps, the budget share otherwise.
///
/// The budget `sqrt(sum eps_bar_j^2) <= eps_m` is guaranteed when `tol < eps_m`.
/// For `tol >= eps_m` a step with `s_j > 1` can overshoot it.
pub fn relaxation_schedule(tol: f64, eps_m: f64, m: usize, s: &[f64]) -> Result<InexactSchedule> {
    if !(tol > 0.0 && eps_m > 0.0) || m == 0 || s.len() != m {
        return Err(Error::invalid(format!(
            "need tol > 0, eps_m > 0 and m = len(s) >= 1 (tol = {tol}, eps_m = {eps_m}, m = {m}, len(s) = {})",
            s.len()
        )));
    }
    if let Some(bad) = s.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::invalid(format!("entry bounds must be positive, got {bad}")));
    }
    let mf = m as f64;
    let mut used_sq = 0.0;
    let mut eps_bar = Vec::with_capacity(m);
    for (j, &sj) in s.iter().enumerate() {
        let share = (eps_m * eps_m - used_sq).max(0.0).sqrt() / (m - j) as f64;
        let e = if tol / (mf * sj) < share {
            tol / mf * (1.0f64).max(1.0 / sj)
        } else {
            // the share spends the budget exactly; shave rounding so the total never exceeds it
            let mut e = share;
            while (used_sq + e * e).sqrt() > eps_m {
                e *= 1.0 - 4.0 * f64::EPSILON;
            }
            e
        };
        used_sq += e * e;
        eps_bar.push(e);
    }
    Ok(InexactSchedule { tol, eps_m, m, s: s.to_vec(), eps_bar })
}

/// Entry bounds `s_j >= |e_j^T f(H_m) e_1|`, `j = 1..m`, for the region `e` of
/// `W(A)` inflated by the perturbation budget `eps_m`. Steps where the decay
/// envelope is not yet valid use the norm bound `11.08 sup |f|`.
pub fn schedule_entry_bounds(kind: MatrixFunctionKind, e: &EllipseRegion, eps_m: f64, m: usize) -> Result<Vec<f64>> {
    let inflated = inflate_for_perturbation(e, eps_m)?;
    let (lo, hi) = inflated.real_range();
    let (envelope, sup) = match kind {
        MatrixFunctionKind::Exp => (exp_bound(&inflated)?, hi.exp()),
        MatrixFunctionKind::NegExp => {
            (exp_bound(&EllipseRegion { center: -inflated.center, ..inflated })?, (-lo).exp())
        }
        MatrixFunctionKind::ExpNegSqrt => (expsqrt_bound(&inflated.horizontal_cover())?, 1.0),
        MatrixFunctionKind::InvSqrt | MatrixFunctionKind::Phi1 => {
            return Err(Error::invalid(format!("no relaxation entry bound for {kind}")));
        }
    };
    (1..=m as u64).map(|j| Ok(envelope.value(j - 1)?.unwrap_or(CROUZEIX * sup))).collect()
}

/// One row of a residual history; `step` is 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Computed residual `r_j`.
    pub residual: f64,
    /// A-priori bound at this step, when attached and valid.
    pub bound: Option<f64>,
    pub eps_bar: f64,
    /// `|v| sum_{i <= j} eps_bar_i |e_i^T f(H_j) e_1|`.
    pub gap_bound: f64,
}

#[derive(Clone, Debug)]
pub struct InexactRun {
    pub decomposition: ArnoldiDecomposition,
    pub history: Vec<StepRecord>,
}

impl InexactRun {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.residual)
    }

    /// Fills `bound` with the a-priori residual bound using the computed `h_{j+1,j}`.
    pub fn attach_apriori(&mut self, e: &EllipseRegion) {
        for rec in &mut self.history {
            let h = self.decomposition.subdiagonal[rec.step - 1];
            rec.bound = apriori_residual_bound(e, h, rec.step).map(|b| b * self.decomposition.start_norm);
        }
    }

    /// Header `step,r_m,bound,eps_bar,gap_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,r_m,bound,eps_bar,gap_bound\n");
        for r in &self.history {
            let bound = r.bound.map_or_else(|| "inf".to_string(), |b| format!("{b:.16e}"));
            writeln!(out, "{},{:.16e},{bound},{:.16e},{:.16e}", r.step, r.residual, r.eps_bar, r.gap_bound)
                .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Per-step residuals and gap bounds of a finished run.
pub fn residual_history(dec: &ArnoldiDecomposition, kind: MatrixFunctionKind) -> Result<Vec<StepRecord>> {
    (1..=dec.steps())
        .map(|j| {
            let p = dec.prefix(j)?;
            let y = projected_solution(&p, kind)?;
            let gap_bound = p.tolerances.iter().zip(&y).map(|(e, yi)| e * yi.norm()).sum();
            let residual = if p.h_next == 0.0 { 0.0 } else { p.h_next * y[j - 1].norm() };
            Ok(StepRecord { step: j, residual, bound: None, eps_bar: p.tolerances[j - 1], gap_bound })
        })
        .collect()
}

/// Arnoldi with per-step tolerances from `schedule`, reporting `r_j` and the
/// computable bound on `| |r_j| - r_j |` after every step.
pub fn inexact_arnoldi_run(
    op: &mut dyn MatVecOracle,
    v: &[C64],
    kind: MatrixFunctionKind,
    schedule: &InexactSchedule,
) -> Result<InexactRun> {
    let decomposition = arnoldi(op, v, schedule.m, &schedule.eps_bar)?;
    let history = residual_history(&decomposition, kind)?;
    Ok(InexactRun { decomposition, history })
}
