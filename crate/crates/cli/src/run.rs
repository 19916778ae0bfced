//! End-to-end preset runs: build the matrix, fit its region, evaluate the
//! envelope and the dense oracle, write the artifacts, and check dominance.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use faber_decay::bounds::{exp_bound, invsqrt_bound, kron_entry_bound, phi1_bound};
use faber_decay::krylov::{differential_residual, residual_history, schedule_entry_bounds, InexactRun};
use faber_decay::matrix::bandwidths;
use faber_decay::{
    arnoldi, band_distance, column_magnitudes, eval_matfun, fit_disk, fit_ellipse, fov_boundary, inexact_arnoldi_run,
    kron_sum, mtx_read, relaxation_schedule, spectral_norm, toeplitz_build, ComplexMatrix, ExactMatVec,
    InexactSchedule, MatrixFunctionKind, PerturbedMatVec, Region, C64,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{decay_csv, decay_plot, fov_csv, history_plot, num, DecayRow};
use crate::preset::{ColumnBound, MatrixRecipe, Preset, Study, PDE225_ENV};

/// Absolute slack allowed when comparing an entry (or residual gap) with its bound.
pub const DOMINANCE_SLACK: f64 = 1e-13;
/// Largest allowed ratio between the final residuals of the relaxed and constant-accuracy runs.
pub const RESIDUAL_AGREEMENT: f64 = 10.0;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Matrix Market file for presets that need one.
    pub mtx_path: Option<PathBuf>,
    /// Overrides the preset's seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based row or step.
    pub index: usize,
    pub value: f64,
    pub bound: f64,
    pub what: String,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub preset: String,
    pub dominance: bool,
    pub violations: Vec<Violation>,
    /// The artifact that a replay must reproduce byte for byte.
    pub primary: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Square matrix of a recipe; for Kronecker sums also the factor.
pub struct LoadedMatrix {
    pub matrix: ComplexMatrix,
    pub factor: Option<ComplexMatrix>,
    pub beta: usize,
    pub gamma: usize,
    pub source: String,
}

pub fn resolve_mtx_path(recipe: &MatrixRecipe, mtx_path: Option<&Path>) -> Result<Option<PathBuf>> {
    let MatrixRecipe::MatrixMarket { identifier, path } = recipe else {
        return Ok(None);
    };
    if let Some(p) = mtx_path.map(Path::to_path_buf).or_else(|| path.clone()) {
        return Ok(Some(p));
    }
    match std::env::var_os(PDE225_ENV) {
        Some(p) => Ok(Some(PathBuf::from(p))),
        None => bail!(
            "this preset needs the Matrix Market matrix {identifier}, which is not bundled; \
             download it and pass --mtx PATH or set {PDE225_ENV}"
        ),
    }
}

pub fn load_matrix(recipe: &MatrixRecipe, mtx_path: Option<&Path>) -> Result<LoadedMatrix> {
    Ok(match recipe {
        MatrixRecipe::Toeplitz { spec } => {
            let b = toeplitz_build(spec)?;
            LoadedMatrix {
                beta: b.beta(),
                gamma: b.gamma(),
                matrix: b.into_matrix(),
                factor: None,
                source: "toeplitz".into(),
            }
        }
        MatrixRecipe::KroneckerSum { factor } => {
            let f = toeplitz_build(factor)?;
            LoadedMatrix {
                beta: f.beta(),
                gamma: f.gamma(),
                matrix: kron_sum(f.matrix(), f.matrix())?,
                factor: Some(f.into_matrix()),
                source: "kronecker sum".into(),
            }
        }
        MatrixRecipe::MatrixMarket { .. } => {
            let path = resolve_mtx_path(recipe, mtx_path)?.expect("matrix market recipe has a path");
            let a = mtx_read(&path).with_context(|| format!("reading {}", path.display()))?;
            let (beta, gamma) = bandwidths(&a)?;
            LoadedMatrix { matrix: a, factor: None, beta, gamma, source: path.display().to_string() }
        }
    })
}

fn normalized_ones(n: usize) -> Vec<C64> {
    vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n]
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
    files.push(p.clone());
    Ok(p)
}

fn region_json(region: &Region) -> Value {
    serde_json::to_value(region).expect("regions serialize")
}

/// Runs a preset, writing its artifacts into `opts.out_dir`.
pub fn run_preset(preset: &Preset, opts: &RunOptions) -> Result<RunReport> {
    fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    let seed = opts.seed.unwrap_or(preset.seed);
    let started = Instant::now();
    let t = Instant::now();
    let mtx_path = resolve_mtx_path(&preset.matrix, opts.mtx_path.as_deref())?;
    let loaded = load_matrix(&preset.matrix, mtx_path.as_deref())?;
    let build_ms = ms(t);

    let mut files = Vec::new();
    let (primary, violations, mut summary) = match &preset.study {
        Study::Column { column, bound } => run_column(preset, &loaded, *column, bound, &opts.out_dir, &mut files)?,
        Study::Arnoldi { tol, m_max } => run_arnoldi(preset, &loaded, *tol, *m_max, &opts.out_dir, &mut files)?,
        Study::Inexact { tol, eps_m, m } => {
            run_inexact(preset, &loaded, *tol, *eps_m, *m, seed, &opts.out_dir, &mut files)?
        }
    };
    let dominance = violations.is_empty();
    let record = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "preset": preset,
        "seed": seed,
        "mtx_path": mtx_path,
        "matrix": { "order": loaded.matrix.rows(), "beta": loaded.beta, "gamma": loaded.gamma, "source": loaded.source },
        "primary": primary.file_name().map(|f| f.to_string_lossy().into_owned()),
        "dominance": dominance,
        "violations": violations,
        "results": summary.take(),
        "timings_ms": { "build": build_ms, "total": ms(started) },
    });
    let json_text = serde_json::to_string_pretty(&record)?;
    write(&opts.out_dir, "run.json", &json_text, &mut files)?;
    Ok(RunReport { preset: preset.name.clone(), dominance, violations, primary, files, summary: record })
}

fn run_column(
    preset: &Preset,
    loaded: &LoadedMatrix,
    column: usize,
    bound: &ColumnBound,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(PathBuf, Vec<Violation>, Value)> {
    let a = &loaded.matrix;
    let fitted = loaded.factor.as_ref().unwrap_or(a);
    let t = Instant::now();
    let samples = fov_boundary(fitted, preset.angles)?;
    let fov_ms = ms(t);

    enum Envelope {
        Single(faber_decay::DecayEnvelope),
        Kron(faber_decay::DiskRegion, usize),
    }
    let (region, envelope): (Region, Envelope) = match bound {
        ColumnBound::Exp => {
            let e = fit_ellipse(&samples, preset.safety)?;
            (e.into(), Envelope::Single(exp_bound(&e)?))
        }
        ColumnBound::InvSqrt { eps } => {
            let e = fit_ellipse(&samples, preset.safety)?.horizontal_cover();
            (e.into(), Envelope::Single(invsqrt_bound(&e, *eps)?))
        }
        ColumnBound::Phi1 => {
            let d = fit_disk(&samples, preset.safety)?;
            (d.into(), Envelope::Single(phi1_bound(&d)))
        }
        ColumnBound::KronPhi1 => {
            let d = fit_disk(&samples, preset.safety)?;
            let n = loaded.factor.as_ref().map_or(a.rows(), ComplexMatrix::rows);
            (d.into(), Envelope::Kron(d, n))
        }
    };
    write(dir, "fov.csv", &fov_csv(&samples, &region), files)?;

    let t = Instant::now();
    let f = eval_matfun(preset.function, a)?;
    let oracle_ms = ms(t);
    let t = Instant::now();
    let mut rows = Vec::with_capacity(a.rows());
    for (row, entry) in column_magnitudes(&f, column)? {
        let bound = match &envelope {
            Envelope::Single(env) if row != column => {
                env.value(band_distance(row, column, loaded.beta, loaded.gamma)?)?
            }
            Envelope::Single(_) => None,
            Envelope::Kron(d, n) => kron_entry_bound(d, loaded.beta, loaded.gamma, *n, row, column)?,
        };
        rows.push(DecayRow { row, entry, bound });
    }
    let bound_ms = ms(t);

    let violations: Vec<Violation> = rows
        .iter()
        .filter_map(|r| {
            r.bound.filter(|&b| !(r.entry <= b + DOMINANCE_SLACK)).map(|b| Violation {
                index: r.row,
                value: r.entry,
                bound: b,
                what: "entry exceeds envelope".into(),
            })
        })
        .collect();
    let valid = rows.iter().filter(|r| r.bound.is_some()).count();
    // Entries at or below the slack are under the oracle's rounding floor; their ratios carry no information.
    let resolved = |r: &&DecayRow| r.entry > DOMINANCE_SLACK;
    let tightest = rows.iter().filter(resolved).filter_map(|r| r.bound.map(|b| r.entry / b)).fold(0.0, f64::max);
    let unresolved_above = rows.iter().filter(|r| !resolved(r) && r.bound.is_some_and(|b| r.entry > b)).count();
    let primary = write(dir, "decay.csv", &decay_csv(&rows), files)?;
    write(dir, "plot.gp", &decay_plot(&preset.summary), files)?;
    let envelope_desc = match &envelope {
        Envelope::Single(env) => env.description.clone(),
        Envelope::Kron(d, n) => {
            format!("Kronecker (1-exp(-z))/z product bound, factor order {n}, disk c={}, R={}", d.center, d.radius)
        }
    };
    let summary = json!({
        "region": region_json(&region),
        "envelope": envelope_desc,
        "column": column,
        "valid_rows": valid,
        "max_entry_over_bound_resolved": tightest,
        "unresolved_entries_above_bound": unresolved_above,
        "timings_ms": { "fov": fov_ms, "oracle": oracle_ms, "bounds": bound_ms },
    });
    Ok((primary, violations, summary))
}

fn run_arnoldi(
    preset: &Preset,
    loaded: &LoadedMatrix,
    tol: f64,
    m_max: usize,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(PathBuf, Vec<Violation>, Value)> {
    if preset.function != MatrixFunctionKind::NegExp {
        bail!("the a-priori residual bound is only available for exp(-A)");
    }
    let a = &loaded.matrix;
    let samples = fov_boundary(a, preset.angles)?;
    let e = fit_ellipse(&samples, preset.safety)?;
    write(dir, "fov.csv", &fov_csv(&samples, &e.into()), files)?;

    let m = m_max.min(a.rows());
    let dec = arnoldi(&mut ExactMatVec::new(a), &normalized_ones(a.rows()), m, &vec![0.0; m])?;
    let mut run = InexactRun { history: residual_history(&dec, preset.function)?, decomposition: dec };
    run.attach_apriori(&e);
    let calibrated = run.history.iter().find(|r| r.bound.is_some_and(|b| b < tol)).map(|r| r.step);
    let norm = spectral_norm(a);
    let with_norm = faber_decay::krylov::apriori_steps(&e, norm, tol, 10 * m_max);

    let violations: Vec<Violation> = run
        .history
        .iter()
        .filter_map(|r| {
            r.bound.filter(|&b| !(r.residual <= b + DOMINANCE_SLACK)).map(|b| Violation {
                index: r.step,
                value: r.residual,
                bound: b,
                what: "residual exceeds a-priori bound".into(),
            })
        })
        .collect();
    let primary = write(dir, "history.csv", &run.to_csv(), files)?;
    write(dir, "plot.gp", &history_plot(&preset.summary, &["history.csv"]), files)?;
    let summary = json!({
        "region": region_json(&e.into()),
        "tol": tol,
        "steps_run": run.decomposition.steps(),
        "breakdown": run.decomposition.breakdown,
        "orthonormality_defect": run.decomposition.orthonormality_defect(),
        "apriori_steps_computed_h": calibrated,
        "apriori_steps_norm_h": with_norm,
        "spectral_norm": norm,
    });
    Ok((primary, violations, summary))
}

/// Per-step comparison of the true residual with the computed one.
#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub step: usize,
    pub run: &'static str,
    pub true_residual: f64,
    pub r_m: f64,
    pub measured_gap: f64,
    pub gap_bound: f64,
}

fn gap_rows(a: &ComplexMatrix, run: &InexactRun, kind: MatrixFunctionKind, label: &'static str) -> Result<Vec<GapRow>> {
    run.history
        .iter()
        .map(|rec| {
            let p = run.decomposition.prefix(rec.step)?;
            let true_residual = differential_residual(a, &p, kind)?;
            Ok(GapRow {
                step: rec.step,
                run: label,
                true_residual,
                r_m: rec.residual,
                measured_gap: (true_residual - rec.residual).abs(),
                gap_bound: rec.gap_bound,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_inexact(
    preset: &Preset,
    loaded: &LoadedMatrix,
    tol: f64,
    eps_m: f64,
    m: usize,
    seed: u64,
    dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(PathBuf, Vec<Violation>, Value)> {
    let a = &loaded.matrix;
    let kind = preset.function;
    let samples = fov_boundary(a, preset.angles)?;
    let e = fit_ellipse(&samples, preset.safety)?;
    write(dir, "fov.csv", &fov_csv(&samples, &e.into()), files)?;

    let s = schedule_entry_bounds(kind, &e, eps_m, m)?;
    let relaxed = relaxation_schedule(tol, eps_m, m, &s)?;
    let constant = InexactSchedule::constant(tol, m);
    let v = normalized_ones(a.rows());
    let mut run_c = inexact_arnoldi_run(&mut PerturbedMatVec::new(a, seed), &v, kind, &constant)?;
    let mut run_r = inexact_arnoldi_run(&mut PerturbedMatVec::new(a, seed.wrapping_add(1)), &v, kind, &relaxed)?;
    if kind == MatrixFunctionKind::NegExp {
        run_c.attach_apriori(&e);
        run_r.attach_apriori(&e);
    }

    let mut gaps = gap_rows(a, &run_c, kind, "constant")?;
    gaps.extend(gap_rows(a, &run_r, kind, "relaxed")?);
    let mut violations: Vec<Violation> = gaps
        .iter()
        .filter(|g| !(g.measured_gap <= g.gap_bound + DOMINANCE_SLACK))
        .map(|g| Violation {
            index: g.step,
            value: g.measured_gap,
            bound: g.gap_bound,
            what: format!("{} run: residual gap exceeds its bound", g.run),
        })
        .collect();
    let (fc, fr) = (run_c.final_residual(), run_r.final_residual());
    let ratio = if fc == fr { 1.0 } else { (fc / fr).max(fr / fc) };
    if !(ratio <= RESIDUAL_AGREEMENT) {
        violations.push(Violation {
            index: m,
            value: ratio,
            bound: RESIDUAL_AGREEMENT,
            what: format!(
                "final residuals differ by more than a factor {RESIDUAL_AGREEMENT} (constant {fc:e}, relaxed {fr:e})"
            ),
        });
    }
    let max_gap_ratio =
        gaps.iter().filter(|g| g.gap_bound > 0.0).map(|g| g.measured_gap / g.gap_bound).fold(0.0, f64::max);

    let mut gap_csv = String::from("step,run,true_residual,r_m,measured_gap,gap_bound\n");
    for g in &gaps {
        gap_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g.step,
            g.run,
            num(g.true_residual),
            num(g.r_m),
            num(g.measured_gap),
            num(g.gap_bound)
        ));
    }
    write(dir, "history_constant.csv", &run_c.to_csv(), files)?;
    let primary = write(dir, "history_relaxed.csv", &run_r.to_csv(), files)?;
    write(dir, "gap.csv", &gap_csv, files)?;
    write(dir, "plot.gp", &history_plot(&preset.summary, &["history_constant.csv", "history_relaxed.csv"]), files)?;
    let summary = json!({
        "region": region_json(&e.into()),
        "tol": tol,
        "eps_m": eps_m,
        "m": m,
        "seeds": { "constant": seed, "relaxed": seed.wrapping_add(1) },
        "entry_bounds": s,
        "eps_bar": relaxed.eps_bar,
        "budget_used": relaxed.total(),
        "final_residual": { "constant": fc, "relaxed": fr, "ratio": ratio },
        "max_gap_over_bound": max_gap_ratio,
        "max_tol_gap": gaps.iter().filter(|g| g.run == "relaxed").map(|g| g.measured_gap).fold(0.0, f64::max),
    });
    Ok((primary, violations, summary))
}

/// Re-runs the preset recorded in a `run.json` into `out_dir` and reports
/// whether the primary artifact is byte-identical to the recorded one.
pub fn replay(run_json: &Path, out_dir: &Path) -> Result<(RunReport, bool)> {
    let text = fs::read_to_string(run_json).with_context(|| format!("reading {}", run_json.display()))?;
    let record: Value = serde_json::from_str(&text)?;
    let preset: Preset = serde_json::from_value(record["preset"].clone()).context("run.json has no preset")?;
    let seed = record["seed"].as_u64().context("run.json has no seed")?;
    let mtx_path = record["mtx_path"].as_str().map(PathBuf::from);
    let primary_name = record["primary"].as_str().context("run.json names no primary artifact")?;
    let original = run_json.parent().unwrap_or(Path::new(".")).join(primary_name);
    let report = run_preset(&preset, &RunOptions { out_dir: out_dir.to_path_buf(), mtx_path, seed: Some(seed) })?;
    let same =
        fs::read(&original).with_context(|| format!("reading {}", original.display()))? == fs::read(&report.primary)?;
    Ok((report, same))
}
