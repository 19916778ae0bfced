use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use faber_decay::bounds::{kron_entry_bound, laplace_stieltjes_bound};
use faber_decay::regions::{DEFAULT_ANGLES, DEFAULT_SAFETY};
use faber_decay::{
    column_magnitudes, eval_matfun, exp_bound, expsqrt_bound, fit_disk, fit_ellipse, fov_boundary, invsqrt_bound,
    phi1_bound, DiskRegion, EllipseRegion, MatrixFunctionKind, Region, StieltjesMeasure, C64,
};
use faber_decay_cli::output::{fov_csv, num};
use faber_decay_cli::parse::{parse_range, parse_reals, parse_stencil};
use faber_decay_cli::preset::{ColumnBound, MatrixRecipe, Preset, Study, DEFAULT_SEED};
use faber_decay_cli::run::{load_matrix, replay, run_preset, RunOptions, RunReport};
use faber_decay_cli::{find_preset, presets};

#[derive(Parser)]
#[command(
    name = "faber-decay",
    version,
    about = "Decay envelopes for entries of functions of banded non-normal matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the reproduction presets.
    Presets,
    /// Sample the field-of-values boundary and fit an enclosing region (CSV on stdout).
    Fov {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long, value_enum, default_value_t = RegionKind::Ellipse)]
        region: RegionKind,
        #[arg(long, default_value_t = DEFAULT_ANGLES)]
        angles: usize,
        #[arg(long, default_value_t = DEFAULT_SAFETY)]
        safety: f64,
    },
    /// Evaluate a decay envelope on a given region (CSV `xi,bound,valid` on stdout).
    Bound(BoundArgs),
    /// Magnitudes of one column of f(A) from a dense evaluation (CSV `row,entry` on stdout).
    Oracle {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        function: MatrixFunctionKind,
        /// 1-based column.
        #[arg(long)]
        column: usize,
    },
    /// Check one column of f(A) against its envelope and write the artifacts.
    Column {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long)]
        function: MatrixFunctionKind,
        #[arg(long)]
        column: usize,
        /// Exclusion radius around the cut, for invsqrt.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact Arnoldi for exp(-A) v against the a-priori residual bound.
    Arnoldi {
        #[command(flatten)]
        matrix: MatrixArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 40)]
        m_max: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Relaxed and constant-accuracy inexact Arnoldi side by side.
    Inexact {
        #[command(flatten)]
        matrix: MatrixArgs,
        /// negexp or expsqrt.
        #[arg(long, default_value = "negexp")]
        function: MatrixFunctionKind,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0.1)]
        eps_m: f64,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run presets (a name, or `all`) and write their artifacts under --out/<preset>/.
    Reproduce {
        /// Preset name or `all`.
        target: Option<String>,
        #[arg(long)]
        list: bool,
        /// Number of presets run concurrently as child processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-run a recorded run.json and check the primary artifact is byte-identical.
    Replay {
        run_json: PathBuf,
        #[arg(long, env = "FABER_DECAY_OUT", default_value = "faber-decay-out")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, env = "FABER_DECAY_OUT", default_value = "faber-decay-out")]
    out: PathBuf,
    /// Matrix Market file for presets built on an external matrix.
    #[arg(long = "mtx-file")]
    mtx_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct MatrixArgs {
    /// Take the matrix of a preset.
    #[arg(long, conflicts_with_all = ["toeplitz", "mtx"])]
    preset: Option<String>,
    /// Toeplitz stencil with the diagonal value bracketed, e.g. "-i,[i],-2".
    #[arg(long, allow_hyphen_values = true, requires = "n")]
    toeplitz: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Use the Kronecker sum A (+) A of the Toeplitz matrix.
    #[arg(long, requires = "toeplitz")]
    kron: bool,
    /// Matrix Market file.
    #[arg(long)]
    mtx: Option<PathBuf>,
}

impl MatrixArgs {
    fn recipe(&self) -> Result<MatrixRecipe> {
        if let Some(name) = &self.preset {
            return Ok(find_preset(name)?.matrix);
        }
        if let Some(stencil) = &self.toeplitz {
            let spec = parse_stencil(stencil, self.n.context("--toeplitz needs --n")?)?;
            return Ok(if self.kron {
                MatrixRecipe::KroneckerSum { factor: spec }
            } else {
                MatrixRecipe::Toeplitz { spec }
            });
        }
        if let Some(path) = &self.mtx {
            return Ok(MatrixRecipe::MatrixMarket { identifier: path.display().to_string(), path: Some(path.clone()) });
        }
        bail!("give a matrix with --preset, --toeplitz/--n, or --mtx")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionKind {
    Ellipse,
    Disk,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundFunction {
    Exp,
    Invsqrt,
    Expsqrt,
    Phi1,
    /// Laplace–Stieltjes quadrature envelope; pick the measure with --measure.
    Laplace,
    /// Kronecker-sum entry bound for (1-exp(-z))/z; needs --n and --col, rows come from --xi.
    KronPhi1,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureKind {
    Inverse,
    Phi1,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum)]
    function: BoundFunction,
    /// Ellipse "a,b,center_re[,center_im]".
    #[arg(long, allow_hyphen_values = true, conflicts_with = "disk")]
    ellipse: Option<String>,
    /// Disk "center_re[,center_im],radius".
    #[arg(long, allow_hyphen_values = true)]
    disk: Option<String>,
    /// Band distances, e.g. 1..30.
    #[arg(long, default_value = "1..30")]
    xi: String,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = MeasureKind::Phi1)]
    measure: MeasureKind,
    /// Factor bandwidths "beta,gamma" for kron-phi1.
    #[arg(long, default_value = "1,1")]
    bands: String,
    /// Factor order for kron-phi1.
    #[arg(long)]
    n: Option<usize>,
    /// 1-based column for kron-phi1; rows are taken from --xi.
    #[arg(long)]
    col: Option<usize>,
}

fn parse_ellipse(text: &str) -> Result<EllipseRegion> {
    let v = parse_reals(text)?;
    match v.as_slice() {
        [a, b, re] => Ok(EllipseRegion::new(C64::new(*re, 0.0), *a, *b)?),
        [a, b, re, im] => Ok(EllipseRegion::new(C64::new(*re, *im), *a, *b)?),
        _ => bail!("--ellipse wants a,b,center_re[,center_im]"),
    }
}

fn parse_disk(text: &str) -> Result<DiskRegion> {
    let v = parse_reals(text)?;
    match v.as_slice() {
        [re, r] => Ok(DiskRegion::new(C64::new(*re, 0.0), *r)?),
        [re, im, r] => Ok(DiskRegion::new(C64::new(*re, *im), *r)?),
        _ => bail!("--disk wants center_re[,center_im],radius"),
    }
}

fn bound_table(args: &BoundArgs) -> Result<String> {
    let xis = parse_range(&args.xi)?;
    let ellipse = || parse_ellipse(args.ellipse.as_deref().context("this function needs --ellipse")?);
    let disk = || parse_disk(args.disk.as_deref().context("this function needs --disk")?);
    let envelope = match args.function {
        BoundFunction::Exp => Some(exp_bound(&ellipse()?)?),
        BoundFunction::Invsqrt => Some(invsqrt_bound(&ellipse()?, args.eps)?),
        BoundFunction::Expsqrt => Some(expsqrt_bound(&ellipse()?)?),
        BoundFunction::Phi1 => Some(phi1_bound(&disk()?)),
        BoundFunction::Laplace | BoundFunction::KronPhi1 => None,
    };
    if let Some(env) = envelope {
        eprintln!("{}", env.description);
        return Ok(env.to_csv(xis)?);
    }
    let d = disk()?;
    let mut out = String::new();
    if let BoundFunction::Laplace = args.function {
        let mu = match args.measure {
            MeasureKind::Inverse => StieltjesMeasure::inverse(),
            MeasureKind::Phi1 => StieltjesMeasure::phi1(),
        };
        out.push_str("xi,bound,valid\n");
        for xi in xis {
            out.push_str(&format!("{xi},{},1\n", num(laplace_stieltjes_bound(&mu, &d, xi)?)));
        }
    } else {
        let bands = parse_reals(&args.bands)?;
        let [beta, gamma] = bands.as_slice() else { bail!("--bands wants beta,gamma") };
        let n = args.n.context("kron-phi1 needs --n")?;
        let col = args.col.context("kron-phi1 needs --col")?;
        out.push_str("row,bound,valid\n");
        for row in xis {
            match kron_entry_bound(&d, *beta as usize, *gamma as usize, n, row as usize, col)? {
                Some(b) => out.push_str(&format!("{row},{},1\n", num(b))),
                None => out.push_str(&format!("{row},inf,0\n")),
            }
        }
    }
    Ok(out)
}

fn custom_preset(name: &str, matrix: MatrixRecipe, function: MatrixFunctionKind, study: Study) -> Preset {
    Preset {
        name: name.into(),
        summary: format!("{name} run for {function}"),
        matrix,
        function,
        study,
        angles: DEFAULT_ANGLES,
        safety: DEFAULT_SAFETY,
        seed: DEFAULT_SEED,
    }
}

fn report(r: &RunReport) {
    let verdict = if r.dominance { "dominance holds" } else { "DOMINANCE VIOLATED" };
    println!("{}: {verdict}; artifacts in {}", r.preset, r.primary.parent().unwrap_or(Path::new(".")).display());
    for v in r.violations.iter().take(10) {
        println!("  index {}: {} = {:e} > {:e}", v.index, v.what, v.value, v.bound);
    }
    if r.violations.len() > 10 {
        println!("  ... {} more", r.violations.len() - 10);
    }
}

fn run_one(preset: &Preset, run: &RunArgs, nested: bool) -> Result<bool> {
    let out_dir = if nested { run.out.join(&preset.name) } else { run.out.clone() };
    let r = run_preset(preset, &RunOptions { out_dir, mtx_path: run.mtx_file.clone(), seed: run.seed })?;
    report(&r);
    Ok(r.dominance)
}

fn external_file_available(preset: &Preset, run: &RunArgs) -> bool {
    !preset.needs_external_file()
        || run.mtx_file.is_some()
        || std::env::var_os(faber_decay_cli::preset::PDE225_ENV).is_some()
}

/// Runs every preset, `jobs` at a time as child processes of this executable.
fn reproduce_all(run: &RunArgs, jobs: usize) -> Result<bool> {
    let (runnable, skipped): (Vec<Preset>, Vec<Preset>) =
        presets().into_iter().partition(|p| external_file_available(p, run));
    for p in &skipped {
        println!(
            "{}: skipped, needs {} (pass --mtx-file or set {})",
            p.name,
            faber_decay_cli::preset::PDE225_IDENTIFIER,
            faber_decay_cli::preset::PDE225_ENV
        );
    }
    if jobs <= 1 {
        let mut ok = true;
        for p in &runnable {
            ok &= run_one(p, run, true)?;
        }
        return Ok(ok);
    }
    let exe = std::env::current_exe()?;
    let mut ok = true;
    for chunk in runnable.chunks(jobs) {
        let children = chunk
            .iter()
            .map(|p| {
                let mut cmd = Command::new(&exe);
                cmd.arg("reproduce").arg(&p.name).arg("--out").arg(&run.out);
                if let Some(m) = &run.mtx_file {
                    cmd.arg("--mtx-file").arg(m);
                }
                if let Some(s) = run.seed {
                    cmd.arg("--seed").arg(s.to_string());
                }
                cmd.spawn().with_context(|| format!("starting {}", p.name))
            })
            .collect::<Result<Vec<_>>>()?;
        for mut child in children {
            ok &= child.wait()?.success();
        }
    }
    Ok(ok)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Cmd::Presets => {
            for p in presets() {
                let note = if p.needs_external_file() { " [external matrix]" } else { "" };
                println!("{:<18} {}{note}", p.name, p.summary);
            }
            Ok(true)
        }
        Cmd::Fov { matrix, region, angles, safety } => {
            let loaded = load_matrix(&matrix.recipe()?, None)?;
            let target = loaded.factor.as_ref().unwrap_or(&loaded.matrix);
            let samples = fov_boundary(target, angles)?;
            let fitted: Region = match region {
                RegionKind::Ellipse => fit_ellipse(&samples, safety)?.into(),
                RegionKind::Disk => fit_disk(&samples, safety)?.into(),
            };
            print!("{}", fov_csv(&samples, &fitted));
            Ok(true)
        }
        Cmd::Bound(args) => {
            print!("{}", bound_table(&args)?);
            Ok(true)
        }
        Cmd::Oracle { matrix, function, column } => {
            let loaded = load_matrix(&matrix.recipe()?, None)?;
            let f = eval_matfun(function, &loaded.matrix)?;
            println!("row,entry");
            for (row, entry) in column_magnitudes(&f, column)? {
                println!("{row},{}", num(entry));
            }
            Ok(true)
        }
        Cmd::Column { matrix, function, column, eps, run } => {
            let recipe = matrix.recipe()?;
            let bound = match (function, &recipe) {
                (MatrixFunctionKind::Exp, _) => ColumnBound::Exp,
                (MatrixFunctionKind::InvSqrt, _) => ColumnBound::InvSqrt { eps },
                (MatrixFunctionKind::Phi1, MatrixRecipe::KroneckerSum { .. }) => ColumnBound::KronPhi1,
                (MatrixFunctionKind::Phi1, _) => ColumnBound::Phi1,
                (f, _) => bail!("no column envelope for {f}; use `oracle` for the entries alone"),
            };
            run_one(&custom_preset("column", recipe, function, Study::Column { column, bound }), &run, false)
        }
        Cmd::Arnoldi { matrix, tol, m_max, run } => {
            let p =
                custom_preset("arnoldi", matrix.recipe()?, MatrixFunctionKind::NegExp, Study::Arnoldi { tol, m_max });
            run_one(&p, &run, false)
        }
        Cmd::Inexact { matrix, function, tol, eps_m, m, run } => {
            let p = custom_preset("inexact", matrix.recipe()?, function, Study::Inexact { tol, eps_m, m });
            run_one(&p, &run, false)
        }
        Cmd::Reproduce { target, list, jobs, run } => {
            if list {
                for p in presets() {
                    println!("{}", p.name);
                }
                return Ok(true);
            }
            match target.as_deref() {
                None => bail!("name a preset or `all`; see `faber-decay presets`"),
                Some("all") => reproduce_all(&run, jobs),
                Some(name) => run_one(&find_preset(name)?, &run, true),
            }
        }
        Cmd::Replay { run_json, out } => {
            let (r, same) = replay(&run_json, &out)?;
            report(&r);
            let name = r.primary.file_name().unwrap_or_default().to_string_lossy().into_owned();
            println!("replay of {name}: {}", if same { "byte-identical" } else { "DIFFERS" });
            Ok(same && r.dominance)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
