//! `turbmax` command-line front end.
//!
//! Exit codes: 0 success, 1 a check or optimization failed, 2 the input
//! could not be parsed or validated.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use turbmax::compressible::check_c_with;
use turbmax::incompressible::check_with;
use turbmax::io::{read_data, read_measure, write_measure};
use turbmax::selector::{MaximizeOptions, Model};
use turbmax::testfn::TestFunctionDictionary;
use turbmax::{
    jensen_defect, maximize, objective, uniqueness_diagnostic, CandidateSet, CheckConfig, DiscreteYoungMeasure, Field,
    GrowthStructure, Integrand, IsentropicEnergy, ResidualReport, SimplexWeights, SquaredNorm, UniquenessReport,
};

/// Maximizers from different starts must agree to these tolerances.
const BARYCENTER_TOL: f64 = 1e-6;
const ENERGY_TOL_REL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "turbmax", version, about = "Select maximally turbulent measure-valued solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check candidates against the weak Euler equations and the energy inequality.
    Check(CheckArgs),
    /// Maximize the functional over the convex hull of the candidates.
    Select(SelectArgs),
    /// Tabulate the functional along the segment between two candidates.
    Sweep(SweepArgs),
    /// Two constant states: computed maximizer against the closed form.
    Demo(DemoArgs),
    /// Evaluate the functional on each measure.
    Vf(VfArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Abstract,
    Incompressible,
    Compressible,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FKind {
    /// Kinetic or isentropic energy, depending on the growth structure.
    Energy,
    /// `|z|²`, quadratic growth only.
    Variance,
}

#[derive(Args)]
struct ModelArgs {
    /// Expected model; must agree with the data file when both are given.
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Initial data file.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Residual threshold; defaults to a multiple of the squared mesh width.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    energy_tol: f64,
    /// Largest test-function wavenumber.
    #[arg(long, default_value_t = 3)]
    dict_k: u32,
    /// Number of test-function time profiles.
    #[arg(long, default_value_t = 4)]
    dict_nt: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long = "f", value_enum, default_value = "energy")]
    f: FKind,
    /// Frank–Wolfe gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Total number of runs; all but the first start at random weights.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    skip_check: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Also write the maximizing measure.
    #[arg(long)]
    maximizer: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long = "f", value_enum, default_value = "energy")]
    f: FKind,
    #[arg(long, default_value_t = 101)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1,0")]
    v1: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-1,0")]
    v2: Vec<f64>,
    #[arg(long = "f", value_enum, default_value = "variance")]
    f: FKind,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = 8)]
    nt: usize,
    #[arg(long, default_value_t = 8)]
    nx: usize,
}

#[derive(Args)]
struct VfArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long = "f", value_enum, default_value = "energy")]
    f: FKind,
    /// Include the per-cell defect density.
    #[arg(long)]
    density: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `Ok(false)` maps to exit code 1, `Err` to exit code 2.
type Outcome = anyhow::Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Check(a) => run_check(a),
        Command::Select(a) => run_select(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Demo(a) => run_demo(a),
        Command::Vf(a) => run_vf(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("TURBMAX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().with_context(|| format!("TURBMAX_THREADS={raw:?} is not a count"))?;
    if n == 0 {
        bail!("TURBMAX_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn load(paths: &[PathBuf]) -> anyhow::Result<Vec<DiscreteYoungMeasure>> {
    paths.iter().map(|p| read_measure(p).with_context(|| format!("reading {}", p.display()))).collect()
}

fn load_model(args: &ModelArgs, y: &DiscreteYoungMeasure) -> anyhow::Result<Model> {
    let model = match &args.data {
        Some(p) => read_data(p, y.grid()).with_context(|| format!("reading {}", p.display()))?,
        None => match args.model {
            None | Some(ModelKind::Abstract) => Model::Abstract,
            Some(_) => bail!("--model incompressible|compressible needs --data"),
        },
    };
    if let Some(kind) = args.model {
        let expected = match kind {
            ModelKind::Abstract => "abstract",
            ModelKind::Incompressible => "incompressible",
            ModelKind::Compressible => "compressible",
        };
        if expected != model.name() {
            bail!("--model {expected} but the data file describes a {} model", model.name());
        }
    }
    Ok(model)
}

fn integrand(growth: GrowthStructure, kind: FKind) -> anyhow::Result<Box<dyn Integrand>> {
    match (growth, kind) {
        (GrowthStructure::Quadratic, FKind::Energy) => Ok(Box::new(SquaredNorm::kinetic_energy())),
        (GrowthStructure::Quadratic, FKind::Variance) => Ok(Box::new(SquaredNorm::variance())),
        (GrowthStructure::Isentropic { gamma }, FKind::Energy) => Ok(Box::new(IsentropicEnergy::new(gamma))),
        (g, _) => Err(anyhow!("no built-in integrand of that kind for growth {g}")),
    }
}

#[derive(Serialize)]
struct CheckEntry<'a> {
    path: &'a Path,
    report: ResidualReport,
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    passed: bool,
    results: Vec<CheckEntry<'a>>,
}

fn run_check(a: CheckArgs) -> Outcome {
    let measures = load(&a.paths)?;
    let model = load_model(&a.model, &measures[0])?;
    let cfg = CheckConfig { residual_tol: a.tol, energy_tol_rel: a.energy_tol, dict_k: a.dict_k, dict_profiles: a.dict_nt };
    let mut results = Vec::with_capacity(measures.len());
    for (path, y) in a.paths.iter().zip(&measures) {
        let report = match &model {
            Model::Abstract => bail!("check needs --data with an incompressible or compressible model"),
            Model::Incompressible(data) => {
                let dict = TestFunctionDictionary::incompressible(y.grid(), cfg.dict_k, cfg.dict_profiles);
                check_with(y, data, &dict, &cfg)
            }
            Model::Compressible(data) => {
                let dict = TestFunctionDictionary::compressible(y.grid(), cfg.dict_k, cfg.dict_profiles);
                check_c_with(y, data, &dict, &cfg)
            }
        }
        .with_context(|| format!("checking {}", path.display()))?;
        results.push(CheckEntry { path, report });
    }
    let passed = results.iter().all(|r| r.report.passed);
    emit(a.out.as_deref(), &to_json(&CheckOutput { passed, results })?)?;
    Ok(passed)
}

#[derive(Serialize)]
struct RunSummary {
    theta: Vec<f64>,
    value: f64,
    gap: f64,
    converged: bool,
}

#[derive(Serialize)]
struct SelectOutput {
    theta: Vec<f64>,
    value: f64,
    gap: f64,
    tol: f64,
    converged: bool,
    iterations: usize,
    total_energy: f64,
    barycenter: Field,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    restarts: Vec<RunSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness: Option<UniquenessReport>,
}

/// Uniform point on the simplex: normalized exponential samples.
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> anyhow::Result<SimplexWeights> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    Ok(SimplexWeights::new(e.into_iter().map(|x| x / s).collect())?)
}

fn run_select(a: SelectArgs) -> Outcome {
    let measures = load(&a.paths)?;
    let model = load_model(&a.model, &measures[0])?;
    let f = integrand(measures[0].growth(), a.f)?;
    let set = CandidateSet::new_unchecked(measures, model)?;
    let set = if a.skip_check {
        set
    } else {
        match CandidateSet::new(set.candidates().to_vec(), set.model().clone(), &CheckConfig::default()) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("candidate check failed: {e}");
                return Ok(false);
            }
        }
    };
    let base = MaximizeOptions { tol: a.tol, max_iter: a.max_iter, start: None };
    let best = maximize(&set, f.as_ref(), &base)?;
    let mut ok = best.converged;
    if !best.converged {
        eprintln!("not converged: gap {:e} > tol {:e} after {} iterations", best.gap, best.tol, best.iterations);
    }

    let mut restarts = Vec::new();
    let mut uniqueness = None;
    if let Some(n) = a.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let mut runs = Vec::with_capacity(n);
        for _ in 1..n {
            let start = random_simplex(&mut rng, set.len())?;
            runs.push(maximize(&set, f.as_ref(), &MaximizeOptions { start: Some(start), ..base.clone() })?);
        }
        restarts = runs
            .iter()
            .map(|r| RunSummary { theta: r.theta.as_slice().to_vec(), value: r.value, gap: r.gap, converged: r.converged })
            .collect();
        runs.insert(0, best.clone());
        match uniqueness_diagnostic(&runs, BARYCENTER_TOL, ENERGY_TOL_REL) {
            Ok(report) => {
                ok &= report.consistent;
                uniqueness = Some(report);
            }
            Err(e) => {
                eprintln!("uniqueness diagnostic skipped: {e}");
                ok = false;
            }
        }
    }

    if let Some(p) = &a.maximizer {
        write_measure(p, &best.maximizer).with_context(|| format!("writing {}", p.display()))?;
    }
    let out = SelectOutput {
        theta: best.theta.as_slice().to_vec(),
        value: best.value,
        gap: best.gap,
        tol: best.tol,
        converged: best.converged,
        iterations: best.iterations,
        total_energy: best.total_energy,
        barycenter: best.barycenter,
        restarts,
        uniqueness,
    };
    emit(a.out.as_deref(), &to_json(&out)?)?;
    Ok(ok)
}

fn run_sweep(a: SweepArgs) -> Outcome {
    if a.samples < 2 {
        bail!("--samples must be at least 2");
    }
    let measures = load(&[a.first.clone(), a.second.clone()])?;
    let f = integrand(measures[0].growth(), a.f)?;
    let set = CandidateSet::abstract_set(measures)?;
    let mut csv = String::from("tau,value\n");
    for k in 0..a.samples {
        let tau = k as f64 / (a.samples - 1) as f64;
        let theta = SimplexWeights::new(vec![tau, 1.0 - tau])?;
        let (value, _) = objective(&theta, &set, f.as_ref())?;
        csv.push_str(&format!("{tau},{value}\n"));
    }
    match &a.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn run_demo(a: DemoArgs) -> Outcome {
    if a.v1.len() != a.v2.len() || a.v1.is_empty() {
        bail!("--v1 and --v2 must have the same nonzero length");
    }
    let d = a.v1.len();
    let grid = turbmax::SpaceTimeGrid::new(a.t_final, d, a.nt, a.nx, false)?;
    let constant = |v: &[f64]| DiscreteYoungMeasure::from_fn(grid, GrowthStructure::Quadratic, d, |_, _| v.to_vec());
    let set = CandidateSet::abstract_set(vec![constant(&a.v1)?, constant(&a.v2)?])?;
    let f = integrand(GrowthStructure::Quadratic, a.f)?;
    let r = maximize(&set, f.as_ref(), &MaximizeOptions::default())?;

    let coefficient = match a.f {
        FKind::Variance => 1.0,
        FKind::Energy => 0.5,
    };
    let dist2: f64 = a.v1.iter().zip(&a.v2).map(|(x, y)| (x - y).powi(2)).sum();
    let volume = a.t_final * TAU.powi(d as i32);
    let analytic = 0.25 * coefficient * dist2 * volume;
    let rel = if analytic > 0.0 { (r.value - analytic).abs() / analytic } else { r.value.abs() };

    let name = match a.f {
        FKind::Variance => "|z|^2",
        FKind::Energy => "|z|^2/2",
    };
    println!("candidates: constant states v1 = {:?}, v2 = {:?}", a.v1, a.v2);
    println!("grid: T = {}, d = {d}, nt = {}, nx = {}", a.t_final, a.nt, a.nx);
    println!("integrand: f(z) = {name}");
    if dist2 == 0.0 {
        println!("degenerate: v1 = v2, every tau is optimal");
    }
    println!("tau* = {}", r.theta.as_slice()[0]);
    println!("value (computed) = {}", r.value);
    println!("value (analytic) = {analytic}");
    println!("relative error = {rel:e}");
    println!("gap = {:e}, iterations = {}", r.gap, r.iterations);
    Ok(r.converged)
}

#[derive(Serialize)]
struct VfEntry<'a> {
    path: &'a Path,
    value: f64,
    oscillation_part: f64,
    concentration_part: f64,
    total_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    defect_density: Option<Vec<f64>>,
}

fn run_vf(a: VfArgs) -> Outcome {
    let measures = load(&a.paths)?;
    let mut entries = Vec::with_capacity(measures.len());
    for (path, y) in a.paths.iter().zip(&measures) {
        let f = integrand(y.growth(), a.f)?;
        let r = jensen_defect(y, f.as_ref())?;
        entries.push(VfEntry {
            path,
            value: r.value,
            oscillation_part: r.oscillation_part,
            concentration_part: r.concentration_part,
            total_energy: r.total_energy,
            defect_density: a.density.then_some(r.defect_density),
        });
    }
    emit(a.out.as_deref(), &to_json(&entries)?)?;
    Ok(true)
}
