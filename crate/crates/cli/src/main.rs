//! `fuse`: stability scans, convergence sweeps, single solves, operator
//! equivalence checks and mesh generation.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::RangedU64ValueParser;
use clap::{Args, CommandFactory, Parser, Subcommand};
use fuse_core::bench::{fmt_real, run_sweep, run_sweep_with_solution, BenchCase, SweepOptions, DEFAULT_SEED};
use fuse_core::mesh::{circle_mesh, perturbed_mesh, structured_mesh, write_mesh, Rect};
use fuse_core::ops::{assemble_first_derivative_1d, petrov_galerkin_operator_1d, sd_operator_1d, VelocityField};
use fuse_core::vnstab::{scan_stability, SymbolOperator, DEFAULT_SAMPLES};
use fuse_core::{FuseError, Mesh1D, NodeKind, ReferenceElement, Result};

use output::{csv_document, header_comment, write_atomic};

const MAX_DEGREE: usize = 32;

#[derive(Parser, Debug)]
#[command(name = "fuse", version, about = "FUSE spectral element toolkit")]
struct Cli {
    /// key = value file; explicit flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Von Neumann scan of a periodic operator symbol
    Spectrum(SpectrumArgs),
    /// Refinement sweep with observed orders
    Converge(ConvergeArgs),
    /// Single level of a benchmark case, writing the solution
    Solve(SolveArgs),
    /// Compare FUSE with the spectral difference or Petrov-Galerkin operator
    Equivalence(EquivalenceArgs),
    /// Generate a quadrilateral mesh
    Mesh(MeshArgs),
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// uniform, gauss-lobatto or gl-endpoints
    #[arg(long, default_value = "gl-endpoints")]
    kind: String,
    #[arg(long, value_parser = degree_range(1))]
    p: usize,
    /// first or laplacian
    #[arg(long, default_value = "first")]
    op: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long)]
    case: String,
    #[arg(long, value_parser = degree_range(2))]
    p: Option<usize>,
    /// number of levels, run as 0..N-1
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// skip the spectral radius column
    #[arg(long)]
    no_radius: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    case: String,
    #[arg(long, value_parser = degree_range(2))]
    p: Option<usize>,
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EquivalenceArgs {
    /// sd or petrov
    #[arg(long)]
    which: String,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(2..=5))]
    p: usize,
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(2..=8))]
    n: usize,
    /// advection speed (petrov only; sd uses a = 1)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
}

#[derive(Args, Debug)]
struct MeshArgs {
    /// structured, perturbed or circle
    #[arg(long)]
    recipe: String,
    /// uniform refinements applied to the base mesh
    #[arg(long, default_value_t = 0)]
    level: usize,
    #[arg(long, default_value_t = 4)]
    nx: usize,
    #[arg(long, default_value_t = 4)]
    ny: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// geometry degree (default 1, or 3 for circle)
    #[arg(long)]
    p_geo: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn degree_range(min: u64) -> RangedU64ValueParser<usize> {
    RangedU64ValueParser::new().range(min..=MAX_DEGREE as u64)
}

enum Outcome {
    Ok,
    Fail,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let known = known_flags(&args);
    let args = match config::merge_config(args, &known) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Long flag names of the subcommand named in `args`.
fn known_flags(args: &[String]) -> Vec<String> {
    let cmd = Cli::command();
    let Some(sub) = args
        .iter()
        .skip(1)
        .find_map(|a| cmd.get_subcommands().find(|s| s.get_name() == a))
    else {
        return Vec::new();
    };
    sub.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| *l != "config")
        .map(str::to_string)
        .collect()
}

/// `FUSE_THREADS=n` sizes the global pool; 0 runs serially.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("FUSE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| FuseError::Config(format!("FUSE_THREADS must be a non-negative integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| FuseError::Config(format!("thread pool: {e}")))
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Spectrum(a) => spectrum(a),
        Command::Converge(a) => converge(a),
        Command::Solve(a) => solve(a),
        Command::Equivalence(a) => equivalence(a),
        Command::Mesh(a) => mesh(a),
    }
}

fn check_degree(p: usize, min: usize) -> Result<()> {
    if p < min || p > MAX_DEGREE {
        return Err(FuseError::InvalidArgument(format!(
            "--p must be in [{min}, {MAX_DEGREE}], got {p}"
        )));
    }
    Ok(())
}

fn emit(out: Option<&PathBuf>, doc: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, doc),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn spectrum(a: SpectrumArgs) -> Result<Outcome> {
    let kind: NodeKind = a.kind.parse()?;
    let op: SymbolOperator = a.op.parse()?;
    let (scan, verdict) = scan_stability(kind, a.p, op, a.samples)?;
    if let Some(path) = &a.out {
        let comment = header_comment(
            "spectrum",
            &[
                ("kind", kind.to_string()),
                ("p", a.p.to_string()),
                ("op", op.to_string()),
                ("samples", a.samples.to_string()),
            ],
        );
        let header = (0..a.p)
            .map(|m| format!("re_{m},im_{m}"))
            .fold("xi".to_string(), |h, c| h + "," + &c);
        let rows: Vec<String> = scan
            .xi
            .iter()
            .zip(&scan.eigenvalues)
            .map(|(xi, ls)| {
                let mut ls = ls.clone();
                ls.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
                ls.iter()
                    .fold(fmt_real(*xi), |r, l| r + "," + &fmt_real(l.re) + "," + &fmt_real(l.im))
            })
            .collect();
        write_atomic(path, &csv_document(&comment, &header, &rows))?;
    }
    println!("{verdict}");
    println!("spectral radius = {:.6e}", scan.spectral_radius);
    Ok(if verdict.stable { Outcome::Ok } else { Outcome::Fail })
}

fn sweep_options(
    case: BenchCase,
    p: Option<usize>,
    levels: Vec<usize>,
    dt: Option<f64>,
    t_final: Option<f64>,
    seed: u64,
) -> Result<SweepOptions> {
    let p = p.unwrap_or(case.default_degree());
    check_degree(p, 2)?;
    let mut opts = SweepOptions::new(case, p);
    opts.levels = levels;
    opts.dt = dt;
    opts.t_final = t_final;
    opts.seed = seed;
    Ok(opts)
}

fn converge(a: ConvergeArgs) -> Result<Outcome> {
    let case: BenchCase = a.case.parse()?;
    let levels = match a.levels {
        Some(0) => return Err(FuseError::InvalidArgument("--levels must be at least 1".into())),
        Some(n) => (0..n).collect(),
        None => case.default_levels(),
    };
    let mut opts = sweep_options(case, a.p, levels, a.dt, a.t_final, a.seed)?;
    opts.spectral_radius = !a.no_radius;
    let report = run_sweep(case, &opts)?;
    let mut settings = vec![
        ("case", case.to_string()),
        ("p", opts.p.to_string()),
        ("levels", format!("{:?}", opts.levels).replace(' ', "")),
        ("seed", a.seed.to_string()),
    ];
    if let Some(dt) = a.dt {
        settings.push(("dt", fmt_real(dt)));
    }
    if let Some(t) = a.t_final {
        settings.push(("t_final", fmt_real(t)));
    }
    let doc = csv_document(&header_comment("converge", &settings), &report.csv_header(), &report.csv_rows());
    emit(a.out.as_ref(), &doc)?;

    let mut summary = String::new();
    for (i, name) in report.error_names.iter().enumerate() {
        let orders: Vec<String> = report
            .orders(i)
            .iter()
            .flatten()
            .map(|q| format!("{q:.3}"))
            .collect();
        summary.push_str(&format!("observed order ({name}): {}\n", orders.join(" ")));
    }
    let ratios = report.radius_ratios();
    if !ratios.is_empty() {
        let r: Vec<String> = ratios.iter().map(|q| format!("{q:.3}")).collect();
        summary.push_str(&format!("spectral radius ratio: {}\n", r.join(" ")));
    }
    if let Some(c) = &report.dt_choice {
        summary.push_str(&format!("dt = {:.6e} after {} halvings\n", c.dt, c.halvings));
    }
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(Outcome::Ok)
}

fn solve(a: SolveArgs) -> Result<Outcome> {
    let case: BenchCase = a.case.parse()?;
    let opts = sweep_options(case, a.p, vec![a.level], a.dt, a.t_final, a.seed)?;
    let (report, snap) = run_sweep_with_solution(case, &opts)?;
    let lvl = &report.levels[0];
    for (name, e) in report.error_names.iter().zip(&lvl.errors) {
        println!("error ({name}) = {e:.6e}");
    }
    println!("elements = {}, dofs = {}", lvl.n_elements, lvl.dofs);
    if let Some(path) = &a.out {
        let mut settings = vec![
            ("case", case.to_string()),
            ("p", opts.p.to_string()),
            ("level", a.level.to_string()),
            ("seed", a.seed.to_string()),
        ];
        if let Some(dt) = lvl.dt {
            settings.push(("dt", fmt_real(dt)));
        }
        let header = snap
            .fields
            .iter()
            .fold("x,y".to_string(), |h, (n, _)| h + "," + n);
        let rows: Vec<String> = snap
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                snap.fields
                    .iter()
                    .fold(format!("{},{}", fmt_real(c[0]), fmt_real(c[1])), |r, (_, v)| {
                        r + "," + &fmt_real(v[i])
                    })
            })
            .collect();
        write_atomic(path, &csv_document(&header_comment("solve", &settings), &header, &rows))?;
    }
    Ok(Outcome::Ok)
}

/// Max entrywise difference between FUSE and the chosen equivalent operator.
pub fn equivalence_difference(which: &str, p: usize, n: usize, a: f64) -> Result<f64> {
    if !(2..=5).contains(&p) || !(2..=8).contains(&n) {
        return Err(FuseError::InvalidArgument(format!(
            "equivalence needs p in [2, 5] and n in [2, 8], got p={p}, n={n}"
        )));
    }
    let h = 1.0 / n as f64;
    let mesh = Mesh1D::uniform(n, (0.0, 1.0), true)?;
    let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p)?;
    match which {
        "sd" => {
            let fuse = assemble_first_derivative_1d(&mesh, &re, &VelocityField::constant_1d(1.0))?;
            Ok(sd_operator_1d(p, n, h)?.max_abs_diff(&fuse))
        }
        "petrov" => {
            let vel = VelocityField::constant_1d(a);
            let fuse = assemble_first_derivative_1d(&mesh, &re, &vel)?;
            Ok(petrov_galerkin_operator_1d(&mesh, &re, &vel)?.max_abs_diff(&fuse))
        }
        _ => Err(FuseError::InvalidArgument(format!("--which must be sd or petrov, got `{which}`"))),
    }
}

fn equivalence(a: EquivalenceArgs) -> Result<Outcome> {
    let diff = equivalence_difference(&a.which, a.p, a.n, a.a)?;
    let ok = diff <= 1e-12;
    println!(
        "{} p={} n={}: max |difference| = {:.3e} ({})",
        a.which,
        a.p,
        a.n,
        diff,
        if ok { "equivalent" } else { "different" }
    );
    Ok(if ok { Outcome::Ok } else { Outcome::Fail })
}

fn mesh(a: MeshArgs) -> Result<Outcome> {
    let mut m = match a.recipe.as_str() {
        "structured" => structured_mesh(a.nx, a.ny, Rect::unit(), [false, false], a.p_geo.unwrap_or(1))?,
        "perturbed" => {
            if a.nx != a.ny {
                return Err(FuseError::InvalidArgument("perturbed meshes are square; use equal --nx and --ny".into()));
            }
            perturbed_mesh(a.nx, Rect::unit(), a.seed, a.p_geo.unwrap_or(1))?
        }
        "circle" => circle_mesh(a.p_geo.unwrap_or(3))?,
        r => {
            return Err(FuseError::InvalidArgument(format!(
                "unknown recipe `{r}` (expected structured, perturbed or circle)"
            )))
        }
    };
    for _ in 0..a.level {
        m = m.refine_uniform();
    }
    m.validate()?;
    let text = write_mesh(&m);
    match &a.out {
        Some(path) => {
            write_atomic(path, &text)?;
            println!("{} elements, area {:.12}", m.n_elements(), m.total_area());
        }
        None => print!("{text}"),
    }
    Ok(Outcome::Ok)
}
