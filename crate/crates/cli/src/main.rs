use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use avem::data::Norm;
use avem::driver::AvemConfig;
use avem::experiment::{self, GreedyMode, GreedyTarget};
use avem::mesh::{self, MeshForest, SvgOptions};
use avem::problems::{self, ProblemSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "avem", version, about = "Adaptive lowest-order virtual elements with hanging nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-step adaptive solver and write tables, meshes and a summary.
    Run(RunArgs),
    /// Sweep a greedy data approximation over decreasing thresholds.
    Greedy(GreedyArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Benchmark problem: lshape, square or square-smooth.
    #[arg(long, default_value = "lshape")]
    problem: String,
    /// Cell size of the structured initial mesh (L-shape only).
    #[arg(long, default_value_t = 0.125)]
    h: f64,
}

impl ProblemArgs {
    fn load(&self) -> Result<ProblemSpec> {
        match problems::by_name(&self.problem, self.h) {
            Some(spec) => Ok(spec?),
            None => bail!("unknown problem `{}` (expected one of {:?})", self.problem, problems::PROBLEM_NAMES),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Admissibility bound on the global index of hanging nodes.
    #[arg(long, default_value_t = 10)]
    lambda: u32,
    /// Dörfler fraction.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Fraction for the pseudo-greedy load marking.
    #[arg(long = "theta-data", default_value_t = 0.75f64.sqrt())]
    theta_data: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    eps0: f64,
    #[arg(long, default_value_t = 0.125)]
    tol: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Inf,
    #[value(name = "2")]
    Two,
}

#[derive(Args)]
struct GreedyArgs {
    /// Target function: a, c, f (L-shape data), x, bump or one.
    #[arg(long)]
    target: String,
    /// Weight exponent on the element size.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// Norm of the local error.
    #[arg(long, value_enum, default_value = "inf")]
    q: NormArg,
    /// Use max-strategy marking on the global error with this fraction instead of thresholding.
    #[arg(long)]
    pseudo: Option<f64>,
    #[arg(long = "delta-start", default_value_t = 1.0)]
    delta_start: f64,
    #[arg(long = "delta-steps", default_value_t = 8)]
    delta_steps: usize,
    #[arg(long = "delta-factor", default_value_t = 0.5)]
    delta_factor: f64,
    #[arg(long, default_value_t = 10)]
    lambda: u32,
    #[arg(long, default_value_t = 0.125)]
    h: f64,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Export a mesh, either read from a file or the initial mesh of a problem.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Txt,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_enum)]
    fmt: Format,
    /// Mesh file in the text format; the problem's initial mesh is used when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<()> {
    let spec = args.problem.load()?;
    let config = AvemConfig {
        gamma: args.gamma,
        max_index: args.lambda,
        theta: args.theta,
        theta_data: args.theta_data,
        omega: args.omega,
        eps0: args.eps0,
        tol: args.tol,
        ..Default::default()
    };
    let (_, summary) = experiment::run_experiment(&spec, &config, Some(&args.out))
        .with_context(|| format!("adaptive run on `{}` failed", spec.name))?;
    print!("{}", experiment::stats_text(&summary, &config));
    Ok(())
}

fn greedy(args: GreedyArgs) -> Result<()> {
    let Some(target) = GreedyTarget::parse(&args.target) else {
        bail!("unknown target `{}` (expected one of {:?})", args.target, GreedyTarget::NAMES);
    };
    let mesh = problems::lshape(args.h)?.mesh;
    let mode = match args.pseudo {
        Some(theta) => GreedyMode::Pseudo { theta },
        None => {
            let norm = match args.q {
                NormArg::Inf => Norm::Max,
                NormArg::Two => Norm::L2,
            };
            GreedyMode::Threshold { t: args.t, norm }
        }
    };
    let g = move |x| target.eval(x);
    let (rows, slope) = experiment::run_greedy_experiment(
        mesh,
        &g,
        mode,
        args.delta_start,
        args.delta_factor,
        args.delta_steps,
        args.lambda,
    )?;
    let table = experiment::greedy_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{table}"),
    }
    match slope {
        Some(s) => eprintln!("fitted slope over the last decade: {s:.4}"),
        None => eprintln!("fitted slope: undefined"),
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let mesh: MeshForest = match &args.input {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            mesh::parse_mesh(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => args.problem.load()?.mesh,
    };
    let out = match args.fmt {
        Format::Svg => mesh.to_svg(&SvgOptions { mark_hanging: true, ..Default::default() }, |_| None),
        Format::Txt => mesh::write_mesh(&mesh),
    };
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Greedy(args) => greedy(args),
        Command::Mesh { command: MeshCommand::Export(args) } => export(args),
    }
}
