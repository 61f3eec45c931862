mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use output::{Context, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] spinshape::Error),
    #[error("cannot write {0}: {1}")]
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_)
            | CliError::Library(
                spinshape::Error::InvalidInput(_)
                | spinshape::Error::InvalidPartition(_)
                | spinshape::Error::SizeLimit { .. },
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spinshape", version, about = "Spin branching graph, free cumulants and limit shapes", args_override_self = true)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// File of `key=value` lines; each becomes `--key value` (dots read as dashes). Flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Strict partitions of n with shifted-tableau counts and spin dimensions.
    Enumerate(EnumerateArgs),
    /// Hook formula against brute-force tableau counting.
    Gcheck(GcheckArgs),
    /// Transition measure of the doubled diagram of one strict partition.
    Tmeasure(TmeasureArgs),
    /// Corner-box identity on every edge of the strict Young graph.
    #[command(name = "lemma27")]
    #[serde(rename = "lemma27")]
    CornerWeights(NmaxArgs),
    /// Balance identity `x m({x}) = (x+1) m({-x-1})` at positive valleys.
    Balance(NmaxArgs),
    /// Branching graph export with per-level exact identities.
    Graph(GraphArgs),
    /// Spin Plancherel measure at level n.
    Plancherel(LevelArgs),
    /// Character table of the double cover.
    Chartable(ChartableArgs),
    /// Trace formula for powers of the Jucys-Murphy element.
    VerifyJm(VerifyJmArgs),
    /// Discount factor `a(k, t, n)` for a pausing law.
    Afactor(AfactorArgs),
    /// Continuous-time walk replicas and moment concentration.
    Simulate(SimulateArgs),
    /// Time evolution of free cumulants.
    Evolve(EvolveArgs),
    /// Exact residual of the evolution equation for the Cauchy transform.
    PdeCheck(PdeCheckArgs),
    /// Moments, cumulants and profile of the strict-partition limit shape.
    Vershik(VershikArgs),
    /// Extremal characters and their R-transforms.
    Thoma(ThomaArgs),
    /// Density of the uniform-driver case.
    Density(DensityArgs),
    /// Profile reconstruction from moments (diagnostic).
    Shape(ShapeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Enumerate(_) => "enumerate",
            Command::Gcheck(_) => "gcheck",
            Command::Tmeasure(_) => "tmeasure",
            Command::CornerWeights(_) => "lemma27",
            Command::Balance(_) => "balance",
            Command::Graph(_) => "graph",
            Command::Plancherel(_) => "plancherel",
            Command::Chartable(_) => "chartable",
            Command::VerifyJm(_) => "verify-jm",
            Command::Afactor(_) => "afactor",
            Command::Simulate(_) => "simulate",
            Command::Evolve(_) => "evolve",
            Command::PdeCheck(_) => "pde-check",
            Command::Vershik(_) => "vershik",
            Command::Thoma(_) => "thoma",
            Command::Density(_) => "density",
            Command::Shape(_) => "shape",
        }
    }
}

const COMMAND_NAMES: [&str; 17] = [
    "enumerate", "gcheck", "tmeasure", "lemma27", "balance", "graph", "plancherel", "chartable", "verify-jm", "afactor",
    "simulate", "evolve", "pde-check", "vershik", "thoma", "density", "shape",
];

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long, default_value_t = 8)]
    pub n: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct GcheckArgs {
    #[arg(long, default_value_t = 10)]
    pub nmax: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct TmeasureArgs {
    /// Parts, e.g. `4,2,1`.
    #[arg(long)]
    pub lambda: String,
    /// Also report the measure rescaled by `√(2n)`.
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct NmaxArgs {
    #[arg(long, default_value_t = 9)]
    pub nmax: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    #[arg(long, default_value_t = 8)]
    pub levels: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct LevelArgs {
    #[arg(long, default_value_t = 8)]
    pub n: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ChartableArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Also report the uniform-ensemble sum for this power.
    #[arg(long)]
    pub ensemble_k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyJmArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PausingArgs {
    /// Mean pausing time.
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// exponential, gamma, uniform, deterministic or histogram.
    #[arg(long, default_value = "exponential")]
    pub psi_family: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub psi_params: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub psi_edges: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub psi_weights: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AfactorArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n: u32,
    #[command(flatten)]
    pub pausing: PausingArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub j_max: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[command(flatten)]
    pub pausing: PausingArgs,
    #[arg(long, default_value_t = 2000)]
    pub replicas: usize,
    /// `plancherel`, `uniform` or `delta:4,2,1[:-]`.
    #[arg(long, default_value = "plancherel")]
    pub initial: String,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    /// Initial free cumulants `R_1,R_2,...` as rationals.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub cumulants: String,
    #[arg(long, default_value_t = 12)]
    pub order: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PdeCheckArgs {
    /// Highest power of `1/z` checked.
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Random even rational initial vectors (with `R_2 = 1`) besides the semicircle.
    #[arg(long, default_value_t = 5)]
    pub random: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct VershikArgs {
    #[arg(long, default_value_t = 10)]
    pub kmax: u32,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ThomaArgs {
    /// Finite parameter point, e.g. `1/2,1/4`.
    #[arg(long, conflicts_with = "geometric")]
    pub alpha: Option<String>,
    /// Geometric point `α_i = (1-q) q^{i-1}`.
    #[arg(long)]
    pub geometric: Option<String>,
    #[arg(long, default_value_t = 6)]
    pub kmax: u32,
    /// Driving measure: `uniform:r` or `pair:c` (atoms at `±c`).
    #[arg(long, default_value = "uniform:1")]
    pub nu: String,
    #[arg(long, default_value_t = 11)]
    pub order: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long, default_value_t = 801)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ShapeArgs {
    /// `semicircle`, `vershik` or `cumulants:0,1,...`.
    #[arg(long, default_value = "semicircle")]
    pub source: String,
    /// Number of moments used.
    #[arg(long, default_value_t = 24)]
    pub order: usize,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
}

/// Splices `--config` entries right after the subcommand name so explicit flags still override them.
fn expand_config(argv: Vec<String>) -> Result<(Vec<String>, Option<PathBuf>), CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or_else(|| CliError::Config("--config needs a path".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok((rest, None)) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{path}:{}: expected key=value", i + 1)))?;
        injected.push(format!("--{}={}", key.trim().replace(['.', '_'], "-"), value.trim()));
    }
    let at = rest.iter().position(|a| COMMAND_NAMES.contains(&a.as_str())).map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, injected);
    Ok((rest, Some(PathBuf::from(path))))
}

fn run() -> Result<bool, CliError> {
    let (argv, config) = expand_config(std::env::args().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return Err(CliError::Config("invalid arguments".into()));
        }
        Err(e) => e.exit(),
    };
    let threads = match &cli.command {
        Command::Simulate(a) => a.threads.unwrap_or(0),
        _ => 1,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let report = commands::run(&cli.command, cli.seed)?;
    let ctx = Context {
        command: cli.command.name(),
        out: &cli.out,
        format: cli.format,
        seed: cli.seed,
        args: serde_json::to_value(&cli.command).expect("arguments serialize"),
        config: config.as_deref(),
    };
    output::emit(&ctx, &report)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
