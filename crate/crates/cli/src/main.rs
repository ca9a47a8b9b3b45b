use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exceedance_core::distance::binomial_poisson_distance;
use exceedance_core::harness::{self, summary_csv, ExperimentConfig, Value};
use exceedance_core::process::{decompose, interior_center_count, IndexWindow};
use exceedance_core::sim::{PathSampler, StreamKey};
use exceedance_core::tail::{
    cluster_gap, condition_report, level_asymptotic, level_exact, LevelMode, LevelSchedule, Normalization,
};
use exceedance_core::{CovarianceModel, Error};

#[derive(Parser)]
#[command(name = "exceedance", version, about = "Poisson approximation of Gaussian level exceedances")]
struct Cli {
    /// Master seed (overrides the config file for `experiment`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for `experiment`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Psi,
    Tail,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Psi => Normalization::Psi,
            NormArg::Tail => Normalization::Tail,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact and asymptotic levels for a schedule.
    Levels(LevelArgs),
    /// Comparison bound and condition proxies for a covariance model.
    Bounds(BoundArgs),
    /// Exact L1 distance between Binomial(n, p) and Poisson(np).
    Tv(TvArgs),
    /// Simulate one path and summarize its cluster decomposition.
    Simulate(SimulateArgs),
    /// Run an experiment config file and write its CSV outputs.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct LevelArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Power-scale exponent; selects `n^a Psi(u) = c` instead of `n Psi(u) = lambda`.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value_t = NormArg::Psi)]
    normalization: NormArg,
}

impl LevelArgs {
    fn schedule(&self) -> LevelSchedule {
        match self.a {
            Some(a) => LevelSchedule::power(self.n, self.lambda, a, self.c),
            None => LevelSchedule::natural(self.n, self.lambda),
        }
    }
}

#[derive(Args)]
struct BoundArgs {
    /// `independent`, `geometric:RHO`, `power_decay:C:BETA`, `table:R1,R2,...` or JSON.
    #[arg(long, default_value = "independent")]
    model: String,
    #[arg(long)]
    n: u64,
    /// Level; defaults to the natural level for `--lambda`.
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Upper lag of the condition windows (default n).
    #[arg(long)]
    k_max: Option<u64>,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "independent")]
    model: String,
    #[arg(long)]
    n: u64,
    /// Level; defaults to the natural level for `--lambda`.
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Thinning gap; defaults to the gap for `--lambda-cluster`, else 0.
    #[arg(long)]
    l: Option<u64>,
    #[arg(long)]
    lambda_cluster: Option<f64>,
    #[arg(long)]
    allow_clipping: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config file.
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Record = Vec<(&'static str, Value)>;

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::Usage(format!("not a number: {s:?}")))
}

fn parse_model(spec: &str) -> Result<CovarianceModel, CliError> {
    if spec.trim_start().starts_with('{') {
        return serde_json::from_str(spec).map_err(|e| CliError::Usage(format!("model JSON: {e}")));
    }
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.split(':').collect() };
    let model = match (kind, params.as_slice()) {
        ("independent", []) => CovarianceModel::Independent,
        ("geometric", [rho]) => CovarianceModel::Geometric { rho0: parse_f64(rho)? },
        ("power_decay", [c, beta]) => CovarianceModel::PowerDecay { c: parse_f64(c)?, beta: parse_f64(beta)? },
        ("table", [values]) => CovarianceModel::Table {
            values: values.split(',').map(parse_f64).collect::<Result<_, _>>()?,
            zero_beyond: true,
        },
        _ => return Err(CliError::Usage(format!("unrecognized model {spec:?}"))),
    };
    model.validate().map_err(|e| CliError::Usage(format!("model {spec:?}: {e}")))?;
    Ok(model)
}

fn natural_level(n: u64, lambda: f64) -> Result<f64, CliError> {
    Ok(level_exact(&LevelSchedule::natural(n, lambda), Normalization::Psi)?)
}

fn levels(args: &LevelArgs) -> Result<Record, CliError> {
    let schedule = args.schedule();
    let exact = level_exact(&schedule, args.normalization.into())?;
    // the expansion needs ln ln n > 0, so short sequences only get the exact level
    let asym = if args.n >= 16 { Some(level_asymptotic(&schedule)?) } else { None };
    let (mode, a, c) = match schedule.mode {
        LevelMode::Power { a, c } => ("power", Value::from(a), Value::from(c)),
        _ => ("natural", Value::Empty, Value::Empty),
    };
    Ok(vec![
        ("n", args.n.into()),
        ("mode", mode.into()),
        ("lambda", args.lambda.into()),
        ("a", a),
        ("c", c),
        ("u_exact", exact.into()),
        ("u_asymptotic", asym.into()),
        ("difference", asym.map(|v| v - exact).into()),
    ])
}

fn bounds(args: &BoundArgs) -> Result<Record, CliError> {
    let model = parse_model(&args.model)?;
    let u = match args.u {
        Some(u) => u,
        None => natural_level(args.n, args.lambda)?,
    };
    let r = condition_report(&model, args.n, u, args.k_max.unwrap_or(args.n).max(2))?;
    Ok(vec![
        ("model", serde_json::to_string(&model).map_err(Error::from)?.into()),
        ("n", r.n.into()),
        ("u", r.u.into()),
        ("level_ratio", r.level_ratio.into()),
        ("berman_bound", r.berman_sum.into()),
        ("rho1", r.rho1.into()),
        ("gamma", r.gamma.into()),
        ("threshold_stated", r.threshold_stated.into()),
        ("threshold_proof", r.threshold_proof.into()),
        ("above_stated", r.above_stated.into()),
        ("above_proof", r.above_proof.into()),
        ("log_cond_value", r.log_cond_value.into()),
        ("power_cond_value", r.power_cond_value.into()),
        ("k0", r.k0.into()),
        ("k_max", r.k_max.into()),
        ("sup_half_tension", r.sup_half_tension.into()),
    ])
}

fn tv(args: &TvArgs) -> Result<Record, CliError> {
    let d = binomial_poisson_distance(args.n, args.p)?;
    Ok(vec![
        ("n", args.n.into()),
        ("p", args.p.into()),
        ("l1", d.l1.into()),
        ("l1_truncated", d.l1_truncated.into()),
        ("poisson_mass_above_n", d.poisson_mass_above_n.into()),
        ("error_bound", d.error_bound.into()),
        ("window_lo", d.window_lo.into()),
        ("window_hi", d.window_hi.into()),
    ])
}

fn simulate(args: &SimulateArgs, seed: u64) -> Result<Record, CliError> {
    let model = parse_model(&args.model)?;
    let u = match args.u {
        Some(u) => u,
        None => natural_level(args.n, args.lambda)?,
    };
    let l = match (args.l, args.lambda_cluster) {
        (Some(l), _) => l,
        (None, Some(lc)) => cluster_gap(args.n, u, lc)?.l,
        (None, None) => 0,
    };
    let sampler = PathSampler::new(&model, args.n as usize, args.allow_clipping)?;
    let path = sampler.sample(StreamKey::from(seed));
    let window = IndexWindow::full(path.values.len());
    let d = decompose(&path.values, u, l, window)?;
    let clustered: usize = d.cluster_counts.iter().sum();
    let mean_size = if d.centers.is_empty() { f64::NAN } else { clustered as f64 / d.centers.len() as f64 };
    Ok(vec![
        ("seed", seed.into()),
        ("n", args.n.into()),
        ("u", u.into()),
        ("l", l.into()),
        ("total", d.total.into()),
        ("head_count", d.head_count.into()),
        ("centers", d.centers.len().into()),
        ("interior_centers", interior_center_count(&d.centers, l, window).into()),
        ("mean_cluster_size", mean_size.into()),
        ("max_cluster_size", d.cluster_counts.iter().max().copied().unwrap_or(0).into()),
        ("identity_holds", d.identity_holds().into()),
        ("distortion", path.distortion.into()),
    ])
}

fn experiment(cli: &Cli, args: &ExperimentArgs) -> Result<String, CliError> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    let (result, files) = harness::run_and_write(&config)?;
    if cli.format == Format::Csv {
        return Ok(summary_csv(&result)?);
    }
    let mut text = format!("experiment = {}\nmaster_seed = {}\nconfig_hash = {}\n", result.experiment, result.master_seed, result.config_hash);
    for (name, value) in result.summary.columns.iter().zip(&result.summary.rows[0]) {
        text.push_str(&format!("{name} = {value}\n"));
    }
    text.push_str(&format!("wall_ms = {}\n", result.wall_ms));
    for path in [&files.rows, &files.summary, &files.plot] {
        text.push_str(&format!("wrote {}\n", path.display()));
    }
    for w in &result.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    Ok(text)
}

fn render(record: &Record, format: Format) -> Result<String, CliError> {
    match format {
        Format::Text => Ok(record.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Core(Error::Config(e.to_string()));
            w.write_record(record.iter().map(|(k, _)| *k)).map_err(io)?;
            w.write_record(record.iter().map(|(_, v)| v.to_string())).map_err(io)?;
            let bytes = w.into_inner().map_err(|e| CliError::Core(Error::Config(e.to_string())))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.command {
        Command::Experiment(args) => {
            print!("{}", experiment(cli, args)?);
            return Ok(());
        }
        Command::Levels(args) => render(&levels(args)?, cli.format)?,
        Command::Bounds(args) => render(&bounds(args)?, cli.format)?,
        Command::Tv(args) => render(&tv(args)?, cli.format)?,
        Command::Simulate(args) => render(&simulate(args, cli.seed.unwrap_or(0))?, cli.format)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
