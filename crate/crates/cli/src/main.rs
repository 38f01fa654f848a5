use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;
use srmt_core::averaged::{self, averaged_table, AveragedPoint};
use srmt_core::saddle::{self, analytic_table, SpectralAnalytic};
use srmt_core::{DiagonalProfile, Table};
use srmt_cli::config::{self, Experiment, Overrides, ProfileKind, RawConfig};
use srmt_cli::error::exit;
use srmt_cli::{compare_report, CliError, CliResult, ToleranceSpec};

/// Structured random matrices: Monte Carlo, saddle-point and averaged theory.
#[derive(Parser, Debug)]
#[command(name = "srmt", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SRMT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment from a config file or a preset.
    Run(RunArgs),
    /// Compare an analytic CSV against a Monte Carlo CSV.
    Compare(CompareArgs),
    /// Solve the saddle-point system for one profile.
    Solve(SolveArgs),
    /// Solve the Gaussian-W averaged system.
    Averaged(AveragedArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML config; its keys win over the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Matrix sizes.
    #[arg(long = "n", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long = "q", value_delimiter = ',')]
    q_list: Option<Vec<u32>>,
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    analytic: PathBuf,
    #[arg(long)]
    mc: PathBuf,
    /// Join column, e.g. `E` or `N`.
    #[arg(long)]
    key: String,
    #[arg(long)]
    analytic_column: String,
    #[arg(long)]
    mc_column: String,
    #[arg(long)]
    stderr_column: Option<String>,
    #[arg(long)]
    max_rel: Option<f64>,
    #[arg(long)]
    max_abs: Option<f64>,
    #[arg(long)]
    max_z: Option<f64>,
    /// Write the comparison table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    profile: ProfileKind,
    /// Profile CSV (`i,w,d`) when `--profile file`.
    #[arg(long)]
    profile_file: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    energy: Vec<f64>,
    #[arg(long = "q", value_delimiter = ',', default_value = "2")]
    q_list: Vec<u32>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AveragedArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    energy: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long = "q", value_delimiter = ',', default_value = "2")]
    q_list: Vec<u32>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(table: &Table, output: Option<&PathBuf>) -> CliResult<()> {
    match output {
        Some(path) => Ok(table.write_path(path)?),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(table.to_csv_string().as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn cmd_run(args: RunArgs, threads: Option<usize>) -> CliResult<u8> {
    let file = match &args.config {
        Some(path) => config::parse_config(path)?,
        None => RawConfig::default(),
    };
    let flags = Overrides {
        experiment: args.experiment,
        n_list: args.n_list,
        realizations: args.realizations,
        q_list: args.q_list,
        energy: args.energy,
        base_seed: args.seed,
        output_dir: args.output,
        threads,
    };
    let (cfg, warnings) = config::resolve(file, &flags)?;
    for w in warnings {
        warn!("{w}");
    }
    println!(
        "[srmt] {}: N = {:?}, {} realizations, seed {}, output {}",
        cfg.experiment.name(),
        cfg.n_list,
        cfg.realizations,
        cfg.base_seed,
        cfg.output_dir.display()
    );
    let outcome = srmt_cli::run(&cfg)?;
    for g in &outcome.gates {
        println!("[srmt] {} {}: {}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
    println!("[srmt] wrote {} files", outcome.files.len());
    Ok(if outcome.passed() { exit::PASS } else { exit::GATE_FAILURE })
}

fn cmd_compare(args: CompareArgs) -> CliResult<u8> {
    let analytic = Table::read_path(&args.analytic)?;
    let mc = Table::read_path(&args.mc)?;
    let spec = ToleranceSpec {
        stderr_column: args.stderr_column,
        max_rel: args.max_rel,
        max_abs: args.max_abs,
        max_z: args.max_z,
        ..ToleranceSpec::new(&args.key, &args.analytic_column, &args.mc_column)
    };
    let report = compare_report(&analytic, &mc, &spec)?;
    emit(&report.to_table(), args.output.as_ref())?;
    eprintln!(
        "[srmt] {} rows, {}",
        report.rows.len(),
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(if report.pass { exit::PASS } else { exit::GATE_FAILURE })
}

fn cmd_solve(args: SolveArgs) -> CliResult<u8> {
    let profile = match args.profile {
        ProfileKind::Uniform => DiagonalProfile::uniform(args.n)?,
        ProfileKind::InverseIndex => srmt_core::model::build_inverse_index_profile(args.n)?,
        ProfileKind::File => {
            let path = args
                .profile_file
                .ok_or_else(|| CliError::Usage("--profile file needs --profile-file".into()))?;
            DiagonalProfile::from_table(&Table::read_path(path)?)?
        }
    };
    let points = saddle::solve_sweep(&profile, &args.energy)
        .into_iter()
        .map(|r| SpectralAnalytic::from_saddle(&profile, r?, &args.q_list))
        .collect::<srmt_core::Result<Vec<_>>>()?;
    emit(&analytic_table(&points, &args.q_list), args.output.as_ref())?;
    Ok(exit::PASS)
}

fn cmd_averaged(args: AveragedArgs) -> CliResult<u8> {
    let points = averaged::solve_averaged_sweep(&args.energy, args.sigma)
        .into_iter()
        .map(|r| AveragedPoint::compute(r?, args.n, &args.q_list))
        .collect::<srmt_core::Result<Vec<_>>>()?;
    emit(&averaged_table(&points, &args.q_list), args.output.as_ref())?;
    Ok(exit::PASS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::PASS });
        }
    };
    if cli.threads == Some(0) {
        eprintln!("srmt: --threads must be >= 1");
        return ExitCode::from(exit::USAGE);
    }
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, cli.threads),
        Command::Compare(args) => cmd_compare(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Averaged(args) => cmd_averaged(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("srmt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
