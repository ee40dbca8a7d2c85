use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cwc_core::compiler::{compile, emit_ground_model, validate, CompiledModel};
use cwc_core::gillespie::run_ensemble;
use cwc_core::monitor::{write_ensemble_csv, write_run_csv};
use cwc_core::surface::{parse_model, Diagnostic, SurfaceModel};

const EXIT_USAGE: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Parse, compile and simulate spatial CWC models.
#[derive(Parser)]
#[command(name = "cwc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its diagnostics.
    Validate { model: PathBuf },
    /// Compile a model to ground rules.
    Compile {
        model: PathBuf,
        /// Write `<out>/<model>.ground` instead of printing to stdout.
        #[arg(long)]
        emit_ground: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Simulate an ensemble and write the monitor series as CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long)]
    horizon: f64,
    /// Sampling interval; defaults to a hundredth of the horizon.
    #[arg(long)]
    interval: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", path.display());
    }
}

fn load(path: &Path) -> Result<SurfaceModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|diags| {
        print_diagnostics(path, &diags.0);
        Failure::new(EXIT_MODEL, format!("{}: parsing failed", path.display()))
    })
}

fn load_compiled(path: &Path) -> Result<CompiledModel, Failure> {
    let model = load(path)?;
    let diags = validate(&model);
    print_diagnostics(path, &diags);
    if diags.iter().any(Diagnostic::is_error) {
        return Err(Failure::new(EXIT_MODEL, format!("{}: validation failed", path.display())));
    }
    compile(&model).map_err(|diags| {
        print_diagnostics(path, &diags.0);
        Failure::new(EXIT_MODEL, format!("{}: compilation failed", path.display()))
    })
}

fn threads() -> Result<usize, Failure> {
    match std::env::var("CWC_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_USAGE, format!("CWC_THREADS must be a nonnegative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", dir.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { model } => {
            let m = load_compiled(&model)?;
            println!(
                "{}: ok ({} ground rules, {} cells, {} monitors)",
                model.display(),
                m.rules.len(),
                m.initial.len(),
                m.monitors.len()
            );
        }
        Command::Compile { model, emit_ground, out } => {
            let m = load_compiled(&model)?;
            let text = emit_ground_model(&m);
            if emit_ground {
                create_dir(&out)?;
                let path = out.join(format!("{}.ground", m.name));
                fs::write(&path, text).map_err(|e| Failure::new(EXIT_RUNTIME, format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            } else {
                print!("{text}");
            }
        }
        Command::Run(args) => {
            if !(args.horizon.is_finite() && args.horizon > 0.0) {
                return Err(Failure::new(EXIT_USAGE, "--horizon must be a positive number"));
            }
            let interval = args.interval.unwrap_or(args.horizon / 100.0);
            if !(interval.is_finite() && interval > 0.0) {
                return Err(Failure::new(EXIT_USAGE, "--interval must be a positive number"));
            }
            let threads = threads()?;
            let m = load_compiled(&args.model)?;
            let runs = usize::try_from(args.runs).map_err(|_| Failure::new(EXIT_USAGE, "--runs is too large"))?;
            let (series, trajectories) = run_ensemble(&m, runs, args.horizon, interval, args.seed, threads)
                .map_err(|e| Failure::new(EXIT_RUNTIME, e.to_string()))?;
            create_dir(&args.out)?;
            let csv_fail = |e: cwc_core::monitor::CsvError| Failure::new(EXIT_RUNTIME, e.to_string());
            for (i, t) in trajectories.iter().enumerate() {
                write_run_csv(t, &args.out.join(format!("{}_run{i}.csv", m.name))).map_err(csv_fail)?;
            }
            let path = args.out.join(format!("{}_ensemble.csv", m.name));
            write_ensemble_csv(&series, &path).map_err(csv_fail)?;
            eprintln!("wrote {} ({} runs, {} samples)", path.display(), runs, series.times.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
