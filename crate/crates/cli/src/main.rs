use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use viscowell::diag::DecayModel;
use viscowell_cli::sweep::{run_sweep, write_sweep, Agreement, Axis};
use viscowell_cli::{cmd_classify, cmd_constants, cmd_fit, load_config, simulate, write_json, write_simulation, CliError};

/// Energy floor used when fitting a trace that carries no solver settings.
const FIT_FLOOR: f64 = 1e-14;

#[derive(Parser)]
#[command(name = "viscowell", version, about = "Viscoelastic wave simulator and potential-well calculator")]
struct Cli {
    /// Problem description in JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Bundled problem by name (see `viscowell presets`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output file (constants, classify, fit) or directory (simulate, sweep).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Treat assumption warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitModel {
    Exponential,
    Power,
}

#[derive(Subcommand)]
enum Command {
    /// Potential-well constants and assumption report.
    Constants,
    /// Run a problem; writes trace.csv, checkpoint.bin and summary.json.
    Simulate,
    /// Predicted long-time regime from the initial data.
    Classify,
    /// Fit a decay law to a trace CSV.
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "exponential")]
        model: FitModel,
        /// Fit window as `t0:t1`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
    },
    /// Grid of runs comparing predicted and observed outcomes.
    Sweep {
        /// `name=start:stop:count` or `name=v1,v2,...`; repeatable.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
    },
    /// List bundled presets.
    Presets,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected t0:t1")?;
    let (a, b): (f64, f64) = (a.parse().map_err(|_| "bad t0")?, b.parse().map_err(|_| "bad t1")?);
    if a < b { Ok((a, b)) } else { Err("t0 must be below t1".into()) }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    let config = || load_config(cli.config.as_deref(), cli.preset.as_deref(), cli.strict);
    match cli.command {
        Command::Constants => write_json(&cmd_constants(&config()?)?, out),
        Command::Classify => write_json(&cmd_classify(&config()?)?, out),
        Command::Simulate => {
            let sim = simulate(&config()?)?;
            match out {
                Some(dir) => write_simulation(&sim, dir),
                None => write_json(&sim.summary, None),
            }
        }
        Command::Fit { trace, model, window } => {
            let model = match model {
                FitModel::Exponential => DecayModel::Exponential,
                FitModel::Power => DecayModel::Power,
            };
            write_json(&cmd_fit(&trace, model, window, FIT_FLOOR)?, out)
        }
        Command::Sweep { axes } => {
            let cfg = config()?;
            let axes = axes.iter().map(|a| a.parse()).collect::<Result<Vec<Axis>, _>>()?;
            let reports = run_sweep(&cfg, &axes, cli.jobs)?;
            let dir = out.map(PathBuf::from).unwrap_or_else(|| PathBuf::from("sweep-out"));
            write_sweep(&reports, &dir)?;
            let count = |a: Agreement| reports.iter().filter(|r| r.point.agreement == a).count();
            eprintln!(
                "{} points: {} match, {} mismatch, {} no prediction, {} failed; results in {}",
                reports.len(),
                count(Agreement::Match),
                count(Agreement::Mismatch),
                count(Agreement::NoPrediction),
                count(Agreement::Failed),
                dir.display()
            );
            Ok(())
        }
        Command::Presets => {
            viscowell_cli::presets::names().for_each(|n| println!("{n}"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VISCOWELL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
