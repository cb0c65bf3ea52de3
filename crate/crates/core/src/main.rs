use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mrnprk::harness::{
    cmd_converge, cmd_dump_tableau, cmd_stability, cmd_verify, cmd_work_precision, exit_code, sci, ExperimentConfig,
};
use mrnprk::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "mrnprk",
    version,
    about = "Multirate nonlinearly partitioned Runge-Kutta toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Method name or JSON file; repeat to run several methods.
    #[arg(long = "method", global = true)]
    methods: Vec<String>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Print the order-condition residuals of a method as CSV.
    Verify,
    /// Run a convergence study.
    Converge,
    /// Run a work-precision study.
    WorkPrecision,
    /// Write stability region slices and a degree/stiff-limit summary.
    Stability,
    /// Print the coefficients of a method as JSON.
    DumpTableau,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if !cli.methods.is_empty() {
        cfg.methods = cli.methods.clone();
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn single_method(cfg: &ExperimentConfig) -> Result<String> {
    match cfg.methods.as_slice() {
        [m] => Ok(m.clone()),
        [] => Err(Error::Usage("--method is required".into())),
        _ => Err(Error::Usage("exactly one method is expected".into())),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    log::debug!("{:?} with {:?}", cli.command, cfg);
    match cli.command {
        Command::Verify => {
            let name = single_method(&cfg)?;
            let r = cmd_verify(&name, cli.out.as_deref())?;
            print!("{}", r.report.to_csv());
            eprintln!("order {} (nominal {})", r.report.order, r.nominal_order);
        }
        Command::DumpTableau => {
            let name = single_method(&cfg)?;
            let d = cmd_dump_tableau(&name, cli.out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&d)?);
        }
        Command::Converge | Command::WorkPrecision => {
            let results = if matches!(cli.command, Command::Converge) {
                cmd_converge(&cfg)?
            } else {
                cmd_work_precision(&cfg)?
            };
            for r in &results {
                let slope = r.slope.map(sci).unwrap_or_else(|| "-".into());
                println!("{}\tnominal {}\tslope {}", r.method, r.nominal_order, slope);
            }
        }
        Command::Stability => {
            for s in cmd_stability(&cfg)? {
                println!(
                    "{}\tcoupling {}\tslices {}",
                    s.method,
                    s.stage_sets.coupling.name(),
                    s.slices.len()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
