use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "surropt",
    version,
    about = "Surrogate-assisted layout optimization experiments"
)]
pub struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `base_seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled data set with the synthetic oracle.
    GenData {
        #[arg(long)]
        count: Option<usize>,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one surrogate per metric for each requested architecture.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated architecture table rows, e.g. `1,2,3`.
        #[arg(long, value_delimiter = ',')]
        specs: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every variant on every scenario with the best surrogates.
    Optimize {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise rank-sum tests between variants, per scenario.
    Compare {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize and verify a bundle produced by `pipeline`.
    Report {
        #[arg(long)]
        bundle: PathBuf,
    },
    /// gen-data, train, optimize, compare and report into one bundle.
    Pipeline {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.base_seed = s;
    }
    match &cli.command {
        Command::GenData { count: Some(c), .. } => cfg.data.count = *c,
        Command::Train { specs: Some(s), .. } => cfg.surrogate_spec_indices = s.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::GenData { out, .. } => {
            commands::gen_data(&cfg, cfg.data.count, out)?;
        }
        Command::Train { data, out, .. } => {
            let o = commands::train(&cfg, data, &cfg.surrogate_spec_indices, out)?;
            for b in &o.best {
                println!("{}: best spec {} (test MSE {:.4e})", b.metric, b.spec_index, b.test_mse);
            }
        }
        Command::Optimize { models, out } => {
            let o = commands::optimize(&cfg, models, out)?;
            println!("{} runs written to {}", o.runs.len(), out.display());
        }
        Command::Compare { traces, out } => {
            let o = commands::compare(&cfg, traces, out)?;
            for s in &o.summaries {
                let names: Vec<&str> = s.never_outperformed.iter().map(|v| v.name()).collect();
                println!("scenario {}: never outperformed: {}", s.scenario, names.join(" "));
            }
        }
        Command::Report { bundle } => print_report(&commands::report(bundle)?),
        Command::Pipeline { out } => print_report(&commands::pipeline(&cfg, out)?),
    }
    Ok(())
}

fn print_report(r: &commands::Report) {
    for b in &r.best_objective {
        println!(
            "scenario {}: best F = {} ({} run {})",
            b.scenario, b.value, b.variant, b.run_index
        );
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on usage or configuration errors, 2 on runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl From<clap::Error> for ExperimentError {
    fn from(e: clap::Error) -> Self {
        ExperimentError::Config(e.to_string())
    }
}
