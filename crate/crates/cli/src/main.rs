use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coophx_cli::experiment::{resolve, RunOverrides};
use coophx_cli::{exit, load_config, preset, run_experiment, CliError, ComparisonReport, ExperimentSpec};
use coophx_core::ClusterSource;

#[derive(Parser)]
#[command(
    name = "coophx",
    version,
    about = "Analytic vs Monte Carlo experiments for cooperative energy-harvesting networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Regenerate the data behind one of the shipped figures.
    Reproduce {
        /// fig2, fig3a, fig3b, fig4a, fig4b, fig5 or fig6.
        figure_id: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Parse and validate a configuration, printing it with defaults filled in.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Full,
    Thinned,
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Directory for CSV and JSON output [default: the config's `output`, else `results`].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    cluster_source: Option<SourceArg>,
}

impl Flags {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            seed: self.seed,
            trials: self.trials,
            tolerance: self.tolerance,
            cluster_source: self.cluster_source.map(|s| match s {
                SourceArg::Full => ClusterSource::FullProcess,
                SourceArg::Thinned => ClusterSource::ThinnedProcess,
            }),
        }
    }
}

fn print_report(report: &ComparisonReport, dir: &Path) {
    let s = &report.summary;
    for c in &s.curves {
        let gap = c.sup_gap.map_or("-".into(), |g| format!("{g:.4}"));
        let cov = c.ci_coverage.map_or("-".into(), |f| format!("{:.1}%", 100.0 * f));
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("[{verdict}] {:<18} {:<28} sup gap {gap:>7}  in CI {cov:>6}", c.label, c.file);
    }
    println!(
        "{}: {} (tolerance {}, seed {}, {} trials, {:.1} s) -> {}",
        s.name,
        if s.pass { "pass" } else { "FAIL" },
        s.tolerance,
        s.seed,
        s.trials,
        s.wall_time_s,
        dir.display()
    );
}

fn execute(mut spec: ExperimentSpec, flags: &Flags) -> Result<bool, CliError> {
    spec = resolve(&spec)?;
    flags.overrides().apply(&mut spec);
    spec.validate()?;
    let dir = flags
        .out_dir
        .clone()
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    log::info!("running {} ({:?}) into {}", spec.name, spec.kind, dir.display());
    let report = run_experiment(&spec, &dir)?;
    print_report(&report, &dir);
    Ok(report.summary.pass)
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, flags } => execute(load_config(&config)?, &flags),
        Command::Reproduce { figure_id, flags } => execute(preset(&figure_id)?, &flags),
        Command::Validate { config } => {
            let spec = resolve(&load_config(&config)?)?;
            println!("{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(true) => exit::PASS,
        Ok(false) => exit::TOLERANCE,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
