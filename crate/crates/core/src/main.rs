use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use minwage::distribution::{simulate_panel, PanelConfig};
use minwage::experiments::{
    compare_scenarios, export_figure_data, indicator_table, run_experiment, run_scenario,
    scenario_figures, write_atomically, CsvFile,
};
use minwage::{load_config, Error, Parameters};

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  2  usage error (unknown flag, missing argument)
  3  configuration error (unreadable, malformed or invalid config)
  4  solver error (no convergence, non-finite values, degenerate economy)
  5  output error (cannot write results)

Environment:
  MINWAGE_THREADS  worker threads when --threads is not given";

#[derive(Parser, Debug)]
#[command(name = "minwage", version, about = "Directed-search labor market with savings: steady states and minimum-wage experiments", after_help = EXIT_HELP)]
struct Cli {
    /// Worker threads (default: MINWAGE_THREADS, else all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log solver residuals to stderr
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one economy and write its indicators and figure data
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the baseline, non-binding and binding scenarios and write table3.csv
    Experiment {
        #[arg(long)]
        out: PathBuf,
        /// Base parameters (defaults when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare matrix-based indicators with a simulated panel of workers
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        workers: usize,
        #[arg(long, default_value_t = 4_000)]
        periods: usize,
        /// Independent random streams (part of the reproducibility contract)
        #[arg(long, default_value_t = 16)]
        shards: usize,
        /// Minimum wage of the simulated economy
        #[arg(long, default_value_t = 0.0)]
        w_min: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Solve the three scenarios and write the data behind every figure panel
    ExportFigures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Parse { .. } | Error::Invalid { .. } => 3,
            Error::Io { .. } | Error::Export(_) => 5,
            _ => 4,
        };
        Failure { code, error }
    }
}

/// Any failure while loading a config, including I/O, is a configuration error.
fn config_params(path: &PathBuf) -> Result<Parameters, Failure> {
    load_config(path).map_err(|error| Failure { code: 3, error })
}

fn base_params(config: Option<&PathBuf>) -> Result<Parameters, Failure> {
    match config {
        Some(path) => config_params(path),
        None => Ok(Parameters::default()),
    }
}

fn summary(label: &str, u_low: f64, u_high: f64, j2j: f64) -> CsvFile {
    CsvFile {
        name: "indicators.csv".into(),
        contents: format!(
            "scenario,unemployment_rate_low_pct,unemployment_rate_high_pct,job_to_job_rate_pct\n{label},{},{},{}\n",
            100.0 * u_low,
            100.0 * u_high,
            100.0 * j2j
        ),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { config, out } => {
            let p = config_params(&config)?;
            let s = run_scenario(&p, p.w_min, "custom")?;
            let mut files = scenario_figures(&s)?;
            files.push(summary(
                &s.label,
                s.steady.u_rate_low(),
                s.steady.u_rate_high(),
                s.steady.j2j_rate,
            ));
            write_atomically(&out, &files)?;
            println!(
                "u_low {:.3}%  u_high {:.3}%  j2j {:.3}%  ({} files in {})",
                100.0 * s.steady.u_rate_low(),
                100.0 * s.steady.u_rate_high(),
                100.0 * s.steady.j2j_rate,
                files.len(),
                out.display()
            );
        }
        Command::Experiment { out, config } => {
            let runs = run_experiment(&base_params(config.as_ref())?)?;
            let table = compare_scenarios(&runs[0], &runs[1..])?;
            let csv = indicator_table(&table);
            write_atomically(&out, std::slice::from_ref(&csv))?;
            print!("{}", csv.contents);
        }
        Command::Simulate {
            seed,
            workers,
            periods,
            shards,
            w_min,
            config,
        } => {
            let p = base_params(config.as_ref())?;
            let s = run_scenario(&p, w_min, "custom")?;
            let cfg = PanelConfig {
                seed,
                workers,
                periods,
                burn_in: None,
                shards,
            };
            info!("simulating {workers} workers for {periods} periods");
            let panel = simulate_panel(&s.model, &s.eq, &cfg)?;
            println!("indicator,matrix,panel,panel_se");
            for (eta, name) in [
                (0, "unemployment_rate_low"),
                (s.model.dims.n_eta - 1, "unemployment_rate_high"),
            ] {
                println!(
                    "{name},{},{},{}",
                    s.steady.u_rate[eta], panel.steady.u_rate[eta], panel.u_rate_se[eta]
                );
            }
            println!(
                "job_to_job_rate,{},{},{}",
                s.steady.j2j_rate, panel.steady.j2j_rate, panel.j2j_se
            );
        }
        Command::ExportFigures { out, config } => {
            let runs = run_experiment(&base_params(config.as_ref())?)?;
            let names = export_figure_data(&runs[0], &runs[1..], &out)?;
            println!("wrote {} files to {}", names.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_env("MINWAGE_LOG")
        .init();

    let threads = cli.threads.or_else(|| {
        std::env::var("MINWAGE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
