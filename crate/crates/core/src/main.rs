use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use timebin_sim::cli::commands::{
    analytic_summary, estimate, raman_table, render_raman_csv, render_raman_table, sweep_outputs,
};
use timebin_sim::cli::format::to_json;
use timebin_sim::cli::presets::preset_source;
use timebin_sim::cli::{resolve_scenario, threads_from_env, CliError};
use timebin_sim::fringe::SweepMode;
use timebin_sim::montecarlo::Engine;
use timebin_sim::raman::RamanParams;

#[derive(Parser, Debug)]
#[command(name = "timebin-sim", version)]
#[command(about = "Time-bin entanglement distribution: Raman noise, rates, fringes and Monte Carlo")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct ScenarioArg {
    /// Scenario file (TOML)
    scenario: Option<PathBuf>,

    /// Use a shipped preset instead of a file: uncooled, cooled, distributed-60km
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Analytic,
    Montecarlo,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Sparse,
    Direct,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stokes / anti-Stokes Raman noise versus temperature
    Raman {
        /// Comma-separated temperatures in kelvin
        #[arg(long, value_delimiter = ',', required = true)]
        temps: Vec<f64>,
        /// Pump-to-channel detuning in GHz
        #[arg(long, default_value_t = 400.0)]
        nu_ghz: f64,
        /// Reference temperature for the ratio columns (default: last of --temps)
        #[arg(long)]
        reference: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        gain_per_m: f64,
        #[arg(long, default_value_t = 1.0)]
        length_m: f64,
        #[arg(long, default_value_t = 0.0)]
        loss_per_m: f64,
        #[arg(long, value_enum, default_value_t = TableFormat::Table)]
        format: TableFormat,
    },
    /// Closed-form rates and visibility as JSON
    Analytic {
        #[command(flatten)]
        scenario: ScenarioArg,
    },
    /// Phase sweep: CSV curve plus JSON fit summary
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 24)]
        points: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Analytic)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = EngineArg::Sparse)]
        engine: EngineArg,
        /// Override [run] frames
        #[arg(long)]
        frames: Option<u64>,
        /// Override [run] seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON summary here instead of stderr
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Estimate mean correlated pairs per pulse from a measured visibility
    Estimate {
        #[arg(long, short = 'v')]
        visibility: f64,
        #[command(flatten)]
        scenario: ScenarioArg,
    },
    /// Print a preset scenario file
    Preset { name: String },
}

fn write_out(path: Option<&PathBuf>, text: &str, fallback_stderr: bool) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None if fallback_stderr => {
            eprint!("{text}");
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Raman { temps, nu_ghz, reference, gain_per_m, length_m, loss_per_m, format } => {
            let base = RamanParams {
                gain_per_m,
                length_m,
                loss_per_m,
                detuning_hz: nu_ghz * 1e9,
                temperature_k: temps.first().copied().unwrap_or(1.0),
            };
            let rows = raman_table(&temps, base, reference)?;
            match format {
                TableFormat::Table => print!("{}", render_raman_table(&rows)),
                TableFormat::Csv => print!("{}", render_raman_csv(&rows)),
            }
        }
        Command::Analytic { scenario } => {
            let s = resolve_scenario(scenario.scenario.as_deref(), scenario.preset.as_deref())?;
            print!("{}", to_json(&analytic_summary(&s)?));
        }
        Command::Sweep { scenario, points, mode, engine, frames, seed, csv, json } => {
            let mut s = resolve_scenario(scenario.scenario.as_deref(), scenario.preset.as_deref())?;
            if let Some(f) = frames {
                s.frames = f;
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let mode = match mode {
                ModeArg::Analytic => SweepMode::Analytic,
                ModeArg::Montecarlo => SweepMode::MonteCarlo,
            };
            let engine = match engine {
                EngineArg::Sparse => Engine::Sparse,
                EngineArg::Direct => Engine::Direct,
            };
            let (csv_text, json_text) = sweep_outputs(&s, points, mode, engine)?;
            write_out(csv.as_ref(), &csv_text, false)?;
            write_out(json.as_ref(), &json_text, true)?;
        }
        Command::Estimate { visibility, scenario } => {
            let s = resolve_scenario(scenario.scenario.as_deref(), scenario.preset.as_deref())?;
            print!("{}", to_json(&estimate(visibility, &s)?));
        }
        Command::Preset { name } => {
            let src = preset_source(&name)
                .ok_or_else(|| CliError::usage(format!("unknown preset '{name}'")))?;
            print!("{src}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = threads_from_env().and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
        }
        run(args)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
