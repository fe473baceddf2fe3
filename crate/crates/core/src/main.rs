use std::path::PathBuf;
use std::process::ExitCode;

use barofv::cli::{cmd_eoc, cmd_run, parse_levels};
use barofv::config::RunConfig;
use barofv::study::ReferenceMode;
use barofv::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "barofv",
    version,
    about = "Finite-volume barotropic Navier-Stokes solver"
)]
struct Cli {
    /// Directory for output files; overrides `output.dir`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a configuration value, e.g. `--set solver.cfl=0.15`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a refinement study and write the convergence table.
    Eoc {
        #[arg(long)]
        case: String,
        /// Comma-separated cells per axis, coarse to fine.
        #[arg(long)]
        levels: String,
        /// `exact` or `finest` (the last level is the reference).
        #[arg(long, default_value = "exact")]
        reference: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Run the levels one after another instead of concurrently.
        #[arg(long)]
        serial: bool,
    },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let out = cli.output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let o = cmd_run(&cfg, &out)?;
            println!(
                "{} steps to t = {}, mass drift {:e}, min density {}, {:.2} s",
                o.steps,
                o.final_time,
                o.mass_drift(),
                o.min_density,
                o.wall_seconds
            );
        }
        Command::Eoc {
            case,
            levels,
            reference,
            config,
            overrides,
            serial,
        } => {
            let mut overrides = overrides;
            overrides.insert(0, format!("case={case}"));
            let cfg = RunConfig::load(&config, &overrides)?;
            let levels = parse_levels(&levels)?;
            let reference: ReferenceMode = reference.parse()?;
            let out = cli.output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let result = cmd_eoc(&cfg, &case, &levels, reference, !serial, &out)?;
            for (level, row) in result.levels.iter().zip(&result.table) {
                let e = row.errors.as_array();
                match row.eoc {
                    Some(o) => println!(
                        "{:>5}  {:.3e} ({:.2})  {:.3e} ({:.2})  {:.3e} ({:.2})  {:.3e} ({:.2})",
                        level.cells_per_axis, e[0], o[0], e[1], o[1], e[2], o[2], e[3], o[3]
                    ),
                    None => println!(
                        "{:>5}  {:.3e}         {:.3e}         {:.3e}         {:.3e}",
                        level.cells_per_axis, e[0], e[1], e[2], e[3]
                    ),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(violations)) => {
            for v in violations {
                eprintln!("error[config]: {v}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', "; "));
            ExitCode::FAILURE
        }
    }
}
