use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lacuna_cli::{run, CliError, Command, Format, Limits, RunConfig, EXIT_OK};

/// Exact expansions, modular data and lacunarity classification for the
/// eta-quotients F_{a,b,c}.
#[derive(Debug, Parser)]
#[command(name = "lacuna", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Directory for cached series and classify shard results.
    #[arg(long, global = true, env = "LACUNA_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, env = "LACUNA_MAX_TERMS", default_value_t = Limits::default().max_terms)]
    max_terms: u64,

    #[arg(long, global = true, env = "LACUNA_PARTITION_BUDGET", default_value_t = Limits::default().partition_budget)]
    partition_budget: u64,

    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Run a saved configuration instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the effective configuration to this file before running.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
}

fn fail(e: CliError) -> ExitCode {
    let _ = writeln!(io::stderr(), "{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => return fail(CliError::Usage(e.to_string().trim().to_string())),
    };
    let config = match (&cli.config, cli.command) {
        (Some(path), None) => match RunConfig::load(path) {
            Ok(config) => config,
            Err(e) => return fail(e),
        },
        (None, Some(command)) => RunConfig {
            command,
            format: cli.format,
            cache_dir: cli.cache_dir,
            seed: cli.seed,
            limits: Limits { max_terms: cli.max_terms, partition_budget: cli.partition_budget, jobs: cli.jobs },
        },
        (Some(_), Some(_)) => return fail(CliError::Usage("--config and a subcommand are exclusive".into())),
        (None, None) => return fail(CliError::Usage("a subcommand or --config is required".into())),
    };
    if let Some(path) = &cli.save_config {
        if let Err(e) = config.save(path) {
            return fail(e);
        }
    }
    let stdout = io::stdout();
    let code = run(&config, &mut stdout.lock(), &mut io::stderr());
    ExitCode::from(code as u8)
}
