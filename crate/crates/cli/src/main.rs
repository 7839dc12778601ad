mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, SeedArg};
use prognosis::Error;

const EXIT_ARGUMENT: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    if e.is_argument() {
        EXIT_ARGUMENT
    } else if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_DATA
    }
}

fn require_seed(seed: Option<SeedArg>) -> prognosis::Result<u64> {
    seed.map(SeedArg::resolve)
        .ok_or_else(|| Error::Argument("--seed is required (a number, or 'auto' for a fresh one)".into()))
}

fn run(cli: &Cli) -> prognosis::Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Argument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Argument(format!("cannot configure {k} threads: {e}")))?;
    }
    match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Sample(a) => commands::sample(a, require_seed(cli.seed)?),
        Command::Eval(a) => commands::eval(a, require_seed(cli.seed)?),
        Command::Assess(a) => commands::assess(a, require_seed(cli.seed)?),
        Command::Bootstrap(a) => commands::bootstrap(a, require_seed(cli.seed)?),
        Command::Sensitivity(a) => commands::sensitivity(a, require_seed(cli.seed)?),
        Command::Mop(a) => commands::mop(a, require_seed(cli.seed)?),
        Command::FieldAssess(a) => commands::field_assess(a, require_seed(cli.seed)?),
        Command::Study(a) => commands::study(a, require_seed(cli.seed)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
