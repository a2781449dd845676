mod args;
mod commands;
mod emit;

use args::{CantorCommand, Cli, Command};
use clap::Parser;
use emit::{emit, CliError, CliResult, Report};
use serde::Serialize;
use serde_json::Value;

fn echo<T: Serialize>(a: &T) -> Value {
    serde_json::to_value(a).expect("serializable arguments")
}

fn resolve_threads(flag: Option<usize>) -> CliResult<usize> {
    let from_env = || -> CliResult<Option<usize>> {
        match std::env::var("WEYL_LAB_THREADS") {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("WEYL_LAB_THREADS=`{v}` is not a thread count"))),
            Err(_) => Ok(None),
        }
    };
    let n = match flag {
        Some(n) => n,
        None => from_env()?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if n == 0 {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn dispatch(cmd: &Command) -> CliResult<(Value, Report)> {
    use commands as c;
    Ok(match cmd {
        Command::Eval(a) => (echo(a), c::eval(a)?),
        Command::Certify(a) => (echo(a), c::certify(a)?),
        Command::Family(a) => (echo(a), c::family(a)?),
        Command::Dio(a) => (echo(a), c::dio(a)?),
        Command::Delta(a) => (echo(a), c::delta(a)?),
        Command::Bounds(a) => (echo(a), c::bounds(a)?),
        Command::Continuity(a) => (echo(a), c::continuity(a)?),
        Command::Liminf(a) => (echo(a), c::liminf(a)?),
        Command::Search(a) => (echo(a), c::search(a)?),
        Command::Orbit(a) => (echo(a), c::orbit(a)?),
        Command::Restricted(a) => (echo(a), c::restricted(a)?),
        Command::Band(a) => (echo(a), c::band(a)?),
        Command::Psi(a) => (echo(a), c::psi(a)?),
        Command::Cf(a) => (echo(a), c::cf(a)?),
        Command::Boxdim(a) => (echo(a), c::boxdim(a)?),
        Command::Cantor(sub) => {
            let cfg = match sub {
                CantorCommand::Sample(a) => echo(a),
                CantorCommand::Measure(a) => echo(a),
                CantorCommand::Expectation(a) => echo(a),
                CantorCommand::Draw(a) => echo(a),
                CantorCommand::WeylStat(a) => echo(a),
            };
            (cfg, c::cantor(sub)?)
        }
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = resolve_threads(cli.global.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let (config, report) = dispatch(&cli.command)?;
    emit(&cli.global, threads, cli.command.name(), config, report)
}

fn main() {
    let cli = Cli::parse();
    let name = cli.command.name();
    if let Err(e) = run(cli) {
        eprintln!("weyl-lab {name}: {e}");
        std::process::exit(e.exit_code());
    }
}
