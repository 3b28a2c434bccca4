use std::path::PathBuf;

use clap::Parser;
use pesim_cli::{execute, Invocation, Mode};

/// Primitive-equation small-noise simulator.
///
/// Exit codes: 0 success, 1 runtime failure or failed verification,
/// 2 config error, 3 blow-up, 4 optimizer not converged. The output
/// directory is `--out`, else $PESIM_OUT, else the config's `out`.
#[derive(Parser, Debug)]
#[command(name = "pesim", version)]
struct Args {
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { pesim_cli::exit::CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = execute(&Invocation {
        mode: args.mode,
        config: args.config,
        seed: args.seed,
        out: args.out,
    });
    std::process::exit(code);
}
