mod config;
mod run;

use std::process::ExitCode;

use config::RunConfig;
use run::RunError;

fn configure_threads() -> Result<(), RunError> {
    let Ok(raw) = std::env::var("TOEPLITZ_FH_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| RunError::Usage(format!("TOEPLITZ_FH_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| RunError::Usage(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let config = match RunConfig::parse(std::env::args_os().skip(1)) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version land here with exit code 0
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = configure_threads()
        .and_then(|_| run::check_output(&config))
        .and_then(|_| run::execute(&config))
        .and_then(|outcome| run::emit(&config, &outcome).map(|_| outcome));
    match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
