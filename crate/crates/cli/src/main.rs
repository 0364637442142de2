use std::process::ExitCode;

use dualbound_cli::{run, CliError};

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(std::env::args_os(), &mut out) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(err @ CliError::Usage(_)) => {
            let code = err.exit_code();
            if let CliError::Usage(e) = err {
                let _ = e.print();
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("dualbound: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
