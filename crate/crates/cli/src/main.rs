use clap::Parser;
use spraycell_cli::{run, status_of, Cli, ExitStatus};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { ExitStatus::Usage.code() } else { 0 };
            std::process::exit(code);
        }
    };
    let status = match run(cli) {
        Ok(status) => status,
        Err(e) => {
            let status = status_of(&e);
            eprintln!("error [{}]: {e:#}", status.name());
            status
        }
    };
    std::process::exit(status.code());
}
