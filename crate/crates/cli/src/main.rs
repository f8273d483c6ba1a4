use std::process::ExitCode;

use clap::Parser;
use tiltsense_cli::{run, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Written(files)) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Ok(Outcome::Validated(summary)) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tiltsense: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
