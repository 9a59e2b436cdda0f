use std::process::ExitCode;

use frd_cli::{parse_args, run, Parsed};

fn main() -> ExitCode {
    let result = parse_args(std::env::args_os()).and_then(|parsed| match parsed {
        Parsed::Display(text) => {
            print!("{text}");
            Ok(())
        }
        Parsed::Run(cfg) => run(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code as u8)
        }
    }
}
