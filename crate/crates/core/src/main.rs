use clap::Parser;

use linkdeg::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(records) => {
            for r in records {
                println!("{}", r.to_json());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
