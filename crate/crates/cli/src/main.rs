use clap::Parser;
use jumpcal_cli::{exit_code, run, Cli, EXIT_VALIDATION};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Ok(n) = std::env::var("JUMPCAL_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: JUMPCAL_THREADS must be a positive integer, got `{n}`");
                std::process::exit(EXIT_VALIDATION);
            }
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}
