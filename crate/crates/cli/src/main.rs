use clap::Parser;
use smoney_cli::{execute, RunConfig, EXIT_OTHER};

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(config) => config,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_OTHER } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = execute(&config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
