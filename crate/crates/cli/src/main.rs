use clap::Parser;
use fractal_weyl_cli::{run, Cli};

fn main() {
    let result = Cli::parse().into_config().and_then(|config| run(&config));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
