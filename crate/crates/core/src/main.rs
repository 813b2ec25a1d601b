use clap::Parser;
use elastic_bie::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
