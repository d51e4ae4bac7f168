use clap::Parser;

use dagger_core::cli::{main_with, JobConfig};

fn main() {
    let config = JobConfig::parse();
    std::process::exit(main_with(&config));
}
