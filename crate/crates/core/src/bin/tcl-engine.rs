use clap::Parser;
use tcl_engine::cli::{dispatch, Cli};

fn main() {
    std::process::exit(dispatch(Cli::parse()));
}
