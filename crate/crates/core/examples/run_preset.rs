//! Runs a shipped preset through the batch front end into a temporary directory.
//!
//! `cargo run --example run_preset -- sv3`

use tcl_engine::cli::{execute, prepare};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sv1".into());
    let dir = std::env::temp_dir().join(format!("tcl-engine-{name}"));
    let extra = [("output.dir", toml::Value::String(dir.display().to_string()))];
    let (cfg, model) = prepare(&format!("preset:{name}"), &[], &extra).unwrap_or_else(|f| panic!("{}", f.message));
    let artifacts = execute(&cfg, &model).unwrap_or_else(|e| panic!("{}: {}", e.op, e.error));
    for f in artifacts.files {
        println!("{}", f.display());
    }
}
