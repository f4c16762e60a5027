//! Generate the nine-participant synthetic cohort, simulate twelve sessions
//! each through the protocol service, and run every batch stage.
//!
//! cargo run --release --example demo_pipeline -- [output_dir]

use std::time::Instant;

use scomo::pipeline::demo::{run_demo, DemoConfig};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "scomo-demo".into());
    let started = Instant::now();
    match run_demo(&out, &DemoConfig::default()) {
        Ok(p) => {
            println!("{} files under {} in {:.1?}", p.written.len(), p.config.output_dir.display(), started.elapsed());
            let p01 = p.params.iter().find(|(k, _)| k.participant_id == "P01").map(|(_, v)| v);
            if let Some(v) = p01 {
                println!("symmetric participant: step-time SI {:.2e}, step-length SI {:.2e}", v.st_si, v.sl_si);
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(2);
        }
    }
}
