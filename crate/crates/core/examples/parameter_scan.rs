//! Runs one of the bundled scan configurations and prints the median curves.
//!
//! cargo run --example parameter_scan [config.json] [output-dir]

use std::path::PathBuf;

use slrt::scan::{median_curves, run_scan, ScanConfig};

fn main() -> slrt::Result<()> {
    let mut args = std::env::args().skip(1);
    let config_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/ensemble_scan.json"));
    let mut config = ScanConfig::read(&config_path)?;
    config.output_dir = PathBuf::from(args.next().unwrap_or_else(|| "slrt-example-out/scan".into()));

    let outcome = run_scan(&config)?;
    println!(
        "{} rows in {:.2} s, hash {}",
        outcome.manifest.rows, outcome.manifest.wall_time_seconds, outcome.manifest.content_hash
    );
    let lrt = median_curves(&config, &outcome.rows, |r| r.d_lrt);
    let slrt = median_curves(&config, &outcome.rows, |r| r.d_slrt);
    println!("{:>8} {:>12} {:>12}", config.scan_parameter.label(), "D_LRT", "D_SLRT");
    for ((v, l), (_, s)) in lrt.iter().zip(&slrt) {
        println!("{v:>8} {l:>12.5} {s:>12.5}");
    }
    println!("outputs in {}", config.output_dir.display());
    Ok(())
}
