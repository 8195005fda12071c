//! Energy spreading under the master equation compared with the
//! inverse resistivity of the same rate network.
//!
//! cargo run --example spreading_oracle [output-dir]

use std::path::PathBuf;

use slrt::dynamics::{evolve_master, index_variance, suggested_horizon};
use slrt::scan::{oracle_case, oracle_network, OracleConfig};
use slrt::svg::{LinePlot, Series};
use slrt::RateNetwork;

fn main() -> slrt::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "slrt-example-out".into()));

    let chain = RateNetwork::from_upper(101, |i, j| if j - i == 1 { 1.0 } else { 0.0 })?;
    let mut p0 = vec![0.0; 101];
    p0[50] = 1.0;
    let times: Vec<f64> = (0..=5).map(|k| k as f64 * 20.0).collect();
    for (t, p) in times.iter().zip(evolve_master(&chain, &p0, &times)?) {
        println!("chain t = {t:>5}: variance {:.3} (2wt = {:.1})", index_variance(&p), 2.0 * t);
    }

    let config = OracleConfig::default();
    let mut plot = LinePlot {
        title: "index variance".into(),
        x_label: "t".into(),
        y_label: "Var n".into(),
        log_y: false,
        series: Vec::new(),
    };
    for seed in 0..3 {
        let w = oracle_network(&config, seed)?;
        let (case, spreading) = oracle_case(&w, seed, config.tolerance)?;
        println!(
            "network {seed}: horizon {:.1}, spreading {:.4}, four-probe {:.4}, deviation {:.3}",
            suggested_horizon(&w),
            case.spreading,
            case.network,
            case.relative_deviation
        );
        let points = spreading.times.iter().copied().zip(spreading.variances.iter().copied()).collect();
        plot.series.push(Series::new(format!("seed {seed}"), points));
        spreading.write(&out, &format!("spreading_{seed}"))?;
    }
    let path = out.join("spreading.svg");
    std::fs::write(&path, plot.render()).map_err(|e| slrt::Error::Io { path: path.clone(), source: e })?;
    println!("plot -> {}", path.display());
    Ok(())
}
