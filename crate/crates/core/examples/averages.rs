//! Algebraic versus resistor-network averages of a constant matrix and of
//! increasingly log-wide random matrices.
//!
//! cargo run --example averages

use slrt::{average_report, build_sparse_ensemble, EnsembleSpec, LineShape, SpectralWeight};
use slrt::{algebraic_average, resistor_network_average_with, CouplingMatrix, ProbePlacement};

fn main() -> slrt::Result<()> {
    let f = SpectralWeight::single(1.0, LineShape::Rectangular, 10.0, 1.0)?;

    let flat = CouplingMatrix::from_upper(200, |_, _| 1.0)?;
    let four_probe = resistor_network_average_with(&flat, &f, ProbePlacement::Interior)?;
    println!(
        "constant matrix: algebraic {:.6}, network {:.6}",
        algebraic_average(&flat, &f),
        four_probe.value
    );

    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}", "sigma", "algebraic", "network", "geometric", "median", "g_s");
    for sigma in [0.0, 1.0, 2.0, 3.0, 4.0, 6.0] {
        let x = build_sparse_ensemble(&EnsembleSpec::flat(200, 10, sigma, 11))?.coupling;
        let r = average_report(&x, &f)?;
        println!(
            "{sigma:>6.1} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
            r.algebraic, r.resistor_network, r.geometric, r.median, r.g_s
        );
    }
    Ok(())
}
