//! Kirchhoff solutions of chains and uniform banded networks against their
//! series and parallel closed forms.
//!
//! cargo run --example network_closed_forms

use std::collections::BTreeMap;

use slrt::network::{banded_uniform_conductance, series_conductance, two_probe_conductance};
use slrt::{inverse_resistivity, inverse_resistivity_with, ConductanceNetwork, ProbePlacement};

fn main() -> slrt::Result<()> {
    let g = [1.0, 0.5, 2.0, 0.01, 4.0, 1.0];
    let chain = ConductanceNetwork::chain(&g)?;
    let solved = two_probe_conductance(&chain, 0, g.len())?;
    println!(
        "chain: resistance {:.6}, inverse resistivity {:.6}, series formula {:.6}, residual {:.1e}",
        solved.resistance,
        solved.inverse_resistivity,
        series_conductance(&g)?,
        solved.residual
    );

    let bonds: BTreeMap<usize, f64> = [(1, 1.0), (2, 0.5), (3, 0.25), (4, 0.1)].into_iter().collect();
    println!("banded: sum r^2 g_r = {:.4}", banded_uniform_conductance(&bonds)?);
    for nodes in [20, 50, 200, 800] {
        let net = ConductanceNetwork::banded(nodes, &bonds)?;
        let endpoints = inverse_resistivity(&net)?;
        let interior = inverse_resistivity_with(&net, ProbePlacement::Interior)?.inverse_resistivity;
        println!("  N = {nodes:>4}: endpoints {endpoints:.4}, interior {interior:.4}");
    }
    Ok(())
}
