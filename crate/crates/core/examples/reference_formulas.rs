//! Kinetic reference values: the wall formula for a driven billiard and
//! the Drude conductance of a multi-mode ring.
//!
//! cargo run --example reference_formulas

use slrt::models::born_mean_free_path;
use slrt::{drude_reference, wall_reference};

fn main() -> slrt::Result<()> {
    for energy in [0.5, 1.0, 2.0] {
        println!("wall D_0(m = 1, E = {energy}, L_x = 1, rms = 1) = {:.6}", wall_reference(1.0, energy, 1.0, 1.0)?);
    }
    for w in [0.5, 1.0, 2.0] {
        let l = born_mean_free_path(1.0, w, 1.0)?;
        println!("W = {w}: mean free path {l:.3}, G_0(M = 5, L = 200) = {:.5}", drude_reference(5, l, 200.0)?);
    }
    Ok(())
}
