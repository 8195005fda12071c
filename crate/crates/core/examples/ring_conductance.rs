//! Disordered tight-binding ring: linear and semi-linear conductance
//! against the Drude estimate as the disorder grows.
//!
//! cargo run --example ring_conductance

use slrt::scan::{evaluate_ring, Evaluation};
use slrt::RingSpec;

fn main() -> slrt::Result<()> {
    let eval = Evaluation::ring_default();
    println!("{:>6} {:>11} {:>11} {:>11} {:>7} {:>7}", "W", "G_LRT", "G_SLRT", "G_0", "g_c", "g_s");
    for w in [0.0, 0.1, 0.3, 1.0, 3.0] {
        let r = evaluate_ring(&RingSpec::new(80, 3, 1.0, w, 4), &eval)?;
        println!(
            "{w:>6} {:>11.4e} {:>11.4e} {:>11.4e} {:>7.3} {:>7.3}",
            r.g_lrt, r.g_slrt, r.reference, r.g_c, r.g_s
        );
    }
    Ok(())
}
