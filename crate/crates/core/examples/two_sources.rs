//! Linear versus semi-linear response to two independent drives: the
//! linear result adds, the semi-linear one is super-additive.
//!
//! cargo run --example two_sources

use slrt::response::DEFAULT_WINDOW_SIZE;
use slrt::{build_sparse_ensemble, kubo_diffusion, slrt_diffusion, BandWindow, EnsembleSpec};
use slrt::{LineShape, OccupationSpec, SpectralWeight};

fn main() -> slrt::Result<()> {
    let model = build_sparse_ensemble(&EnsembleSpec::flat(300, 10, 4.0, 21))?;
    let (x, levels) = (&model.coupling, &model.levels);
    let rho = levels.density();
    let occupation = OccupationSpec::Microcanonical { index: 150 };
    let window = BandWindow::centered(300, 150, DEFAULT_WINDOW_SIZE);

    let slow = SpectralWeight::single(1.0, LineShape::Rectangular, 3.0, rho)?;
    let fast = SpectralWeight::single(0.7, LineShape::Lorentzian, 8.0, rho)?;
    let both = slow.combined(&fast)?;

    println!("{:>10} {:>12} {:>12}", "source", "D_LRT", "D_SLRT");
    for (name, s) in [("a", &slow), ("b", &fast), ("a + b", &both)] {
        println!(
            "{name:>10} {:>12.5} {:>12.5}",
            kubo_diffusion(x, levels, s, &occupation)?,
            slrt_diffusion(x, levels, s, &window)?.value
        );
    }
    let doubled = slow.with_power_scaled(2.0)?;
    println!(
        "doubling the power of a: D_SLRT {:.5} -> {:.5}",
        slrt_diffusion(x, levels, &slow, &window)?.value,
        slrt_diffusion(x, levels, &doubled, &window)?.value
    );
    Ok(())
}
