//! The singular background `u⁰` of one vortex under both source
//! regularizations, and how `∫e^{u⁰}` settles under grid refinement.

use csh_core::torus::{background_function, Regularization, TorusGrid, Vortex, VortexSet};

fn main() -> csh_core::Result<()> {
    let vortices = VortexSet::new(
        [1.0, 1.0],
        vec![vec![Vortex {
            position: [0.5, 0.5],
            multiplicity: 1,
        }]],
    )?;
    println!("{:>5} {:>16} {:>16}", "m", "gaussian ∫e^u0", "exact ∫e^u0");
    for m in [32, 64, 128, 256] {
        let grid = TorusGrid::square([1.0, 1.0], m)?;
        let mut row = format!("{m:>5}");
        for reg in [Regularization::gaussian(), Regularization::Exact] {
            let (_, exp_u0) = background_function(&grid, &vortices, 0, reg)?;
            row += &format!(" {:>16.10}", grid.integrate(&exp_u0));
        }
        println!("{row}");
    }
    let grid = TorusGrid::square([1.0, 1.0], 64)?;
    let (u0, _) = background_function(&grid, &vortices, 0, Regularization::Exact)?;
    println!(
        "\nexact u0 at 64²: mean {:.2e}, value at the far corner {:.6}, min {:.3}",
        grid.mean(&u0),
        u0.values()[[0, 0]],
        u0.min()
    );
    Ok(())
}
