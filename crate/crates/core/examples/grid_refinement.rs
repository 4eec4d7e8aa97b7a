//! Energy and fluxes of the local minimum on successively finer grids.

use csh_core::cartan::CartanData;
use csh_core::energy::Problem;
use csh_core::solver::{minimize_reduced, MinimizeOptions};
use csh_core::torus::{Regularization, ScalarField, TorusGrid, Vortex, VortexSet};

fn main() -> csh_core::Result<()> {
    let vortices = VortexSet::new(
        [1.0, 1.0],
        vec![
            vec![Vortex {
                position: [0.5, 0.5],
                multiplicity: 1,
            }],
            vec![],
            vec![],
        ],
    )?;
    for reg in [Regularization::Exact, Regularization::gaussian()] {
        println!("{reg:?}");
        for m in [32, 64, 128] {
            let grid = TorusGrid::square([1.0, 1.0], m)?;
            let cartan = CartanData::new(3)?;
            let lambda0 = cartan.lambda_lower_bound(&vortices.counts(), grid.area())?;
            let problem = Problem::new(cartan, grid.clone(), vortices.clone(), 100.0 * lambda0, reg)?;
            let report = minimize_reduced(&problem, &vec![ScalarField::zeros(&grid); 3], &MinimizeOptions::default())?;
            println!(
                "  m = {m:>4}: I = {:.8}, flux integrals {:?}",
                report.energy.total, report.flux_integrals
            );
        }
    }
    Ok(())
}
