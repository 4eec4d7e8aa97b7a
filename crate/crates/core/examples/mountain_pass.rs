//! Second solution by the mountain pass between the local minimum and a
//! translate far down the constant direction.

use csh_core::cartan::CartanData;
use csh_core::energy::Problem;
use csh_core::solver::{
    minimize_reduced, mountain_pass, select_xi0, MinimizeOptions, MountainPassOptions,
    MountainPassOutcome,
};
use csh_core::torus::{Regularization, ScalarField, TorusGrid, Vortex, VortexSet};

fn main() -> csh_core::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let m = std::env::args().nth(1).map_or(Ok(64), |s| s.parse()).unwrap_or(64);
    let grid = TorusGrid::square([1.0, 1.0], m)?;
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
    let cartan = CartanData::new(3)?;
    let lambda0 = cartan.lambda_lower_bound(&vortices.counts(), grid.area())?;
    let problem = Problem::new(cartan, grid.clone(), vortices, 100.0 * lambda0, Regularization::Exact)?;
    let minimum = minimize_reduced(&problem, &vec![ScalarField::zeros(&grid); 3], &MinimizeOptions::default())?;

    let opts = MountainPassOptions::default();
    let selection = select_xi0(&problem, &minimum.state, &opts)?;
    for (xi, energy) in &selection.trials {
        println!("ξ = {xi:>6}: I(v* − ξ) = {energy:.6}");
    }
    let result = mountain_pass(&problem, &minimum.state, &selection.endpoint, &opts)?;
    match result.outcome {
        MountainPassOutcome::SecondSolution => {
            let report = &result.report;
            println!(
                "second solution: level {:.8} > I(v*) = {:.8}, |G| = {:.2e}, distance {:.4}",
                result.level,
                result.minimum_energy,
                report.gradient_norm,
                report.state.h1_distance(&minimum.state, &grid)
            );
            println!("means {:?} (minimum {:?})", report.means, minimum.means);
            println!("larger root per component {:?}", report.branch);
            println!("flux integrals {:?} vs {:?}", report.flux_integrals, minimum.flux_integrals);
        }
        MountainPassOutcome::DegenerateMinimizer => {
            println!("the path maximum stayed at I(v*): the minimum is degenerate");
        }
    }
    Ok(())
}
