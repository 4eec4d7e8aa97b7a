//! The local minimum for one vortex in the first component of SU(4) at
//! λ = 100λ₀, with its diagnostics.

use csh_core::cartan::CartanData;
use csh_core::energy::Problem;
use csh_core::solver::{minimize_reduced, MinimizeOptions};
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
    let w0 = vec![ScalarField::zeros(&grid); 3];
    let report = minimize_reduced(&problem, &w0, &MinimizeOptions::default())?;
    println!("critical {} after {} iterations ({:.2} s)", report.critical, report.iterations, report.wall_time);
    println!("energy {:?}", report.energy);
    println!("gradient norm {:.3e}, strong residual {:.3e}", report.gradient_norm, report.relative_strong_residual);
    println!("means {:?}", report.means);
    println!("flux residuals / b {:?}", report.relative_flux_residuals);
    println!("c-Hessian row margins {:?}", report.c_hessian.row_margins);
    Ok(())
}
