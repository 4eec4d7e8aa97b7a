//! Solves the mean-value constraint for a random mean-zero field by
//! continuation from the decoupled problem, printing each accepted step.

use csh_core::cartan::CartanData;
use csh_core::constraint::{c_plus, ContinuationOptions};
use csh_core::energy::Problem;
use csh_core::torus::{random_smooth_field, Regularization, TorusGrid, Vortex, VortexSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> csh_core::Result<()> {
    let grid = TorusGrid::square([1.0, 1.0], 64)?;
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
    let problem = Problem::new(cartan, grid, vortices, 10.0 * lambda0, Regularization::Exact)?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w: Vec<_> = (0..3)
        .map(|_| random_smooth_field(problem.grid(), &mut rng, 0.5, 3))
        .collect();
    let ctx = problem.constraint_context(&w)?;
    println!("admissibility ratios {:?}", ctx.admissibility_ratios());
    let solution = c_plus(&ctx, &ContinuationOptions::default())?;
    for step in &solution.steps {
        println!(
            "s = {:.4}  det J = {:.6}  newton {}  certified {}",
            step.s, step.jacobian_det, step.newton_iterations, step.certified
        );
    }
    println!(
        "t = {:?}\nc = {:?}\nresidual {:.1e}, envelope ok {}",
        solution.t,
        solution.means(),
        solution.residual_norm,
        solution.envelope_ok
    );
    Ok(())
}
