//! All 2^N root choices of the constraint for N = 3, 4, 5, with the Jacobian
//! determinant and a multi-start uniqueness check for each.

use csh_core::cartan::CartanData;
use csh_core::constraint::{sweep_patterns, ContinuationOptions};
use csh_core::energy::Problem;
use csh_core::torus::{random_smooth_field, Regularization, TorusGrid, Vortex, VortexSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> csh_core::Result<()> {
    let grid = TorusGrid::square([1.0, 1.0], 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 3..=5 {
        let mut components = vec![Vec::new(); n];
        components[0].push(Vortex {
            position: [0.25, 0.5],
            multiplicity: 1,
        });
        let vortices = VortexSet::new([1.0, 1.0], components)?;
        let cartan = CartanData::new(n)?;
        let lambda0 = cartan.lambda_lower_bound(&vortices.counts(), grid.area())?;
        let problem = Problem::new(cartan, grid.clone(), vortices, 20.0 * lambda0, Regularization::Exact)?;
        let w: Vec<_> = (0..n)
            .map(|_| random_smooth_field(&grid, &mut rng, 0.4, 3))
            .collect();
        let rows = sweep_patterns(&problem.constraint_context(&w)?, 0.05, &ContinuationOptions::default())?;
        println!("N = {n}");
        for row in rows {
            let eps: String = row.epsilon.iter().map(|e| if *e { '1' } else { '0' }).collect();
            let t: Vec<String> = row.t.iter().map(|x| format!("{x:.4e}")).collect();
            println!(
                "  ε = {eps}  det J = {:.4}  unique {}  t = [{}]",
                row.jacobian_det,
                row.unique,
                t.join(", ")
            );
        }
    }
    Ok(())
}
