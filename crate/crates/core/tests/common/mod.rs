#![allow(dead_code)]

use csh_core::cartan::CartanData;
use csh_core::energy::Problem;
use csh_core::torus::{Regularization, TorusGrid, Vortex, VortexSet};

/// One unit vortex at the cell center in the first component.
pub fn single_vortex(rank: usize) -> VortexSet {
    let mut components = vec![Vec::new(); rank];
    components[0].push(Vortex {
        position: [0.5, 0.5],
        multiplicity: 1,
    });
    VortexSet::new([1.0, 1.0], components).unwrap()
}

/// The unit torus at resolution `m`, coupling `multiple·λ₀`.
pub fn problem(rank: usize, m: usize, multiple: f64, regularization: Regularization) -> Problem {
    let grid = TorusGrid::square([1.0, 1.0], m).unwrap();
    let vortices = single_vortex(rank);
    let cartan = CartanData::new(rank).unwrap();
    let lambda0 = cartan.lambda_lower_bound(&vortices.counts(), grid.area()).unwrap();
    Problem::new(cartan, grid, vortices, multiple * lambda0, regularization).unwrap()
}

pub const SU4_CONFIG: &str = r#"{
  "rank": 3,
  "lambda_multiple": 100,
  "resolution": 32,
  "vortices": [[{"position": [0.5, 0.5], "multiplicity": 1}], [], []],
  "seed": 5,
  "regularization": {"kind": "exact"}
}"#;
