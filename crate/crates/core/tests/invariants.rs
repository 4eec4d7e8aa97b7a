mod common;

use csh_core::cli::RunConfig;
use csh_core::constraint::{c_plus, ContinuationOptions};
use csh_core::energy::{
    action, action_gradient, c_hessian, dominance_certificate, dot, summed_identity_residual,
    SystemState,
};
use csh_core::solver::{minimize_reduced, MinimizeOptions};
use csh_core::torus::{
    background_function, random_smooth_field, Regularization, ScalarField, TorusGrid, Vortex,
    VortexSet,
};
use csh_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), rank in 3usize..=5) {
        let p = common::problem(rank, 32, 20.0, Regularization::gaussian());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<ScalarField> = (0..rank)
            .map(|_| random_smooth_field(p.grid(), &mut rng, 0.4, 3))
            .collect();
        let c: Vec<f64> = (0..rank).map(|_| rng.random_range(-0.5..0.3)).collect();
        let state = SystemState { w, c };
        let fields = state.fields();
        let gradient = action_gradient(&p, &state).unwrap();
        for _ in 0..4 {
            let mut phi: Vec<ScalarField> = (0..rank)
                .map(|_| random_smooth_field(p.grid(), &mut rng, 1.0, 4))
                .collect();
            for f in &mut phi {
                *f = f.add_constant(rng.random_range(-0.5..0.5));
            }
            let h = 1e-5;
            let shifted = |s: f64| {
                let v: Vec<ScalarField> = fields.iter().zip(&phi).map(|(a, b)| {
                    let mut out = a.clone();
                    out.axpy(s, b);
                    out
                }).collect();
                action(&p, &SystemState::from_fields(p.grid(), &v)).unwrap().total
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let exact = dot(p.grid(), &gradient.fields, &phi);
            prop_assert!((fd - exact).abs() <= 1e-5 * fd.abs().max(1.0), "{fd} vs {exact}");
        }
    }

    #[test]
    fn mean_hessian_is_positive_definite_at_c_plus(seed in any::<u64>(), rank in 3usize..=5) {
        let p = common::problem(rank, 32, 20.0, Regularization::Exact);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<ScalarField> = (0..rank)
            .map(|_| random_smooth_field(p.grid(), &mut rng, 0.5, 3))
            .collect();
        let ctx = p.constraint_context(&w).unwrap();
        prop_assume!(ctx.admissible());
        let c = c_plus(&ctx, &ContinuationOptions::default()).unwrap().means();
        let state = SystemState { w, c };
        let means = action_gradient(&p, &state).unwrap().means;
        for m in &means {
            prop_assert!(m.abs() < 1e-8, "{means:?}");
        }
        let cert = dominance_certificate(&c_hessian(&p, &state).unwrap());
        prop_assert!(cert.dominant && cert.positive_definite && cert.min_eigenvalue > 0.0);
    }

    #[test]
    fn below_threshold_is_inadmissible(multiple in 0.05f64..0.99) {
        let p = common::problem(3, 16, multiple, Regularization::gaussian());
        let zero = vec![ScalarField::zeros(p.grid()); 3];
        prop_assert!(!p.constraint_context(&zero).unwrap().admissible());
        let err = minimize_reduced(&p, &zero, &MinimizeOptions::default()).unwrap_err();
        prop_assert!(matches!(err, Error::AdmissibilityBreach { .. }), "{err}");
    }

    #[test]
    fn translation_moves_only_the_means(xi in 0.0f64..100.0, seed in any::<u64>()) {
        let p = common::problem(3, 16, 50.0, Regularization::gaussian());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = SystemState {
            w: (0..3).map(|_| random_smooth_field(p.grid(), &mut rng, 0.3, 2)).collect(),
            c: vec![0.1, -0.2, 0.0],
        };
        let moved = state.translated(xi);
        prop_assert_eq!(&moved.w, &state.w);
        let slope: f64 = p.offsets().iter().sum();
        let (before, after) = (action(&p, &state).unwrap(), action(&p, &moved).unwrap());
        prop_assert!((before.dirichlet - after.dirichlet).abs() <= 1e-12 * before.dirichlet.max(1.0));
        prop_assert!((before.linear - after.linear - slope * xi).abs() <= 1e-12 * (1.0 + slope * xi));
    }

    #[test]
    fn background_exponential_is_positive_and_deepens_with_refinement(
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
    ) {
        let vortices = VortexSet::new(
            [1.0, 1.0],
            vec![vec![Vortex { position: [x, y], multiplicity: 1 }]],
        ).unwrap();
        let grid = TorusGrid::square([1.0, 1.0], 32).unwrap();
        let mut previous = f64::INFINITY;
        for sigma in [0.2, 0.1, 0.05] {
            let reg = Regularization::Gaussian { sigma: Some(sigma) };
            let (_, e) = background_function(&grid, &vortices, 0, reg).unwrap();
            prop_assert!(e.min() > 0.0);
            prop_assert!(e.min() < previous);
            previous = e.min();
        }
    }

    #[test]
    fn config_round_trip_is_identity(
        rank in 1usize..=5,
        multiple in 0.1f64..1e3,
        absolute in any::<bool>(),
        m in 4usize..256,
        seed in any::<u64>(),
        points in prop::collection::vec((0usize..5, 0.0f64..1.0, 0.0f64..1.0, 1u32..4), 1..6),
    ) {
        let mut vortices = vec![Vec::new(); rank];
        for (j, x, y, k) in points {
            vortices[j % rank].push(Vortex { position: [x, y], multiplicity: k });
        }
        let config = RunConfig {
            rank,
            lambda: absolute.then_some(multiple),
            lambda_multiple: (!absolute).then_some(multiple),
            periods: [1.0, 1.0 + multiple / 1e3],
            resolution: m,
            vortices,
            seed,
            regularization: if absolute { Regularization::Exact } else { Regularization::gaussian() },
            initial_state: None,
            minimize: Default::default(),
            mountain_pass: Default::default(),
            appendix: Default::default(),
            sweep: Default::default(),
        };
        let parsed = RunConfig::from_json(&config.to_json()).unwrap();
        prop_assert_eq!(&parsed, &config);
        prop_assert_eq!(parsed.to_json(), config.to_json());
        prop_assert_eq!(parsed.hash(), config.hash());
    }
}

#[test]
fn summed_identity_and_fluxes_hold_at_the_minimum() {
    for rank in 3..=5 {
        let p = common::problem(rank, 32, 100.0, Regularization::Exact);
        let zero = vec![ScalarField::zeros(p.grid()); rank];
        let report = minimize_reduced(&p, &zero, &MinimizeOptions::default()).unwrap();
        assert!(report.critical);
        let total: f64 = p.offsets().iter().sum();
        assert!(summed_identity_residual(&p, &report.state).unwrap().abs() < 1e-6 * total);
        for (f, b) in report.flux_integrals.iter().zip(p.offsets()) {
            assert!((f + b).abs() < 1e-6 * b);
        }
    }
}
