//! The tri-diagonal determinant recursion, its derivative formulas and the
//! barrier bound, followed by the randomized audit used by `appendix-check`.

use csh_core::tridiag::{audit, det_oracle, AuditOptions, BarrierSpec, CertificateChain, SplitSpec, TriDiagSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> csh_core::Result<()> {
    let spec = TriDiagSpec::from_offdiagonals(&[0.4, 0.5], &[0.3, 0.2]);
    let dense = det_oracle(&spec.build_matrix(1, 3)?)?;
    println!("F_3^(1) = {} (cofactor expansion {dense})", spec.f_value(1, 3));

    let tau = BarrierSpec::new(vec![0.2, 0.6, 0.5, 0.9])?;
    let split = SplitSpec::new(
        &[0.5, 0.3, 0.4],
        &[0.7, 0.3, 0.2],
        &[true, false, true],
        &[false, true, true],
    );
    let chain = CertificateChain::evaluate(&split, &tau, 1, 4)?;
    println!(
        "signed {:.6} ≥ unsigned {:.6} > barrier {:.6} ≥ 0: {}",
        chain.f,
        chain.f_unsigned,
        chain.f_barrier,
        chain.ordered(1e-12)
    );
    for j in 1..4 {
        let (d_sub, d_sup) = split.f_partials(1, 4, j);
        println!("  j = {j}: ∂F/∂α_(j+1,1) = {d_sub:+.6}, ∂F/∂α_(j,2) = {d_sup:+.6}");
    }
    let singular = BarrierSpec::new(vec![0.0, 0.4, 0.7, 1.0])?;
    println!("barrier with τ₁ = 0, τ_N = 1: {:e}", singular.barrier_f(1, 4)?);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = AuditOptions {
        samples: 2000,
        ..Default::default()
    };
    for row in audit(&opts, &mut rng)? {
        println!(
            "{:<40} checked {:>6}, failed {}, worst {:.1e}",
            row.property, row.checked, row.failed, row.worst
        );
    }
    Ok(())
}
