//! Prints the exact Cartan data of SU(N+1) and checks its identities.

use csh_core::cartan::CartanData;
use num_rational::Rational64;

fn main() -> csh_core::Result<()> {
    for n in 1..=6 {
        let data = CartanData::new(n)?;
        let k = data.cartan();
        let a = data.inverse();
        let identity = (0..n).all(|i| {
            (0..n).all(|j| {
                let sum: Rational64 = (0..n).map(|l| Rational64::from(k[i][l]) * a[l][j]).sum();
                sum == Rational64::from(i64::from(i == j))
            })
        });
        let weights: Vec<String> = data.weights().iter().map(|r| r.to_string()).collect();
        println!(
            "N = {n}: K·A = I {identity}, r = ({}), Σr = {}",
            weights.join(", "),
            data.weight_sum()
        );
    }
    let data = CartanData::new(3)?;
    println!("\nSU(4) interaction matrix M:");
    for row in data.interaction() {
        let row: Vec<String> = row.iter().map(|q| format!("{q:>5}")).collect();
        println!("  {}", row.join(" "));
    }
    let counts = [1, 0, 0];
    println!(
        "b = {:?}, λ₀ on the unit torus = {:.6}",
        data.constraint_offsets(&counts)?,
        data.lambda_lower_bound(&counts, 1.0)?
    );
    Ok(())
}
