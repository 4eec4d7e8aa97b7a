//! Cartan data of SU(N+1).
//!
//! Everything here is built in exact rational arithmetic; floating-point
//! copies are produced once at construction for the numerical modules.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_rational::Rational64;

use crate::error::{Error, Result};

pub type RationalMatrix = Vec<Vec<Rational64>>;

/// The N×N Cartan matrix: 2 on the diagonal, -1 on both neighbours.
pub fn cartan_matrix(rank: usize) -> Result<Vec<Vec<i64>>> {
    if rank == 0 {
        return Err(Error::InvalidRank(rank));
    }
    let mut k = vec![vec![0i64; rank]; rank];
    for j in 0..rank {
        k[j][j] = 2;
        if j + 1 < rank {
            k[j][j + 1] = -1;
            k[j + 1][j] = -1;
        }
    }
    Ok(k)
}

/// Closed-form inverse of the Cartan matrix,
/// `a_jk = min(j,k) (N+1-max(j,k)) / (N+1)` with 1-based `j, k`.
pub fn cartan_inverse(rank: usize) -> Result<RationalMatrix> {
    if rank == 0 {
        return Err(Error::InvalidRank(rank));
    }
    let n1 = rank as i64 + 1;
    Ok((1..=rank as i64)
        .map(|j| {
            (1..=rank as i64)
                .map(|k| Rational64::new(j.min(k) * (n1 - j.max(k)), n1))
                .collect()
        })
        .collect())
}

/// `r_j = j (N+1-j) / 2`, the row sums of the inverse Cartan matrix.
pub fn vortex_weights(rank: usize) -> Result<Vec<Rational64>> {
    if rank == 0 {
        return Err(Error::InvalidRank(rank));
    }
    let n1 = rank as i64 + 1;
    Ok((1..=rank as i64)
        .map(|j| Rational64::new(j * (n1 - j), 2))
        .collect())
}

/// `M = R K R` with `R = diag(r)`.
pub fn interaction_matrix(rank: usize) -> Result<RationalMatrix> {
    let k = cartan_matrix(rank)?;
    let r = vortex_weights(rank)?;
    Ok((0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| r[i] * Rational64::from_integer(k[i][j]) * r[j])
                .collect()
        })
        .collect())
}

/// `b_j = 4π Σ_k a_jk n_k`.
pub fn constraint_offsets(rank: usize, counts: &[u32]) -> Result<Vec<f64>> {
    check_counts(rank, counts)?;
    let a = cartan_inverse(rank)?;
    Ok(a.iter()
        .map(|row| {
            let s: Rational64 = row
                .iter()
                .zip(counts)
                .map(|(a, &n)| *a * Rational64::from_integer(n as i64))
                .sum();
            4.0 * PI * to_f64(s)
        })
        .collect())
}

/// `λ₀ = (16π/|Ω|) Σ_ij a_ij n_j / Σ_ij a_ij`, the necessary lower bound on
/// the coupling for a doubly periodic solution to exist.
pub fn lambda_lower_bound(rank: usize, counts: &[u32], area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::InvalidGrid(format!("area must be positive, got {area}")));
    }
    check_counts(rank, counts)?;
    let a = cartan_inverse(rank)?;
    let mut num = Rational64::from_integer(0);
    let mut den = Rational64::from_integer(0);
    for row in &a {
        for (entry, &n) in row.iter().zip(counts) {
            num += *entry * Rational64::from_integer(n as i64);
            den += *entry;
        }
    }
    Ok(16.0 * PI / area * to_f64(num / den))
}

fn check_counts(rank: usize, counts: &[u32]) -> Result<()> {
    if rank == 0 {
        return Err(Error::InvalidRank(rank));
    }
    if counts.len() != rank {
        return Err(Error::CountLength {
            expected: rank,
            got: counts.len(),
        });
    }
    if counts.iter().all(|&n| n == 0) {
        return Err(Error::ZeroVortexCounts);
    }
    Ok(())
}

pub fn to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn rational_to_dmatrix(m: &RationalMatrix) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| to_f64(m[i][j]))
}

/// Exact Cartan data for one rank, with floating-point copies.
#[derive(Clone, Debug)]
pub struct CartanData {
    rank: usize,
    k: Vec<Vec<i64>>,
    a: RationalMatrix,
    r: Vec<Rational64>,
    m: RationalMatrix,
    a_f64: DMatrix<f64>,
    m_f64: DMatrix<f64>,
    r_f64: Vec<f64>,
}

impl CartanData {
    pub fn new(rank: usize) -> Result<Self> {
        let k = cartan_matrix(rank)?;
        let a = cartan_inverse(rank)?;
        let r = vortex_weights(rank)?;
        let m = interaction_matrix(rank)?;
        let a_f64 = rational_to_dmatrix(&a);
        let m_f64 = rational_to_dmatrix(&m);
        let r_f64 = r.iter().map(|&q| to_f64(q)).collect();
        Ok(Self {
            rank,
            k,
            a,
            r,
            m,
            a_f64,
            m_f64,
            r_f64,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.k
    }

    pub fn inverse(&self) -> &RationalMatrix {
        &self.a
    }

    pub fn weights(&self) -> &[Rational64] {
        &self.r
    }

    pub fn interaction(&self) -> &RationalMatrix {
        &self.m
    }

    pub fn inverse_f64(&self) -> &DMatrix<f64> {
        &self.a_f64
    }

    pub fn interaction_f64(&self) -> &DMatrix<f64> {
        &self.m_f64
    }

    pub fn weights_f64(&self) -> &[f64] {
        &self.r_f64
    }

    /// `r_j` with the convention `r_0 = r_{N+1} = 0`; `j` is 1-based and may
    /// run from 0 to N+1.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j > self.rank {
            0.0
        } else {
            self.r_f64[j - 1]
        }
    }

    /// Exact `Σ_j r_j`, which equals `N(N+1)(N+2)/12`.
    pub fn weight_sum(&self) -> Rational64 {
        self.r.iter().copied().sum()
    }

    pub fn constraint_offsets(&self, counts: &[u32]) -> Result<Vec<f64>> {
        constraint_offsets(self.rank, counts)
    }

    pub fn lambda_lower_bound(&self, counts: &[u32], area: f64) -> Result<f64> {
        lambda_lower_bound(self.rank, counts, area)
    }

    /// Whether the rank lies in the range where the compactness property
    /// behind the mountain-pass argument is known to hold.
    pub fn rank_is_proven(&self) -> bool {
        (3..=5).contains(&self.rank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn cartan_small_ranks() {
        assert_eq!(cartan_matrix(1).unwrap(), vec![vec![2]]);
        assert_eq!(cartan_matrix(2).unwrap(), vec![vec![2, -1], vec![-1, 2]]);
        assert_eq!(
            cartan_matrix(3).unwrap(),
            vec![vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]
        );
        assert!(matches!(cartan_matrix(0), Err(Error::InvalidRank(0))));
    }

    /// Gauss-Jordan inversion over the rationals, independent of the closed form.
    fn exact_inverse(k: &[Vec<i64>]) -> RationalMatrix {
        let n = k.len();
        let mut aug: Vec<Vec<Rational64>> = (0..n)
            .map(|i| {
                let mut row: Vec<Rational64> =
                    k[i].iter().map(|&x| Rational64::from_integer(x)).collect();
                row.extend((0..n).map(|j| Rational64::from_integer((i == j) as i64)));
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| aug[r][col] != q(0, 1)).unwrap();
            aug.swap(col, piv);
            let p = aug[col][col];
            for x in aug[col].iter_mut() {
                *x /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = aug[r][col];
                    for c in 0..2 * n {
                        let v = aug[col][c];
                        aug[r][c] -= f * v;
                    }
                }
            }
        }
        aug.into_iter().map(|row| row[n..].to_vec()).collect()
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(cartan_inverse(1).unwrap(), vec![vec![q(1, 2)]]);
        assert_eq!(
            cartan_inverse(2).unwrap(),
            vec![vec![q(2, 3), q(1, 3)], vec![q(1, 3), q(2, 3)]]
        );
        let a3 = cartan_inverse(3).unwrap();
        assert_eq!(a3[0][2], q(1, 4));
        assert_eq!(a3, exact_inverse(&cartan_matrix(3).unwrap()));
    }

    #[test]
    fn inverse_matches_gauss_jordan() {
        for n in 1..=12 {
            assert_eq!(
                cartan_inverse(n).unwrap(),
                exact_inverse(&cartan_matrix(n).unwrap()),
                "rank {n}"
            );
        }
    }

    #[test]
    fn inverse_symmetric_positive() {
        for n in 1..=12 {
            let a = cartan_inverse(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(a[i][j], a[j][i]);
                    assert!(a[i][j] > q(0, 1));
                }
            }
        }
    }

    #[test]
    fn weights_examples() {
        assert_eq!(vortex_weights(3).unwrap(), vec![q(3, 2), q(2, 1), q(3, 2)]);
        assert_eq!(
            vortex_weights(5).unwrap(),
            vec![q(5, 2), q(4, 1), q(9, 2), q(4, 1), q(5, 2)]
        );
        assert_eq!(vortex_weights(1).unwrap(), vec![q(1, 2)]);
        let sum: Rational64 = vortex_weights(3).unwrap().into_iter().sum();
        assert_eq!(sum, q(5, 1));
    }

    #[test]
    fn weights_are_row_sums_and_symmetric() {
        for n in 1..=12 {
            let a = cartan_inverse(n).unwrap();
            let r = vortex_weights(n).unwrap();
            for j in 0..n {
                let s: Rational64 = a[j].iter().copied().sum();
                assert_eq!(s, r[j]);
                assert_eq!(r[j], r[n - 1 - j]);
            }
        }
    }

    #[test]
    fn interaction_examples() {
        let m2 = interaction_matrix(2).unwrap();
        assert_eq!(m2, vec![vec![q(2, 1), q(-1, 1)], vec![q(-1, 1), q(2, 1)]]);
        let m3 = interaction_matrix(3).unwrap();
        assert_eq!(m3[0][1], q(-3, 1));
        assert_eq!(m3[0][2], q(0, 1));
        for n in 1..=12 {
            let m = interaction_matrix(n).unwrap();
            let r = vortex_weights(n).unwrap();
            for i in 0..n {
                let row: Rational64 = m[i].iter().copied().sum();
                assert_eq!(row, r[i]);
                assert_eq!(m[i][i], q(2, 1) * r[i] * r[i]);
                if i + 1 < n {
                    assert_eq!(m[i][i + 1], -r[i] * r[i + 1]);
                    assert_eq!(m[i][i + 1], m[i + 1][i]);
                }
            }
        }
    }

    fn exact_det(m: &RationalMatrix) -> Rational64 {
        let n = m.len();
        let mut a = m.clone();
        let mut det = q(1, 1);
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| a[r][col] != q(0, 1)) else {
                return q(0, 1);
            };
            if piv != col {
                a.swap(col, piv);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
        det
    }

    #[test]
    fn interaction_positive_definite() {
        for n in 1..=8 {
            let m = interaction_matrix(n).unwrap();
            for size in 1..=n {
                let minor: RationalMatrix =
                    m[..size].iter().map(|row| row[..size].to_vec()).collect();
                assert!(exact_det(&minor) > q(0, 1), "rank {n}, minor {size}");
            }
        }
    }

    #[test]
    fn offsets_examples() {
        let b = constraint_offsets(3, &[1, 0, 0]).unwrap();
        for (bj, expect) in b.iter().zip([0.75, 0.5, 0.25]) {
            assert!((bj - 4.0 * PI * expect).abs() < 1e-14);
        }
        let b = constraint_offsets(2, &[1, 1]).unwrap();
        assert!(b.iter().all(|x| (x - 4.0 * PI).abs() < 1e-14));
        let b3 = constraint_offsets(3, &[3, 0, 0]).unwrap();
        let b1 = constraint_offsets(3, &[1, 0, 0]).unwrap();
        for (x, y) in b3.iter().zip(&b1) {
            assert!((x - 3.0 * y).abs() < 1e-13);
        }
        assert!(matches!(
            constraint_offsets(3, &[0, 0, 0]),
            Err(Error::ZeroVortexCounts)
        ));
    }

    #[test]
    fn lambda_bound_examples() {
        let l = lambda_lower_bound(3, &[1, 0, 0], 1.0).unwrap();
        assert!((l - 4.8 * PI).abs() < 1e-13);
        for n in 1..=6 {
            let l = lambda_lower_bound(n, &vec![1; n], 2.0).unwrap();
            assert!((l - 8.0 * PI).abs() < 1e-13);
        }
        let l1 = lambda_lower_bound(4, &[0, 2, 1, 0], 1.0).unwrap();
        let l2 = lambda_lower_bound(4, &[0, 2, 1, 0], 2.0).unwrap();
        assert!((l1 - 2.0 * l2).abs() < 1e-13);
    }

    #[test]
    fn data_accessors() {
        let c = CartanData::new(4).unwrap();
        assert_eq!(c.weight(0), 0.0);
        assert_eq!(c.weight(5), 0.0);
        assert_eq!(c.weight(2), 3.0);
        assert_eq!(c.weight_sum(), q(4 * 5 * 6, 12));
        assert!(c.rank_is_proven());
        assert!(!CartanData::new(6).unwrap().rank_is_proven());
    }
}
