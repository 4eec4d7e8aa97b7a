//! Unit-diagonal tri-diagonal matrices and their determinant recursion.
//!
//! Rows are numbered `1..=N`. Row `j` carries `β_{j,1}` left of the diagonal
//! and `β_{j,2}` right of it, with `β_{1,1} = β_{N,2} = 0`. For a block
//! `k..=l` the determinant `F_l^{(k)}` obeys
//!
//! ```text
//! F_l^{(l+1)} = 1,  F_l^{(k)} = 0 for k >= l+2,
//! F_l^{(k)}   = F_l^{(k+1)} - β_{k+1,1} β_{k,2} F_l^{(k+2)}.
//! ```
//!
//! The split form writes `β = (-1)^ε α` with `α >= 0`; under the barrier
//! hypothesis `α_{j,2} < 1-τ_j`, `α_{j+1,1} < τ_{j+1}` the determinant is
//! bounded below by the barrier determinant built from `τ`, which is itself
//! nonnegative.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TriDiagSpec {
    /// `sub[j-1] = β_{j,1}`; `sub[0] = 0`.
    sub: Vec<f64>,
    /// `sup[j-1] = β_{j,2}`; `sup[N-1] = 0`.
    sup: Vec<f64>,
}

impl TriDiagSpec {
    /// Builds the family from the interior coefficients: `lower[i]` is
    /// `β_{i+2,1}` and `upper[i]` is `β_{i+1,2}`, both of length `N-1`.
    pub fn from_offdiagonals(lower: &[f64], upper: &[f64]) -> Self {
        assert_eq!(lower.len(), upper.len(), "off-diagonal lengths differ");
        let n = lower.len() + 1;
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        sub[1..].copy_from_slice(lower);
        sup[..n - 1].copy_from_slice(upper);
        Self { sub, sup }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            sub: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn size(&self) -> usize {
        self.sub.len()
    }

    /// `β_{j,1}`, zero outside `2..=N`.
    pub fn sub(&self, j: usize) -> f64 {
        if j >= 2 && j <= self.size() {
            self.sub[j - 1]
        } else {
            0.0
        }
    }

    /// `β_{j,2}`, zero outside `1..=N-1`.
    pub fn sup(&self, j: usize) -> f64 {
        if j >= 1 && j < self.size() {
            self.sup[j - 1]
        } else {
            0.0
        }
    }

    fn check_block(&self, k: usize, l: usize) -> Result<()> {
        if k < 1 || k > l || l > self.size() {
            return Err(Error::IndexRange {
                k,
                l,
                n: self.size(),
            });
        }
        Ok(())
    }

    /// Dense `T_l^{(k)}`.
    pub fn build_matrix(&self, k: usize, l: usize) -> Result<DMatrix<f64>> {
        self.check_block(k, l)?;
        let m = l - k + 1;
        let mut t = DMatrix::identity(m, m);
        for i in 0..m {
            let j = k + i;
            if i > 0 {
                t[(i, i - 1)] = self.sub(j);
            }
            if i + 1 < m {
                t[(i, i + 1)] = self.sup(j);
            }
        }
        Ok(t)
    }

    /// `F_l^{(i)}` for `i = k..=l+2`, evaluated right to left. Entry `i - k`
    /// of the result holds `F_l^{(i)}`.
    pub fn tail_minors(&self, k: usize, l: usize) -> Vec<f64> {
        debug_assert!(k >= 1 && k <= l + 1);
        let len = l + 3 - k;
        let mut f = vec![0.0; len];
        f[len - 1] = 0.0;
        f[len - 2] = 1.0;
        for i in (k..=l).rev() {
            let idx = i - k;
            f[idx] = f[idx + 1] - self.sub(i + 1) * self.sup(i) * f[idx + 2];
        }
        f
    }

    /// `F_l^{(k)}` with the boundary conventions for `k > l`.
    pub fn f_value(&self, k: usize, l: usize) -> f64 {
        if k >= l + 2 {
            0.0
        } else if k == l + 1 {
            1.0
        } else {
            assert!(k >= 1 && l <= self.size(), "block {k}..={l} out of range");
            self.tail_minors(k, l)[0]
        }
    }

    /// Solves `T_N^{(1)} x = rhs` by forward elimination without pivoting.
    /// Returns `None` if a pivot vanishes.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.size();
        assert_eq!(rhs.len(), n);
        let mut diag = vec![1.0f64; n];
        let mut y = rhs.to_vec();
        for i in 1..n {
            if diag[i - 1].abs() < 1e-300 {
                return None;
            }
            let f = self.sub[i] / diag[i - 1];
            diag[i] -= f * self.sup[i - 1];
            y[i] -= f * y[i - 1];
        }
        if diag[n - 1].abs() < 1e-300 {
            return None;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = y[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (y[i] - self.sup[i] * x[i + 1]) / diag[i];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// The sign/magnitude split `β_{j,i} = (-1)^{ε_{j,i}} α_{j,i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSpec {
    alpha_sub: Vec<f64>,
    alpha_sup: Vec<f64>,
    eps_sub: Vec<bool>,
    eps_sup: Vec<bool>,
}

impl SplitSpec {
    /// Interior coefficients as in [`TriDiagSpec::from_offdiagonals`]; all
    /// magnitudes must be nonnegative.
    pub fn new(
        alpha_lower: &[f64],
        alpha_upper: &[f64],
        eps_lower: &[bool],
        eps_upper: &[bool],
    ) -> Self {
        let m = alpha_lower.len();
        assert!(alpha_upper.len() == m && eps_lower.len() == m && eps_upper.len() == m);
        assert!(
            alpha_lower.iter().chain(alpha_upper).all(|&a| a >= 0.0),
            "split magnitudes must be nonnegative"
        );
        let n = m + 1;
        let pad = |v: &[f64], front: bool| {
            let mut out = vec![0.0; n];
            if front {
                out[1..].copy_from_slice(v);
            } else {
                out[..n - 1].copy_from_slice(v);
            }
            out
        };
        let pad_b = |v: &[bool], front: bool| {
            let mut out = vec![false; n];
            if front {
                out[1..].copy_from_slice(v);
            } else {
                out[..n - 1].copy_from_slice(v);
            }
            out
        };
        Self {
            alpha_sub: pad(alpha_lower, true),
            alpha_sup: pad(alpha_upper, false),
            eps_sub: pad_b(eps_lower, true),
            eps_sup: pad_b(eps_upper, false),
        }
    }

    pub fn size(&self) -> usize {
        self.alpha_sub.len()
    }

    /// `α_{j,1}`.
    pub fn alpha_sub(&self, j: usize) -> f64 {
        if j >= 2 && j <= self.size() {
            self.alpha_sub[j - 1]
        } else {
            0.0
        }
    }

    /// `α_{j,2}`.
    pub fn alpha_sup(&self, j: usize) -> f64 {
        if j >= 1 && j < self.size() {
            self.alpha_sup[j - 1]
        } else {
            0.0
        }
    }

    pub fn eps_sub(&self, j: usize) -> bool {
        j >= 2 && j <= self.size() && self.eps_sub[j - 1]
    }

    pub fn eps_sup(&self, j: usize) -> bool {
        j >= 1 && j < self.size() && self.eps_sup[j - 1]
    }

    pub fn to_spec(&self) -> TriDiagSpec {
        let sign = |e: bool| if e { -1.0 } else { 1.0 };
        TriDiagSpec {
            sub: self
                .alpha_sub
                .iter()
                .zip(&self.eps_sub)
                .map(|(&a, &e)| sign(e) * a)
                .collect(),
            sup: self
                .alpha_sup
                .iter()
                .zip(&self.eps_sup)
                .map(|(&a, &e)| sign(e) * a)
                .collect(),
        }
    }

    /// The same magnitudes with every sign exponent set to zero.
    pub fn unsigned(&self) -> Self {
        Self {
            eps_sub: vec![false; self.size()],
            eps_sup: vec![false; self.size()],
            ..self.clone()
        }
    }

    pub fn with_alpha_sub(&self, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.alpha_sub[j - 1] = value;
        out
    }

    pub fn with_alpha_sup(&self, j: usize, value: f64) -> Self {
        let mut out = self.clone();
        out.alpha_sup[j - 1] = value;
        out
    }

    /// `(∂F_l^{(k)}/∂α_{j+1,1}, ∂F_l^{(k)}/∂α_{j,2})`.
    ///
    /// Both derivatives share the factor `F_l^{(j+2)} F_{j-1}^{(k)}` and the
    /// sign of the product `β_{j+1,1} β_{j,2}`, i.e. `(-1)^{ε_{j,2}+ε_{j+1,1}}`.
    /// Indices with `j < k` or `j >= l` give the zero pair.
    pub fn f_partials(&self, k: usize, l: usize, j: usize) -> (f64, f64) {
        if j < k || j >= l {
            return (0.0, 0.0);
        }
        let spec = self.to_spec();
        let common = spec.f_value(j + 2, l) * spec.f_value(k, j - 1);
        let sign = if self.eps_sup(j) ^ self.eps_sub(j + 1) {
            -1.0
        } else {
            1.0
        };
        (
            -sign * self.alpha_sup(j) * common,
            -sign * self.alpha_sub(j + 1) * common,
        )
    }
}

/// Barrier coefficients `τ_j ∈ [0,1]`, stored for rows `1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSpec {
    tau: Vec<f64>,
}

impl BarrierSpec {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        for (i, &t) in tau.iter().enumerate() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::TauOutOfRange {
                    index: i + 1,
                    value: t,
                });
            }
        }
        Ok(Self { tau })
    }

    pub fn size(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self, j: usize) -> f64 {
        self.tau[j - 1]
    }

    /// Row `j` of the barrier matrix is `τ_j, 1, 1-τ_j`.
    pub fn to_spec(&self) -> TriDiagSpec {
        let n = self.size();
        let lower: Vec<f64> = (2..=n).map(|j| self.tau(j)).collect();
        let upper: Vec<f64> = (1..n).map(|j| 1.0 - self.tau(j)).collect();
        TriDiagSpec::from_offdiagonals(&lower, &upper)
    }

    /// `F̄_l^{(k)} = F̄_l^{(k+1)} - τ_{k+1}(1-τ_k) F̄_l^{(k+2)}`.
    pub fn barrier_f(&self, k: usize, l: usize) -> Result<f64> {
        if k < 1 || k > l || l > self.size() {
            return Err(Error::IndexRange {
                k,
                l,
                n: self.size(),
            });
        }
        let (mut f1, mut f2) = (1.0, 0.0);
        for i in (k..=l).rev() {
            let coupling = if i < l {
                self.tau(i + 1) * (1.0 - self.tau(i))
            } else {
                0.0
            };
            let fi = f1 - coupling * f2;
            f2 = f1;
            f1 = fi;
        }
        Ok(f1)
    }
}

/// Determinant by Laplace expansion along the first row, skipping zero
/// entries. Limited to size 12.
pub fn det_oracle(m: &DMatrix<f64>) -> Result<f64> {
    assert!(m.is_square(), "det_oracle needs a square matrix");
    let n = m.nrows();
    if n > 12 {
        return Err(Error::SizeLimit(n));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect();
    Ok(laplace(&rows))
}

fn laplace(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let x = a[0][col];
                if x == 0.0 {
                    continue;
                }
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != col)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * x * laplace(&minor);
            }
            det
        }
    }
}

/// True iff `0 <= α_{j,2} < 1-τ_j` and `0 <= α_{j+1,1} < τ_{j+1}` for
/// `j = k..l-1`.
pub fn positivity_certificate(split: &SplitSpec, tau: &BarrierSpec, k: usize, l: usize) -> bool {
    (k..l).all(|j| {
        let up = split.alpha_sup(j);
        let lo = split.alpha_sub(j + 1);
        up >= 0.0 && up < 1.0 - tau.tau(j) && lo >= 0.0 && lo < tau.tau(j + 1)
    })
}

/// The three determinants compared by the barrier argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateChain {
    /// Signed determinant.
    pub f: f64,
    /// Determinant with every sign exponent zero.
    pub f_unsigned: f64,
    /// Barrier determinant.
    pub f_barrier: f64,
}

impl CertificateChain {
    pub fn evaluate(split: &SplitSpec, tau: &BarrierSpec, k: usize, l: usize) -> Result<Self> {
        Ok(Self {
            f: split.to_spec().f_value(k, l),
            f_unsigned: split.unsigned().to_spec().f_value(k, l),
            f_barrier: tau.barrier_f(k, l)?,
        })
    }

    /// `f >= f_unsigned > f_barrier >= 0`, each comparison with `slack`.
    pub fn ordered(&self, slack: f64) -> bool {
        self.f >= self.f_unsigned - slack
            && self.f_unsigned > self.f_barrier - slack
            && self.f_barrier >= -slack
            && self.f > 0.0
    }
}

/// Sampling parameters of [`audit`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditOptions {
    pub samples: usize,
    pub max_size: usize,
    /// Bound on `|β|` for the unconstrained recursion samples.
    pub coefficient_bound: f64,
    /// Magnitudes are drawn as `f·bound` with `f` uniform in `[0, slack)`;
    /// values above one produce samples outside the barrier hypothesis.
    pub hypothesis_slack: f64,
    /// Places every magnitude exactly on its barrier bound.
    pub force_boundary: bool,
    pub fd_step: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            max_size: 10,
            coefficient_bound: 2.0,
            hypothesis_slack: 1.1,
            force_boundary: false,
            fd_step: 1e-5,
        }
    }
}

/// Outcome of one audited property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub property: String,
    pub checked: usize,
    pub failed: usize,
    /// Samples for which the property's hypothesis is false.
    pub skipped: usize,
    /// Largest normalized error among checked samples.
    pub worst: f64,
    pub tolerance: f64,
}

impl AuditRow {
    fn new(property: &str, tolerance: f64) -> Self {
        Self {
            property: property.into(),
            checked: 0,
            failed: 0,
            skipped: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, error: f64) {
        self.checked += 1;
        self.worst = self.worst.max(error);
        if !(error <= self.tolerance) {
            self.failed += 1;
        }
    }

    fn record_bool(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            self.worst = 1.0;
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

/// Randomized check of the determinant calculus: recursion against cofactor
/// expansion, derivative formulas against central differences, barrier
/// nonnegativity and singular case, the certificate chain and the resulting
/// positivity of the determinant.
pub fn audit(opts: &AuditOptions, rng: &mut impl Rng) -> Result<Vec<AuditRow>> {
    if opts.max_size == 0 || opts.max_size > 12 {
        return Err(Error::SizeLimit(opts.max_size));
    }
    let mut recursion = AuditRow::new("recursion_matches_cofactor_expansion", 1e-10);
    let mut partials = AuditRow::new("derivatives_match_finite_differences", 1e-6);
    let mut nonnegative = AuditRow::new("barrier_determinant_nonnegative", 1e-12);
    let mut singular = AuditRow::new("barrier_singular_case_vanishes", 1e-12);
    let mut chain = AuditRow::new("certificate_chain_ordered", 0.0);
    let mut positive = AuditRow::new("certified_determinant_positive", 0.0);
    for _ in 0..opts.samples {
        let n = rng.random_range(1..=opts.max_size);
        let bound = opts.coefficient_bound;
        let lower: Vec<f64> = (1..n).map(|_| rng.random_range(-bound..=bound)).collect();
        let upper: Vec<f64> = (1..n).map(|_| rng.random_range(-bound..=bound)).collect();
        let spec = TriDiagSpec::from_offdiagonals(&lower, &upper);
        for k in 1..=n {
            let det = det_oracle(&spec.build_matrix(k, n)?)?;
            recursion.record((spec.f_value(k, n) - det).abs() / det.abs().max(1.0));
        }

        let tau: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let barrier = BarrierSpec::new(tau.clone())?;
        for k in 1..=n {
            nonnegative.record((-barrier.barrier_f(k, n)?).max(0.0));
        }
        let mut edge = tau.clone();
        edge[0] = 0.0;
        edge[n - 1] = 1.0;
        if n >= 2 {
            singular.record(BarrierSpec::new(edge)?.barrier_f(1, n)?.abs());
        }

        if n < 2 {
            continue;
        }
        let mut fraction = || {
            if opts.force_boundary {
                1.0
            } else {
                rng.random_range(0.0..opts.hypothesis_slack)
            }
        };
        let alpha_lower: Vec<f64> = (1..n).map(|i| fraction() * tau[i]).collect();
        let alpha_upper: Vec<f64> = (0..n - 1).map(|i| fraction() * (1.0 - tau[i])).collect();
        let eps_lower: Vec<bool> = (1..n).map(|_| rng.random()).collect();
        let eps_upper: Vec<bool> = (1..n).map(|_| rng.random()).collect();
        let split = SplitSpec::new(&alpha_lower, &alpha_upper, &eps_lower, &eps_upper);

        let j = rng.random_range(1..n);
        let (d_sub, d_sup) = split.f_partials(1, n, j);
        let h = opts.fd_step;
        let f = |s: &SplitSpec| s.to_spec().f_value(1, n);
        let a = split.alpha_sub(j + 1);
        let fd_sub = (f(&split.with_alpha_sub(j + 1, a + h))
            - f(&split.with_alpha_sub(j + 1, (a - h).max(0.0))))
            / (a + h - (a - h).max(0.0));
        let a = split.alpha_sup(j);
        let fd_sup = (f(&split.with_alpha_sup(j, a + h))
            - f(&split.with_alpha_sup(j, (a - h).max(0.0))))
            / (a + h - (a - h).max(0.0));
        partials.record((d_sub - fd_sub).abs() / fd_sub.abs().max(1.0));
        partials.record((d_sup - fd_sup).abs() / fd_sup.abs().max(1.0));

        if positivity_certificate(&split, &barrier, 1, n) {
            let evaluated = CertificateChain::evaluate(&split, &barrier, 1, n)?;
            chain.record_bool(evaluated.ordered(1e-12));
            positive.record_bool(evaluated.f > 0.0);
        } else {
            chain.skipped += 1;
            positive.skipped += 1;
        }
    }
    Ok(vec![recursion, partials, nonnegative, singular, chain, positive])
}
