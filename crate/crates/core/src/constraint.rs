//! The natural constraints on the mean values `c_j = ln t_j`.
//!
//! For fixed mean-zero fields `w` the stationarity of the action in each mean
//! direction is the quadratic
//!
//! ```text
//! 2 r_j E2_j t_j² − Q̃_j(s) t_j + b_j/(λ r_j) = 0,
//! Q̃_j(s) = E1_j + s (r_{j−1} t_{j−1} X_{j−1,j} + r_{j+1} t_{j+1} X_{j,j+1}),
//! ```
//!
//! solved at `s = 1`. Each component picks a root through a sign `ε_j`, with
//! `ε_j = 1` the larger one. The homotopy starts at the decoupled system
//! `s = 0` and is followed to `s = 1` by Euler prediction and Newton
//! correction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cartan::CartanData;
use crate::error::{Error, Result};
use crate::torus::{ScalarField, TorusGrid};
use crate::tridiag::{BarrierSpec, SplitSpec, TriDiagSpec};

/// Integrals of the exponential weights for one choice of `w`.
#[derive(Clone, Debug)]
pub struct ConstraintContext {
    lambda: f64,
    r: Vec<f64>,
    b: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
    /// `cross[j] = X_{j,j+1}` (0-based), length `N − 1`.
    cross: Vec<f64>,
}

impl ConstraintContext {
    /// Builds the context from `f_j = e^{u⁰_j + w_j}` sampled on `grid`.
    pub fn from_exponentials(
        cartan: &CartanData,
        lambda: f64,
        b: &[f64],
        grid: &TorusGrid,
        f: &[ScalarField],
    ) -> Result<Self> {
        let n = cartan.rank();
        assert_eq!(f.len(), n, "one weight field per component");
        let e1 = f.iter().map(|fj| grid.integrate(fj)).collect();
        let e2 = f.iter().map(|fj| grid.l2_inner(fj, fj)).collect();
        let cross = (0..n.saturating_sub(1))
            .map(|j| grid.l2_inner(&f[j], &f[j + 1]))
            .collect();
        Self::from_integrals(cartan, lambda, b, e1, e2, cross)
    }

    pub fn from_integrals(
        cartan: &CartanData,
        lambda: f64,
        b: &[f64],
        e1: Vec<f64>,
        e2: Vec<f64>,
        cross: Vec<f64>,
    ) -> Result<Self> {
        let n = cartan.rank();
        if b.len() != n || e1.len() != n || e2.len() != n || cross.len() + 1 != n {
            return Err(Error::CountLength {
                expected: n,
                got: e1.len(),
            });
        }
        let all = e1.iter().chain(&e2).chain(&cross).chain(b);
        if !(lambda.is_finite() && lambda > 0.0) || all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            lambda,
            r: cartan.weights_f64().to_vec(),
            b: b.to_vec(),
            e1,
            e2,
            cross,
        })
    }

    pub fn rank(&self) -> usize {
        self.r.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn e1(&self, j: usize) -> f64 {
        self.e1[j]
    }

    pub fn e2(&self, j: usize) -> f64 {
        self.e2[j]
    }

    /// `X_{j,k}` for neighbouring 0-based components, zero otherwise.
    pub fn cross(&self, j: usize, k: usize) -> f64 {
        match (j, k) {
            _ if k == j + 1 => self.cross[j],
            _ if j == k + 1 => self.cross[k],
            _ => 0.0,
        }
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.r[j]
    }

    /// `(8 b_j E2_j/λ) / E1_j²`; admissible iff every ratio is at most one.
    pub fn admissibility_ratios(&self) -> Vec<f64> {
        (0..self.rank())
            .map(|j| 8.0 * self.b[j] * self.e2[j] / (self.lambda * self.e1[j] * self.e1[j]))
            .collect()
    }

    pub fn admissible(&self) -> bool {
        self.admissibility_ratios().iter().all(|&q| q <= 1.0)
    }

    /// Errors with the worst component when the context is not admissible.
    pub fn require_admissible(&self) -> Result<()> {
        let ratios = self.admissibility_ratios();
        let (j, &ratio) = ratios
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("rank is at least one");
        if ratio > 1.0 {
            return Err(Error::AdmissibilityBreach {
                component: j + 1,
                ratio,
            });
        }
        Ok(())
    }

    /// Neighbour coupling `S_j = r_{j−1} t_{j−1} X_{j−1,j} + r_{j+1} t_{j+1} X_{j,j+1}`.
    pub fn coupling(&self, t: &[f64], j: usize) -> f64 {
        let mut s = 0.0;
        if j > 0 {
            s += self.r[j - 1] * t[j - 1] * self.cross[j - 1];
        }
        if j + 1 < self.rank() {
            s += self.r[j + 1] * t[j + 1] * self.cross[j];
        }
        s
    }

    pub fn q_tilde(&self, t: &[f64], s: f64, j: usize) -> f64 {
        self.e1[j] + s * self.coupling(t, j)
    }

    fn discriminant(&self, q: f64, j: usize) -> f64 {
        q * q - 8.0 * self.b[j] * self.e2[j] / self.lambda
    }

    fn sqrt_discriminant(&self, q: f64, j: usize) -> Result<f64> {
        let d = self.discriminant(q, j);
        if d < 0.0 || !d.is_finite() {
            return Err(Error::NegativeDiscriminant { component: j + 1 });
        }
        Ok(d.sqrt())
    }

    /// The root of component `j`'s quadratic selected by `larger`, given `Q̃`.
    pub fn root(&self, q: f64, j: usize, larger: bool) -> Result<f64> {
        let d = self.sqrt_discriminant(q, j)?;
        Ok(if larger {
            (q + d) / (4.0 * self.r[j] * self.e2[j])
        } else {
            2.0 * self.b[j] / (self.lambda * self.r[j] * (q + d))
        })
    }

    /// `φ_j = t_j − root_j(Q̃_j(s))`.
    pub fn phi(&self, t: &[f64], s: f64, eps: &[bool]) -> Result<Vec<f64>> {
        (0..self.rank())
            .map(|j| Ok(t[j] - self.root(self.q_tilde(t, s, j), j, eps[j])?))
            .collect()
    }

    /// `dφ_j/dQ̃_j`, i.e. minus the derivative of the selected root.
    fn root_slope(&self, q: f64, j: usize, larger: bool) -> Result<f64> {
        let d = self.sqrt_discriminant(q, j)?;
        if d == 0.0 {
            return Err(Error::NegativeDiscriminant { component: j + 1 });
        }
        let sign = if larger { 1.0 } else { -1.0 };
        Ok((1.0 + sign * q / d) / (4.0 * self.r[j] * self.e2[j]))
    }

    /// Jacobian `∂φ/∂t`: unit diagonal, off-diagonals
    /// `∂φ_j/∂t_{j±1} = −s r_{j±1} X (dRoot/dQ̃)`. At a solution they reduce to
    /// `(−1)^{ε_j} s t_j r_{j±1} X / D_j`.
    pub fn phi_jacobian(&self, t: &[f64], s: f64, eps: &[bool]) -> Result<TriDiagSpec> {
        let n = self.rank();
        let mut lower = Vec::with_capacity(n.saturating_sub(1));
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        let slopes: Vec<f64> = (0..n)
            .map(|j| self.root_slope(self.q_tilde(t, s, j), j, eps[j]))
            .collect::<Result<_>>()?;
        for j in 0..n.saturating_sub(1) {
            upper.push(-s * self.r[j + 1] * self.cross[j] * slopes[j]);
            lower.push(-s * self.r[j] * self.cross[j] * slopes[j + 1]);
        }
        Ok(TriDiagSpec::from_offdiagonals(&lower, &upper))
    }

    /// `∂φ/∂s`.
    pub fn phi_s_derivative(&self, t: &[f64], s: f64, eps: &[bool]) -> Result<Vec<f64>> {
        (0..self.rank())
            .map(|j| {
                let q = self.q_tilde(t, s, j);
                Ok(-self.coupling(t, j) * self.root_slope(q, j, eps[j])?)
            })
            .collect()
    }

    /// The nondegeneracy certificate at a solution: the Jacobian in split form
    /// with magnitudes `α_{j,2} = s t_{j+1} r_{j+1} X/D_j`,
    /// `α_{j+1,1} = s t_j r_j X/D_{j+1}` (a diagonal similarity of the
    /// Jacobian, so with the same determinant), and the barrier weights
    /// `τ_j = r_{j−1} t_{j−1} X_{j−1,j}/S_j`.
    pub fn certificate(&self, t: &[f64], s: f64, eps: &[bool]) -> Result<(SplitSpec, BarrierSpec)> {
        let n = self.rank();
        let d: Vec<f64> = (0..n)
            .map(|j| self.sqrt_discriminant(self.q_tilde(t, s, j), j))
            .collect::<Result<_>>()?;
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for j in 0..n.saturating_sub(1) {
            upper.push(s * t[j + 1] * self.r[j + 1] * self.cross[j] / d[j]);
            lower.push(s * t[j] * self.r[j] * self.cross[j] / d[j + 1]);
        }
        let eps_upper: Vec<bool> = eps[..n - 1].to_vec();
        let eps_lower: Vec<bool> = eps[1..].to_vec();
        let split = SplitSpec::new(&lower, &upper, &eps_lower, &eps_upper);
        let tau = (0..n)
            .map(|j| {
                let left = if j > 0 {
                    self.r[j - 1] * t[j - 1] * self.cross[j - 1]
                } else {
                    0.0
                };
                let total = self.coupling(t, j);
                if total > 0.0 {
                    (left / total).clamp(0.0, 1.0)
                } else if j == 0 {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        Ok((split, BarrierSpec::new(tau)?))
    }

    /// Closed-form solution of the decoupled system.
    pub fn solve_s0(&self, eps: &[bool]) -> Result<Vec<f64>> {
        self.require_admissible()?;
        (0..self.rank())
            .map(|j| self.root(self.e1[j], j, eps[j]))
            .collect()
    }
}

/// Tuning of the continuation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Envelope constant `C` in `t_j √E2_j ∈ [1/C, C]`.
    pub envelope: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            min_step: 1e-6,
            max_step: 0.1,
            newton_tol: 1e-13,
            max_newton: 50,
            envelope: 1e3,
        }
    }
}

/// One accepted continuation step.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationStep {
    pub s: f64,
    pub jacobian_det: f64,
    pub certified: bool,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSolution {
    pub t: Vec<f64>,
    pub epsilon: Vec<bool>,
    pub s: f64,
    pub jacobian_det: f64,
    pub residual_norm: f64,
    pub steps: Vec<ContinuationStep>,
    pub envelope_ok: bool,
}

impl ConstraintSolution {
    /// Mean values `c_j = ln t_j`.
    pub fn means(&self) -> Vec<f64> {
        self.t.iter().map(|t| t.ln()).collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve_tridiagonal(spec: &TriDiagSpec, rhs: &[f64]) -> Option<Vec<f64>> {
    if let Some(x) = spec.solve(rhs) {
        return Some(x);
    }
    let n = spec.size();
    let dense: DMatrix<f64> = spec.build_matrix(1, n).ok()?;
    dense
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|x| x.iter().copied().collect())
}

/// Damped Newton on `φ(·, s) = 0` starting from `t0`. Returns the solution and
/// the iteration count.
pub fn newton(
    ctx: &ConstraintContext,
    t0: &[f64],
    s: f64,
    eps: &[bool],
    opts: &ContinuationOptions,
) -> Result<(Vec<f64>, usize)> {
    let mut t = t0.to_vec();
    let mut res = ctx.phi(&t, s, eps)?;
    for iter in 0..opts.max_newton {
        let scale = 1.0 + max_abs(&t);
        if max_abs(&res) <= opts.newton_tol * scale {
            return Ok((t, iter));
        }
        let jac = ctx.phi_jacobian(&t, s, eps)?;
        let step = solve_tridiagonal(&jac, &res)
            .ok_or_else(|| Error::NonConvergence("singular constraint Jacobian".into()))?;
        let mut damping = 1.0;
        let current = max_abs(&res);
        loop {
            let trial: Vec<f64> = t.iter().zip(&step).map(|(a, d)| a - damping * d).collect();
            if trial.iter().all(|&x| x > 0.0 && x.is_finite()) {
                if let Ok(r) = ctx.phi(&trial, s, eps) {
                    if max_abs(&r) < current || damping < 1e-3 {
                        t = trial;
                        res = r;
                        break;
                    }
                }
            }
            damping *= 0.5;
            if damping < 1e-10 {
                return Err(Error::NonConvergence(format!(
                    "Newton line search failed at s = {s}"
                )));
            }
        }
        let scale = 1.0 + max_abs(&t);
        let step_size = damping * max_abs(&step);
        if step_size <= 4.0 * f64::EPSILON * scale && max_abs(&res) <= 1e-12 * scale {
            return Ok((t, iter + 1));
        }
    }
    let scale = 1.0 + max_abs(&t);
    if max_abs(&res) <= opts.newton_tol * scale {
        Ok((t, opts.max_newton))
    } else {
        Err(Error::NonConvergence(format!(
            "Newton did not reach {:e} at s = {s} (residual {:e})",
            opts.newton_tol,
            max_abs(&res)
        )))
    }
}

/// Checks the barrier hypothesis at an accepted point.
pub fn certify(ctx: &ConstraintContext, t: &[f64], s: f64, eps: &[bool]) -> Result<bool> {
    let n = ctx.rank();
    if n == 1 || s == 0.0 {
        return Ok(true);
    }
    let (split, tau) = ctx.certificate(t, s, eps)?;
    Ok(crate::tridiag::positivity_certificate(&split, &tau, 1, n))
}

/// Follows the homotopy from `s = 0` to `s = 1`.
pub fn continuation_solve(
    ctx: &ConstraintContext,
    eps: &[bool],
    opts: &ContinuationOptions,
) -> Result<ConstraintSolution> {
    let n = ctx.rank();
    assert_eq!(eps.len(), n);
    let mut t = ctx.solve_s0(eps)?;
    let mut s = 0.0;
    let mut ds = opts.initial_step;
    let mut steps = Vec::new();
    while s < 1.0 {
        let step = ds.min(1.0 - s);
        let target = if 1.0 - s - step < 1e-14 { 1.0 } else { s + step };
        let predicted = predict(ctx, &t, s, target - s, eps).unwrap_or_else(|| t.clone());
        match newton(ctx, &predicted, target, eps, opts) {
            Ok((tn, iterations)) => {
                let det = ctx.phi_jacobian(&tn, target, eps)?.f_value(1, n);
                if !(det > 0.0) {
                    return Err(Error::NonConvergence(format!(
                        "constraint Jacobian determinant {det:e} at s = {target}"
                    )));
                }
                let certified = certify(ctx, &tn, target, eps)?;
                if !certified {
                    log::warn!("positivity certificate failed numerically at s = {target}");
                }
                steps.push(ContinuationStep {
                    s: target,
                    jacobian_det: det,
                    certified,
                    newton_iterations: iterations,
                });
                t = tn;
                s = target;
                ds = (2.0 * ds).min(opts.max_step);
            }
            Err(Error::NegativeDiscriminant { .. }) | Err(Error::NonConvergence(_)) => {
                ds *= 0.5;
                if ds < opts.min_step {
                    return Err(Error::StepUnderflow { s });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let residual_norm = max_abs(&ctx.phi(&t, 1.0, eps)?);
    let jacobian_det = steps
        .last()
        .map(|st| st.jacobian_det)
        .unwrap_or(1.0);
    let envelope_ok = (0..n).all(|j| {
        let scaled = t[j] * ctx.e2(j).sqrt();
        scaled >= 1.0 / opts.envelope && scaled <= opts.envelope
    });
    if !envelope_ok {
        log::warn!("constraint solution leaves the envelope with C = {}", opts.envelope);
    }
    Ok(ConstraintSolution {
        t,
        epsilon: eps.to_vec(),
        s,
        jacobian_det,
        residual_norm,
        steps,
        envelope_ok,
    })
}

/// Euler predictor along the solution curve.
fn predict(ctx: &ConstraintContext, t: &[f64], s: f64, ds: f64, eps: &[bool]) -> Option<Vec<f64>> {
    let jac = ctx.phi_jacobian(t, s, eps).ok()?;
    let rhs = ctx.phi_s_derivative(t, s, eps).ok()?;
    let dt = solve_tridiagonal(&jac, &rhs)?;
    let out: Vec<f64> = t.iter().zip(&dt).map(|(a, d)| a - ds * d).collect();
    out.iter().all(|&x| x > 0.0 && x.is_finite()).then_some(out)
}

/// The branch with every `ε_j = 1`.
pub fn c_plus(ctx: &ConstraintContext, opts: &ContinuationOptions) -> Result<ConstraintSolution> {
    continuation_solve(ctx, &vec![true; ctx.rank()], opts)
}

/// All `2^N` sign patterns, `ε_j` read from bit `j`.
pub fn sign_patterns(n: usize) -> Vec<Vec<bool>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|j| mask >> j & 1 == 1).collect())
        .collect()
}

/// One row of a sign-pattern sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub epsilon: Vec<bool>,
    pub t: Vec<f64>,
    pub jacobian_det: f64,
    pub residual_norm: f64,
    /// Every accepted continuation step had a positive Jacobian determinant.
    pub steps_positive: bool,
    pub certified: bool,
    pub envelope_ok: bool,
    /// Largest relative deviation of Newton restarts from `t`.
    pub start_spread: f64,
    pub unique: bool,
}

/// Solves every sign pattern and restarts Newton at `s = 1` from the
/// solution scaled componentwise by `1 ± spread` in alternating patterns.
/// A pattern is unique when every restart lands within `1e-10` of it.
pub fn sweep_patterns(
    ctx: &ConstraintContext,
    spread: f64,
    opts: &ContinuationOptions,
) -> Result<Vec<PatternRow>> {
    let n = ctx.rank();
    let mut rows = Vec::with_capacity(1 << n);
    for eps in sign_patterns(n) {
        let sol = continuation_solve(ctx, &eps, opts)?;
        let mut start_spread = 0.0f64;
        for pattern in 0..4usize {
            let start: Vec<f64> = sol
                .t
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let sign = if (j + pattern) % 2 == 0 { 1.0 } else { -1.0 };
                    let size = spread * (1 + pattern) as f64 / 4.0;
                    t * (1.0 + sign * size)
                })
                .collect();
            let deviation = match newton(ctx, &start, 1.0, &eps, opts) {
                Ok((t, _)) => t
                    .iter()
                    .zip(&sol.t)
                    .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                    .fold(0.0, f64::max),
                Err(_) => f64::INFINITY,
            };
            start_spread = start_spread.max(deviation);
        }
        rows.push(PatternRow {
            steps_positive: sol.steps.iter().all(|st| st.jacobian_det > 0.0),
            certified: sol.steps.iter().all(|st| st.certified),
            jacobian_det: sol.jacobian_det,
            residual_norm: sol.residual_norm,
            envelope_ok: sol.envelope_ok,
            unique: start_spread <= 1e-10,
            start_spread,
            t: sol.t,
            epsilon: eps,
        });
    }
    Ok(rows)
}
