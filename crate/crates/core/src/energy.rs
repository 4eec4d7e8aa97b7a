//! The action functional, its derivatives and the reduced functional.
//!
//! With `U_j = e^{u⁰_j + v_j}` the action is
//!
//! ```text
//! I(v) = ½ Σ_jk a_jk ∫ ∇v_j·∇v_k + (λ/2) ∫ (U − 1)ᵀ M (U − 1) + Σ_j b_j c_j,
//! ```
//!
//! where `c_j` is the mean of `v_j`. Gradients are represented in the `L²`
//! pairing, so the gradient field of component `j` is
//! `G_j = −(AΔv)_j + λ U_j (M(U − 1))_j + b_j/|Ω|`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Zip;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cartan::CartanData;
use crate::constraint::{c_plus, ConstraintContext, ConstraintSolution, ContinuationOptions};
use crate::error::{Error, Result};
use crate::torus::{background_function, Regularization, ScalarField, TorusGrid, VortexSet};

/// Exponent above which evaluation aborts.
pub const OVERFLOW_GUARD: f64 = 100.0;

/// Everything that stays fixed while the unknown fields change.
#[derive(Clone, Debug)]
pub struct Problem {
    cartan: CartanData,
    grid: TorusGrid,
    vortices: VortexSet,
    lambda: f64,
    counts: Vec<u32>,
    b: Vec<f64>,
    u0: Vec<ScalarField>,
    exp_u0: Vec<ScalarField>,
    regularization: Regularization,
}

impl Problem {
    pub fn new(
        cartan: CartanData,
        grid: TorusGrid,
        vortices: VortexSet,
        lambda: f64,
        regularization: Regularization,
    ) -> Result<Self> {
        let n = cartan.rank();
        if vortices.rank() != n {
            return Err(Error::CountLength {
                expected: n,
                got: vortices.rank(),
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("coupling λ = {lambda} must be positive")));
        }
        let counts = vortices.counts();
        let b = cartan.constraint_offsets(&counts)?;
        let mut u0 = Vec::with_capacity(n);
        let mut exp_u0 = Vec::with_capacity(n);
        for j in 0..n {
            let (u, e) = background_function(&grid, &vortices, j, regularization)?;
            u0.push(u);
            exp_u0.push(e);
        }
        if !cartan.rank_is_proven() {
            log::warn!(
                "rank {n} lies outside 3..=5, where the compactness needed by the \
                 mountain-pass argument is unproven"
            );
        }
        Ok(Self {
            cartan,
            grid,
            vortices,
            lambda,
            counts,
            b,
            u0,
            exp_u0,
            regularization,
        })
    }

    /// The same problem at a different coupling.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn cartan(&self) -> &CartanData {
        &self.cartan
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn vortices(&self) -> &VortexSet {
        &self.vortices
    }

    pub fn rank(&self) -> usize {
        self.cartan.rank()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn background(&self, j: usize) -> &ScalarField {
        &self.u0[j]
    }

    pub fn exp_background(&self, j: usize) -> &ScalarField {
        &self.exp_u0[j]
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    pub fn lambda_lower_bound(&self) -> f64 {
        self.cartan
            .lambda_lower_bound(&self.counts, self.grid.area())
            .expect("counts validated at construction")
    }

    /// `e^{u⁰_j + f_j}` for each component, guarded against overflow.
    pub fn exponentials(&self, f: &[ScalarField]) -> Result<Vec<ScalarField>> {
        f.iter()
            .enumerate()
            .map(|(j, fj)| {
                let mut out = ScalarField::zeros(&self.grid);
                let mut overflow = false;
                Zip::from(&mut out.0)
                    .and(&fj.0)
                    .and(&self.u0[j].0)
                    .and(&self.exp_u0[j].0)
                    .for_each(|o, &x, &u, &e| {
                        if u + x > OVERFLOW_GUARD || !x.is_finite() {
                            overflow = true;
                        }
                        *o = e * x.exp();
                    });
                if overflow {
                    Err(Error::Overflow { component: j + 1 })
                } else {
                    Ok(out)
                }
            })
            .collect()
    }

    /// Constraint integrals for mean-zero fields `w`.
    pub fn constraint_context(&self, w: &[ScalarField]) -> Result<ConstraintContext> {
        let f = self.exponentials(w)?;
        ConstraintContext::from_exponentials(&self.cartan, self.lambda, &self.b, &self.grid, &f)
    }

    /// `(A Δ f)_j` for every component.
    pub fn a_laplacian(&self, f: &[ScalarField]) -> Vec<ScalarField> {
        let n = self.rank();
        let spectra: Vec<_> = f.iter().map(|fj| self.grid.fft2(fj)).collect();
        let a = self.cartan.inverse_f64();
        let k2 = self.grid.k_squared();
        (0..n)
            .map(|j| {
                let mut acc = spectra[0].mapv(|_| Complex64::new(0.0, 0.0));
                for (k, spec) in spectra.iter().enumerate() {
                    let ajk = a[(j, k)];
                    Zip::from(&mut acc)
                        .and(spec)
                        .and(k2)
                        .for_each(|o, &s, &q| *o -= s * (ajk * q));
                }
                self.grid.ifft2(acc)
            })
            .collect()
    }
}

/// The unknown `v_j = c_j + w_j` split into means and mean-zero parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemState {
    pub w: Vec<ScalarField>,
    pub c: Vec<f64>,
}

impl SystemState {
    pub fn zeros(problem: &Problem) -> Self {
        let n = problem.rank();
        Self {
            w: vec![ScalarField::zeros(problem.grid()); n],
            c: vec![0.0; n],
        }
    }

    /// Splits full fields into means and mean-zero parts.
    pub fn from_fields(grid: &TorusGrid, v: &[ScalarField]) -> Self {
        let c: Vec<f64> = v.iter().map(|f| grid.mean(f)).collect();
        let w = v
            .iter()
            .zip(&c)
            .map(|(f, &cj)| f.add_constant(-cj))
            .collect();
        Self { w, c }
    }

    pub fn rank(&self) -> usize {
        self.c.len()
    }

    pub fn field(&self, j: usize) -> ScalarField {
        self.w[j].add_constant(self.c[j])
    }

    pub fn fields(&self) -> Vec<ScalarField> {
        (0..self.rank()).map(|j| self.field(j)).collect()
    }

    /// `v − ξ𝟙`.
    pub fn translated(&self, xi: f64) -> Self {
        Self {
            w: self.w.clone(),
            c: self.c.iter().map(|c| c - xi).collect(),
        }
    }

    /// `Σ_j ‖v_j − v'_j‖_{H¹}`.
    pub fn h1_distance(&self, other: &SystemState, grid: &TorusGrid) -> f64 {
        (0..self.rank())
            .map(|j| grid.h1_norm(&self.field(j).sub(&other.field(j))))
            .sum()
    }
}

/// The three parts of the action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub potential: f64,
    pub linear: f64,
    pub total: f64,
}

/// `U − 1` contracted with `M`, i.e. `(M(U − 1))_j`, per component.
fn interaction_residual(cartan: &CartanData, u: &[ScalarField]) -> Vec<ScalarField> {
    let n = cartan.rank();
    let m = cartan.interaction_f64();
    (0..n)
        .map(|j| {
            let mut acc = u[j].add_constant(-1.0).scaled(m[(j, j)]);
            if j > 0 {
                acc.axpy(m[(j, j - 1)], &u[j - 1].add_constant(-1.0));
            }
            if j + 1 < n {
                acc.axpy(m[(j, j + 1)], &u[j + 1].add_constant(-1.0));
            }
            acc
        })
        .collect()
}

/// Evaluates the action at `state`.
pub fn action(problem: &Problem, state: &SystemState) -> Result<EnergyBreakdown> {
    let grid = problem.grid();
    let n = problem.rank();
    let u = problem.exponentials(&state.fields())?;
    let spectra: Vec<_> = state.w.iter().map(|w| grid.fft2(w)).collect();
    let a = problem.cartan().inverse_f64();
    let k2 = grid.k_squared();
    let mut dirichlet = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s = Zip::from(&spectra[j])
                .and(&spectra[k])
                .and(k2)
                .fold(0.0, |acc, x, y, &q| acc + q * (x * y.conj()).re);
            dirichlet += a[(j, k)] * s;
        }
    }
    dirichlet *= 0.5 * grid.area() / (grid.len() as f64).powi(2);
    let mres = interaction_residual(problem.cartan(), &u);
    let potential: f64 = (0..n)
        .map(|j| grid.l2_inner(&u[j].add_constant(-1.0), &mres[j]))
        .sum::<f64>()
        * 0.5
        * problem.lambda();
    let linear: f64 = problem
        .offsets()
        .iter()
        .zip(&state.c)
        .map(|(b, c)| b * c)
        .sum();
    let total = dirichlet + potential + linear;
    if !total.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(EnergyBreakdown {
        dirichlet,
        potential,
        linear,
        total,
    })
}

/// `L²` representation of the differential of the action.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub fields: Vec<ScalarField>,
    /// `∂I/∂c_j = ∫ G_j`.
    pub means: Vec<f64>,
}

/// The nonlinear part `λ U_j (M(U − 1))_j` of the gradient.
fn potential_force(problem: &Problem, u: &[ScalarField]) -> Vec<ScalarField> {
    let mres = interaction_residual(problem.cartan(), u);
    u.iter()
        .zip(&mres)
        .map(|(uj, mj)| uj.mul(mj).scaled(problem.lambda()))
        .collect()
}

pub fn action_gradient(problem: &Problem, state: &SystemState) -> Result<Gradient> {
    let grid = problem.grid();
    let u = problem.exponentials(&state.fields())?;
    let force = potential_force(problem, &u);
    let alap = problem.a_laplacian(&state.w);
    let area = grid.area();
    let fields: Vec<ScalarField> = (0..problem.rank())
        .map(|j| {
            force[j]
                .sub(&alap[j])
                .add_constant(problem.offsets()[j] / area)
        })
        .collect();
    let means = fields.iter().map(|g| grid.integrate(g)).collect();
    Ok(Gradient { fields, means })
}

/// Second derivative of the action applied to the direction `phi`.
pub fn hessian_vec(
    problem: &Problem,
    state: &SystemState,
    phi: &[ScalarField],
) -> Result<Vec<ScalarField>> {
    let u = problem.exponentials(&state.fields())?;
    Ok(hessian_vec_with(problem, &u, phi))
}

fn hessian_vec_with(problem: &Problem, u: &[ScalarField], phi: &[ScalarField]) -> Vec<ScalarField> {
    let n = problem.rank();
    let m = problem.cartan().interaction_f64();
    let mres = interaction_residual(problem.cartan(), u);
    let uphi: Vec<ScalarField> = u.iter().zip(phi).map(|(a, b)| a.mul(b)).collect();
    let alap = problem.a_laplacian(phi);
    (0..n)
        .map(|j| {
            let mut muphi = uphi[j].scaled(m[(j, j)]);
            if j > 0 {
                muphi.axpy(m[(j, j - 1)], &uphi[j - 1]);
            }
            if j + 1 < n {
                muphi.axpy(m[(j, j + 1)], &uphi[j + 1]);
            }
            let pot = mres[j].mul(&uphi[j]).add(&u[j].mul(&muphi));
            pot.scaled(problem.lambda()).sub(&alap[j])
        })
        .collect()
}

/// A linearization point: the state with its exponentials cached.
#[derive(Clone, Debug)]
pub struct Linearization {
    u: Vec<ScalarField>,
}

impl Linearization {
    pub fn new(problem: &Problem, state: &SystemState) -> Result<Self> {
        Ok(Self {
            u: problem.exponentials(&state.fields())?,
        })
    }

    pub fn apply(&self, problem: &Problem, phi: &[ScalarField]) -> Vec<ScalarField> {
        hessian_vec_with(problem, &self.u, phi)
    }

    /// `mean(U_j²)` per component, the scale of the potential curvature.
    pub fn curvature_levels(&self, problem: &Problem) -> Vec<f64> {
        self.u
            .iter()
            .map(|uj| problem.grid().l2_inner(uj, uj) / problem.grid().area())
            .collect()
    }
}

/// Second derivatives of `c ↦ I(w + c)`.
pub fn c_hessian(problem: &Problem, state: &SystemState) -> Result<DMatrix<f64>> {
    let grid = problem.grid();
    let n = problem.rank();
    let u = problem.exponentials(&state.fields())?;
    let r = problem.cartan().weights_f64();
    let lambda = problem.lambda();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut inner = u[j].scaled(4.0 * r[j]).add_constant(-1.0);
        if j > 0 {
            inner.axpy(-r[j - 1], &u[j - 1]);
        }
        if j + 1 < n {
            inner.axpy(-r[j + 1], &u[j + 1]);
        }
        h[(j, j)] = lambda * r[j] * grid.l2_inner(&u[j], &inner);
        if j + 1 < n {
            let off = -lambda * r[j] * r[j + 1] * grid.l2_inner(&u[j], &u[j + 1]);
            h[(j, j + 1)] = off;
            h[(j + 1, j)] = off;
        }
    }
    Ok(h)
}

/// Dominance and definiteness of a mean-value Hessian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceCertificate {
    /// `H_jj − Σ_{k≠j} |H_jk|` per row.
    pub row_margins: Vec<f64>,
    pub min_eigenvalue: f64,
    pub dominant: bool,
    pub positive_definite: bool,
}

pub fn dominance_certificate(h: &DMatrix<f64>) -> DominanceCertificate {
    let n = h.nrows();
    let row_margins: Vec<f64> = (0..n)
        .map(|j| h[(j, j)] - (0..n).filter(|&k| k != j).map(|k| h[(j, k)].abs()).sum::<f64>())
        .collect();
    let min_eigenvalue = SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    DominanceCertificate {
        dominant: row_margins.iter().all(|&m| m > 0.0),
        positive_definite: min_eigenvalue > 0.0,
        row_margins,
        min_eigenvalue,
    }
}

/// `J(w) = I(w + c₊(w))` together with the state and constraint solution.
pub fn reduced_action(
    problem: &Problem,
    w: &[ScalarField],
    opts: &ContinuationOptions,
) -> Result<(EnergyBreakdown, SystemState, ConstraintSolution)> {
    let ctx = problem.constraint_context(w)?;
    let sol = c_plus(&ctx, opts)?;
    let state = SystemState {
        w: w.to_vec(),
        c: sol.means(),
    };
    let energy = action(problem, &state)?;
    Ok((energy, state, sol))
}

/// Inner product `Σ_j ∫ a_j b_j`.
pub fn dot(grid: &TorusGrid, a: &[ScalarField], b: &[ScalarField]) -> f64 {
    a.iter().zip(b).map(|(x, y)| grid.l2_inner(x, y)).sum()
}

/// `a + s·b`, componentwise.
pub fn combine(a: &[ScalarField], s: f64, b: &[ScalarField]) -> Vec<ScalarField> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut out = x.clone();
            out.axpy(s, y);
            out
        })
        .collect()
}

pub fn scale(a: &[ScalarField], s: f64) -> Vec<ScalarField> {
    a.iter().map(|x| x.scaled(s)).collect()
}

/// `sqrt(Σ_j ‖g_j‖²_{(W^{1,2})*})`.
pub fn dual_norm(grid: &TorusGrid, g: &[ScalarField]) -> f64 {
    g.iter()
        .map(|gj| grid.h1_dual_norm(gj).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The constant-coefficient operator `A(−Δ + ν) + S` with `S` symmetric
/// positive semidefinite, inverted mode by mode in the joint eigenbasis of
/// `(S, A)`.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    grid: TorusGrid,
    a: DMatrix<f64>,
    potential: DMatrix<f64>,
    /// Columns `x_i` with `XᵀAX = I` and `XᵀSX = diag(θ)`.
    basis: DMatrix<f64>,
    theta: Vec<f64>,
    nu: f64,
}

impl Preconditioner {
    /// `A(−Δ + ν) + μM`.
    pub fn new(problem: &Problem, nu: f64, mu: f64) -> Self {
        Self::with_potential(problem, nu, problem.cartan().interaction_f64() * mu)
    }

    pub fn with_potential(problem: &Problem, nu: f64, potential: DMatrix<f64>) -> Self {
        let a = problem.cartan().inverse_f64().clone();
        let chol = a.clone().cholesky().expect("A is positive definite");
        let l_inv = chol
            .l()
            .try_inverse()
            .expect("triangular factor is invertible");
        let c = &l_inv * &potential * l_inv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let basis = l_inv.transpose() * &eig.eigenvectors;
        Self {
            grid: problem.grid().clone(),
            a,
            potential,
            basis,
            theta: eig.eigenvalues.iter().map(|t| t.max(0.0)).collect(),
            nu,
        }
    }

    /// Preconditioner adapted to the potential curvature at a state:
    /// `S = λ D M D` with `D = diag(√mean(U_j²))`.
    pub fn for_linearization(problem: &Problem, lin: &Linearization) -> Self {
        let d = lin.curvature_levels(problem);
        let m = problem.cartan().interaction_f64();
        let s = DMatrix::from_fn(m.nrows(), m.ncols(), |j, k| {
            problem.lambda() * (d[j] * d[k]).sqrt() * m[(j, k)]
        });
        Self::with_potential(problem, 1.0, s)
    }

    /// The operator itself, `(A(−Δ + ν) + S) x`.
    pub fn forward(&self, x: &[ScalarField]) -> Vec<ScalarField> {
        let n = x.len();
        let spectra: Vec<_> = x.iter().map(|xj| self.grid.fft2(xj)).collect();
        let k2 = self.grid.k_squared();
        (0..n)
            .map(|j| {
                let mut acc = spectra[0].mapv(|_| Complex64::new(0.0, 0.0));
                for (k, spec) in spectra.iter().enumerate() {
                    let (a, p, nu) = (self.a[(j, k)], self.potential[(j, k)], self.nu);
                    Zip::from(&mut acc)
                        .and(spec)
                        .and(k2)
                        .for_each(|o, &s, &q| *o += s * (a * (q + nu) + p));
                }
                self.grid.ifft2(acc)
            })
            .collect()
    }

    /// `⟨x, P x⟩`, the squared norm induced by the operator.
    pub fn norm_squared(&self, x: &[ScalarField]) -> f64 {
        dot(&self.grid, x, &self.forward(x))
    }

    /// `P⁻¹ g`.
    pub fn apply(&self, g: &[ScalarField]) -> Vec<ScalarField> {
        let n = g.len();
        let spectra: Vec<_> = g.iter().map(|gj| self.grid.fft2(gj)).collect();
        let k2 = self.grid.k_squared();
        let mut modal = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = spectra[0].mapv(|_| Complex64::new(0.0, 0.0));
            for (j, spec) in spectra.iter().enumerate() {
                let x = self.basis[(j, i)];
                Zip::from(&mut acc).and(spec).for_each(|o, &s| *o += s * x);
            }
            let (theta, nu) = (self.theta[i], self.nu);
            Zip::from(&mut acc)
                .and(k2)
                .for_each(|o, &q| *o /= q + nu + theta);
            modal.push(acc);
        }
        (0..n)
            .map(|j| {
                let mut acc = modal[0].mapv(|_| Complex64::new(0.0, 0.0));
                for (i, spec) in modal.iter().enumerate() {
                    let x = self.basis[(j, i)];
                    Zip::from(&mut acc).and(spec).for_each(|o, &s| *o += s * x);
                }
                self.grid.ifft2(acc)
            })
            .collect()
    }
}

/// Outcome of a Krylov solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// Preconditioned residual norm relative to the right-hand side.
    pub relative_residual: f64,
}

/// Preconditioned MINRES for the symmetric (possibly indefinite) system
/// `H x = rhs` with a positive definite preconditioner.
pub fn minres(
    grid: &TorusGrid,
    apply: impl Fn(&[ScalarField]) -> Vec<ScalarField>,
    precondition: impl Fn(&[ScalarField]) -> Vec<ScalarField>,
    rhs: &[ScalarField],
    rtol: f64,
    max_iters: usize,
) -> (Vec<ScalarField>, KrylovReport) {
    let zeros: Vec<ScalarField> = rhs.iter().map(|f| f.scaled(0.0)).collect();
    let mut x = zeros.clone();
    let mut r1 = rhs.to_vec();
    let mut y = precondition(&r1);
    let beta1 = dot(grid, &r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (
            x,
            KrylovReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        );
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = zeros.clone();
    let mut w2 = zeros;
    let mut iterations = 0;
    for itn in 1..=max_iters {
        iterations = itn;
        let v = scale(&y, 1.0 / beta);
        y = apply(&v);
        if itn >= 2 {
            y = combine(&y, -beta / oldb, &r1);
        }
        let alfa = dot(grid, &v, &y);
        y = combine(&y, -alfa / beta, &r2);
        r1 = std::mem::replace(&mut r2, y.clone());
        y = precondition(&r2);
        oldb = beta;
        beta = dot(grid, &r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, w1i), w2i)| {
                let mut out = vi.clone();
                out.axpy(-oldeps, w1i);
                out.axpy(-delta, w2i);
                out.scaled(1.0 / gamma)
            })
            .collect();
        x = combine(&x, phi, &w);
        if phibar <= rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    (
        x,
        KrylovReport {
            iterations,
            relative_residual: phibar / beta1,
        },
    )
}

/// Strong-form residual `Δv − K(λ U M(U − 1) + b/|Ω|)`, which equals `−K G`.
pub fn strong_residual(problem: &Problem, gradient: &Gradient) -> Vec<ScalarField> {
    let k = problem.cartan().cartan();
    let n = problem.rank();
    (0..n)
        .map(|i| {
            let mut acc = ScalarField::zeros(problem.grid());
            for j in 0..n {
                if k[i][j] != 0 {
                    acc.axpy(-(k[i][j] as f64), &gradient.fields[j]);
                }
            }
            acc
        })
        .collect()
}

/// Flux identities `λ ∫ U_j (M(U − 1))_j + b_j`, zero at critical points.
pub fn flux_residuals(problem: &Problem, state: &SystemState) -> Result<Vec<f64>> {
    let u = problem.exponentials(&state.fields())?;
    let force = potential_force(problem, &u);
    Ok(force
        .iter()
        .zip(problem.offsets())
        .map(|(f, b)| problem.grid().integrate(f) + b)
        .collect())
}

/// `λ ∫ U_j (M(U − 1))_j`, the nonlinear flux carried by each component.
pub fn flux_integrals(problem: &Problem, state: &SystemState) -> Result<Vec<f64>> {
    let u = problem.exponentials(&state.fields())?;
    Ok(potential_force(problem, &u)
        .iter()
        .map(|f| problem.grid().integrate(f))
        .collect())
}

/// Residual of the summed identity
/// `λ∫(U−1)ᵀM(U−1) + λΣ r_j∫U_j − λ|Ω|Σr_j + Σ b_j`.
pub fn summed_identity_residual(problem: &Problem, state: &SystemState) -> Result<f64> {
    let grid = problem.grid();
    let u = problem.exponentials(&state.fields())?;
    let mres = interaction_residual(problem.cartan(), &u);
    let r = problem.cartan().weights_f64();
    let lambda = problem.lambda();
    let quadratic: f64 = (0..problem.rank())
        .map(|j| grid.l2_inner(&u[j].add_constant(-1.0), &mres[j]))
        .sum();
    let linear: f64 = (0..problem.rank()).map(|j| r[j] * grid.integrate(&u[j])).sum();
    let total_r: f64 = r.iter().sum();
    Ok(lambda * quadratic + lambda * linear - lambda * grid.area() * total_r
        + problem.offsets().iter().sum::<f64>())
}
