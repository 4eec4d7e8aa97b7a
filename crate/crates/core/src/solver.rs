//! The two solutions: constrained minimization of the reduced functional and a
//! string-based mountain pass, plus an independent criticality check.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::{DMatrix, DVector};

use crate::constraint::{ConstraintContext, ContinuationOptions};
use crate::energy::{
    action, action_gradient, c_hessian, combine, dominance_certificate, dot, dual_norm,
    flux_integrals, flux_residuals, minres, reduced_action, scale, strong_residual,
    summed_identity_residual, DominanceCertificate, EnergyBreakdown, Gradient, Linearization,
    Preconditioner, Problem, SystemState,
};
use crate::error::{Error, Result};
use crate::torus::ScalarField;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Target for the `(W^{1,2})*` norm of the full gradient.
    pub gradient_tolerance: f64,
    /// Hand over to Newton once the preconditioned reduced gradient has
    /// dropped by this factor.
    pub polish_ratio: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Largest admissibility ratio a line-search trial may reach.
    pub admissibility_margin: f64,
    pub max_newton: usize,
    /// Tolerance at which the final state is labeled critical.
    pub critical_tolerance: f64,
    pub continuation: ContinuationOptions,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            gradient_tolerance: 1e-8,
            polish_ratio: 1e-4,
            armijo: 1e-4,
            backtrack: 0.5,
            admissibility_margin: 0.9,
            max_newton: 60,
            critical_tolerance: 1e-6,
            continuation: ContinuationOptions::default(),
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.gradient_tolerance > 0.0 && self.critical_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(in_unit(self.armijo) && in_unit(self.backtrack) && in_unit(self.polish_ratio)) {
            return Err(Error::Config("line-search ratios must lie in (0, 1)".into()));
        }
        if !(self.admissibility_margin > 0.0 && self.admissibility_margin <= 1.0) {
            return Err(Error::Config("admissibility margin must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MountainPassOptions {
    pub path_nodes: usize,
    /// Initial deformation step in the preconditioned metric.
    pub step: f64,
    pub max_sweeps: usize,
    /// Level-set gradient norm below which a node counts as relaxed.
    pub settle_tolerance: f64,
    /// Full gradient norm of the top node at which Newton takes over.
    pub handoff_tolerance: f64,
    /// Upper bound on the node count after local refinement.
    pub max_nodes: usize,
    /// Sweeps between global re-minimizations over the means of each node.
    pub mean_refresh: usize,
    pub xi_growth: f64,
    pub xi_cap: f64,
    /// Required energy drop `I(v*) − I(v̂)`.
    pub energy_drop: f64,
    /// Distinctness radius in the summed `H¹` norm.
    pub delta: f64,
    /// Margin by which the mountain-pass level must exceed `I(v*)`.
    pub level_margin: f64,
    pub gradient_tolerance: f64,
    pub critical_tolerance: f64,
    pub max_newton: usize,
    pub profile_every: usize,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        Self {
            path_nodes: 21,
            step: 0.5,
            max_sweeps: 5000,
            settle_tolerance: 1e-4,
            handoff_tolerance: 1e-3,
            max_nodes: 64,
            mean_refresh: 25,
            xi_growth: 2.0,
            xi_cap: 1024.0,
            energy_drop: 1.0,
            delta: 1e-3,
            level_margin: 1e-8,
            gradient_tolerance: 1e-8,
            critical_tolerance: 1e-6,
            max_newton: 60,
            profile_every: 10,
        }
    }
}

impl MountainPassOptions {
    pub fn validate(&self) -> Result<()> {
        if self.path_nodes < 3 || self.max_nodes < self.path_nodes {
            return Err(Error::Config(
                "the path needs at least 3 nodes and max_nodes ≥ path_nodes".into(),
            ));
        }
        if !(self.step > 0.0 && self.xi_growth > 1.0 && self.delta > 0.0) {
            return Err(Error::Config(
                "step and δ must be positive, ξ growth above one".into(),
            ));
        }
        if !(self.settle_tolerance > 0.0 && self.handoff_tolerance > 0.0) {
            return Err(Error::Config("path tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One line of an iteration trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub phase: String,
    pub iteration: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub step: f64,
}

/// Diagnostics of a critical-point candidate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub label: String,
    pub critical: bool,
    pub tolerance: f64,
    pub lambda: f64,
    pub lambda_multiple: f64,
    pub energy: EnergyBreakdown,
    /// `(W^{1,2})*` norm of the full gradient.
    pub gradient_norm: f64,
    /// Strong-form residual relative to the size of its right side (`L²`).
    pub relative_strong_residual: f64,
    /// `λ ∫ U_j (M(U − 1))_j + b_j`.
    pub flux_residuals: Vec<f64>,
    /// Flux residuals divided by `b_j`.
    pub relative_flux_residuals: Vec<f64>,
    pub flux_integrals: Vec<f64>,
    /// Integral of the strong-form right side per component.
    pub rhs_integrals: Vec<f64>,
    pub summed_identity_residual: f64,
    /// Largest relative residual of the mean-value quadratics at `t = e^c`.
    pub constraint_residual: f64,
    /// Root taken by each mean value: `true` for the larger one.
    pub branch: Vec<bool>,
    pub means: Vec<f64>,
    pub admissibility_ratios: Vec<f64>,
    pub c_hessian: DominanceCertificate,
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(skip)]
    pub state: SystemState,
    #[serde(skip)]
    pub history: Vec<ConvergenceRecord>,
}

/// Evaluates every criticality diagnostic at `state`.
///
/// The state is labeled critical when the gradient norm, the largest
/// relative flux residual and the relative strong residual are all at most
/// `tol`.
pub fn verify_critical(problem: &Problem, state: &SystemState, tol: f64) -> Result<SolveReport> {
    let started = Instant::now();
    let grid = problem.grid();
    let n = problem.rank();
    let energy = action(problem, state)?;
    let gradient = action_gradient(problem, state)?;
    let gradient_norm = dual_norm(grid, &gradient.fields);

    let residual = strong_residual(problem, &gradient);
    let rhs: Vec<ScalarField> = (0..n)
        .map(|i| grid.laplacian(&state.w[i]).sub(&residual[i]))
        .collect();
    let rhs_norm = dot(grid, &rhs, &rhs).sqrt();
    let relative_strong_residual = dot(grid, &residual, &residual).sqrt() / rhs_norm.max(1.0);
    let rhs_integrals = rhs.iter().map(|f| grid.integrate(f)).collect();

    let flux = flux_residuals(problem, state)?;
    let b = problem.offsets();
    let relative_flux_residuals: Vec<f64> =
        flux.iter().zip(b).map(|(f, bj)| f.abs() / bj).collect();
    let worst_flux = relative_flux_residuals.iter().fold(0.0, |m: f64, x| m.max(*x));

    let ctx = problem.constraint_context(&state.w)?;
    let t: Vec<f64> = state.c.iter().map(|c| c.exp()).collect();
    let mut constraint_residual = 0.0f64;
    let mut branch = Vec::with_capacity(n);
    for j in 0..n {
        let r = ctx.weight(j);
        let q = ctx.q_tilde(&t, 1.0, j);
        let constant = b[j] / (problem.lambda() * r);
        let value = 2.0 * r * ctx.e2(j) * t[j] * t[j] - q * t[j] + constant;
        constraint_residual = constraint_residual.max(value.abs() / constant);
        branch.push(4.0 * r * ctx.e2(j) * t[j] > q);
    }

    let critical = gradient_norm <= tol && worst_flux <= tol && relative_strong_residual <= tol;
    Ok(SolveReport {
        label: "verification".into(),
        critical,
        tolerance: tol,
        lambda: problem.lambda(),
        lambda_multiple: problem.lambda() / problem.lambda_lower_bound(),
        energy,
        gradient_norm,
        relative_strong_residual,
        flux_residuals: flux,
        relative_flux_residuals,
        flux_integrals: flux_integrals(problem, state)?,
        rhs_integrals,
        summed_identity_residual: summed_identity_residual(problem, state)?,
        constraint_residual,
        branch,
        means: state.c.clone(),
        admissibility_ratios: ctx.admissibility_ratios(),
        c_hessian: dominance_certificate(&c_hessian(problem, state)?),
        iterations: 0,
        wall_time: started.elapsed().as_secs_f64(),
        state: state.clone(),
        history: Vec::new(),
    })
}

fn mean_zero(problem: &Problem, fields: &[ScalarField]) -> Vec<ScalarField> {
    fields
        .iter()
        .map(|f| problem.grid().mean_zero_project(f))
        .collect()
}

/// The reduced gradient `G − mean(G)`, which is the gradient of `J` by the
/// envelope property of `c₊`.
fn reduced_gradient(problem: &Problem, gradient: &Gradient) -> Vec<ScalarField> {
    mean_zero(problem, &gradient.fields)
}

/// Newton's method on `G(v) = 0` over the full fields, with MINRES inner
/// solves and backtracking on `⟨G, P⁻¹G⟩`.
fn newton_polish(
    problem: &Problem,
    start: SystemState,
    tolerance: f64,
    max_iters: usize,
    phase: &str,
    history: &mut Vec<ConvergenceRecord>,
) -> Result<(SystemState, usize)> {
    let grid = problem.grid();
    let mut state = start;
    let mut gradient = action_gradient(problem, &state)?;
    for iteration in 0..=max_iters {
        let norm = dual_norm(grid, &gradient.fields);
        let energy = action(problem, &state)?.total;
        history.push(ConvergenceRecord {
            phase: phase.into(),
            iteration,
            energy,
            gradient_norm: norm,
            step: 0.0,
        });
        if norm <= tolerance {
            return Ok((state, iteration));
        }
        if iteration == max_iters {
            break;
        }
        let lin = Linearization::new(problem, &state)?;
        let pre = Preconditioner::for_linearization(problem, &lin);
        let rhs = scale(&gradient.fields, -1.0);
        let pg = pre.apply(&gradient.fields);
        let merit = dot(grid, &gradient.fields, &pg);
        let forcing = merit.sqrt().min(1e-2).max(1e-12);
        let (delta, krylov) = minres(
            grid,
            |v| lin.apply(problem, v),
            |v| pre.apply(v),
            &rhs,
            forcing,
            400,
        );
        log::debug!(
            "{phase} newton {iteration}: |G| = {norm:.3e}, minres {} its, rel {:.1e}",
            krylov.iterations,
            krylov.relative_residual
        );
        let fields = state.fields();
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial = SystemState::from_fields(grid, &combine(&fields, alpha, &delta));
            if let Ok(g) = action_gradient(problem, &trial) {
                let m = dot(grid, &g.fields, &pre.apply(&g.fields));
                if m <= (1.0 - 1e-4 * alpha) * merit {
                    accepted = Some((trial, g));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, g)) = accepted else {
            return Err(Error::NonConvergence(format!(
                "{phase}: Newton line search failed at gradient norm {norm:.3e}"
            )));
        };
        if let Some(last) = history.last_mut() {
            last.step = alpha;
        }
        state = next;
        gradient = g;
    }
    Err(Error::NonConvergence(format!(
        "{phase}: Newton reached {max_iters} iterations"
    )))
}

/// Minimizes `J(w) = I(w + c₊(w))` from `w0` and returns the local minimum.
pub fn minimize_reduced(
    problem: &Problem,
    w0: &[ScalarField],
    opts: &MinimizeOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let started = Instant::now();
    let grid = problem.grid();
    let multiple = problem.lambda() / problem.lambda_lower_bound();
    if multiple < 4.0 {
        log::warn!(
            "λ = {multiple:.3}·λ₀: the minimizer may fail to lie inside the admissible set"
        );
    }
    let mut w = mean_zero(problem, w0);
    problem.constraint_context(&w)?.require_admissible()?;
    let (mut energy, mut state, _) = reduced_action(problem, &w, &opts.continuation)?;
    let mut history = Vec::new();

    let mut pre = Preconditioner::for_linearization(problem, &Linearization::new(problem, &state)?);
    let mut direction: Vec<ScalarField> = Vec::new();
    let mut previous: Option<(Vec<ScalarField>, Vec<ScalarField>, f64)> = None;
    let mut alpha = 1.0;
    let mut initial_norm = None;
    let mut iterations = 0;
    for iteration in 0..opts.max_iters {
        iterations = iteration;
        let gradient = reduced_gradient(problem, &action_gradient(problem, &state)?);
        let z = pre.apply(&gradient);
        let gz = dot(grid, &gradient, &z);
        let pnorm = gz.max(0.0).sqrt();
        let reference = *initial_norm.get_or_insert(pnorm);
        history.push(ConvergenceRecord {
            phase: "descent".into(),
            iteration,
            energy: energy.total,
            gradient_norm: dual_norm(grid, &gradient),
            step: alpha,
        });
        if pnorm <= opts.polish_ratio * reference || pnorm <= opts.gradient_tolerance {
            break;
        }
        let restart = iteration % 50 == 0;
        if restart && iteration > 0 {
            pre = Preconditioner::for_linearization(problem, &Linearization::new(problem, &state)?);
        }
        let beta = match (&previous, restart) {
            (Some((g_old, _, gz_old)), false) => {
                let diff = combine(&gradient, -1.0, g_old);
                (dot(grid, &diff, &z) / gz_old).max(0.0)
            }
            _ => 0.0,
        };
        direction = if beta > 0.0 {
            combine(&scale(&z, -1.0), beta, &direction)
        } else {
            scale(&z, -1.0)
        };
        let mut slope = dot(grid, &gradient, &direction);
        if slope >= 0.0 {
            direction = scale(&z, -1.0);
            slope = -gz;
        }
        previous = Some((gradient, z, gz));

        alpha = (alpha * 4.0).min(1.0);
        let mut breach = None;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = combine(&w, alpha, &direction);
            match problem.constraint_context(&trial) {
                Ok(ctx) => {
                    let ratios = ctx.admissibility_ratios();
                    let (j, worst) = ratios
                        .iter()
                        .copied()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("rank is at least one");
                    if worst > opts.admissibility_margin {
                        breach = Some((j + 1, worst));
                    } else if let Ok((e, s, _)) = reduced_action(problem, &trial, &opts.continuation)
                    {
                        if e.total <= energy.total + opts.armijo * alpha * slope {
                            accepted = Some((trial, e, s));
                            break;
                        }
                    }
                }
                Err(Error::Overflow { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= opts.backtrack;
        }
        match accepted {
            Some((trial, e, s)) => {
                let decrease = energy.total - e.total;
                w = trial;
                energy = e;
                state = s;
                if decrease <= 1e-15 * energy.total.abs() {
                    break;
                }
            }
            None => {
                if let Some((component, ratio)) = breach {
                    return Err(Error::AdmissibilityBreach { component, ratio });
                }
                log::debug!("line search stalled at iteration {iteration}; polishing");
                break;
            }
        }
    }
    log::info!(
        "descent finished after {iterations} iterations at J = {:.12e}",
        energy.total
    );
    let (state, newton_iterations) = newton_polish(
        problem,
        state,
        opts.gradient_tolerance,
        opts.max_newton,
        "newton",
        &mut history,
    )?;
    let mut report = verify_critical(problem, &state, opts.critical_tolerance)?;
    report.label = "local_minimum".into();
    report.iterations = iterations + newton_iterations;
    report.wall_time = started.elapsed().as_secs_f64();
    report.history = history;
    Ok(report)
}

/// Result of the translation search for the far endpoint.
#[derive(Clone, Debug)]
pub struct XiSelection {
    pub xi0: f64,
    pub endpoint: SystemState,
    pub energy: f64,
    /// `(ξ, I(v* − ξ𝟙))` for every tried translation.
    pub trials: Vec<(f64, f64)>,
}

/// Smallest `ξ₀` in `1, g, g², …` with `I(v* − ξ₀𝟙) < I(v*) − drop` and
/// `v* − ξ₀𝟙` farther than `δ` from `v*`.
pub fn select_xi0(
    problem: &Problem,
    vstar: &SystemState,
    opts: &MountainPassOptions,
) -> Result<XiSelection> {
    let base = action(problem, vstar)?.total;
    let n = problem.rank() as f64;
    let mut trials = Vec::new();
    let mut xi = 1.0;
    while xi <= opts.xi_cap {
        let endpoint = vstar.translated(xi);
        let energy = action(problem, &endpoint)?.total;
        trials.push((xi, energy));
        let distance = n * xi * problem.grid().area().sqrt();
        if energy < base - opts.energy_drop && distance > opts.delta {
            return Ok(XiSelection {
                xi0: xi,
                endpoint,
                energy,
                trials,
            });
        }
        xi *= opts.xi_growth;
    }
    Err(Error::XiCapExceeded(opts.xi_cap))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MountainPassOutcome {
    /// A critical point distinct from the minimum, above its level.
    SecondSolution,
    /// The path maximum stagnated at the level of the minimum: the minimum is
    /// not strict and the alternative of a degenerate minimizer holds.
    DegenerateMinimizer,
}

/// Energy of one path node at one recorded sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub sweep: usize,
    pub node: usize,
    pub arclength: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct MountainPassResult {
    pub outcome: MountainPassOutcome,
    pub report: SolveReport,
    /// The mountain-pass level `a₀`.
    pub level: f64,
    pub minimum_energy: f64,
    pub sweeps: usize,
    pub profile: Vec<ProfileRow>,
}

/// The path coordinate `ℓ(v) = Σ_j b_j c_j / Σ_j b_j`.
///
/// On each level set of `ℓ` the linear part of the action is constant, so the
/// action is bounded below there and every node has something to descend to.
struct LevelCoordinate {
    /// `L²` representation of `dℓ`: constant fields `b_j/(B|Ω|)`.
    representer: Vec<ScalarField>,
    weights: Vec<f64>,
}

impl LevelCoordinate {
    fn new(problem: &Problem) -> Self {
        let total: f64 = problem.offsets().iter().sum();
        let weights: Vec<f64> = problem.offsets().iter().map(|b| b / total).collect();
        let area = problem.grid().area();
        let representer = weights
            .iter()
            .map(|w| ScalarField::constant(problem.grid(), w / area))
            .collect();
        Self {
            representer,
            weights,
        }
    }

    fn value(&self, problem: &Problem, fields: &[ScalarField]) -> f64 {
        fields
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * problem.grid().mean(f))
            .sum()
    }
}

/// The action as a function of the means alone, the mean-zero parts held
/// fixed, without the Dirichlet term:
/// `(λ/2) ∫ (U − 1)ᵀ M (U − 1) + Σ b_j c_j` with `U_j = e^{c_j} f_j`.
struct MeanProfile {
    lambda: f64,
    area: f64,
    r: Vec<f64>,
    b: Vec<f64>,
    e1: Vec<f64>,
    e2: Vec<f64>,
    cross: Vec<f64>,
}

impl MeanProfile {
    fn new(problem: &Problem, ctx: &ConstraintContext) -> Self {
        let n = ctx.rank();
        Self {
            lambda: ctx.lambda(),
            area: problem.grid().area(),
            r: (0..n).map(|j| ctx.weight(j)).collect(),
            b: ctx.offsets().to_vec(),
            e1: (0..n).map(|j| ctx.e1(j)).collect(),
            e2: (0..n).map(|j| ctx.e2(j)).collect(),
            cross: (1..n).map(|j| ctx.cross(j - 1, j)).collect(),
        }
    }

    fn rank(&self) -> usize {
        self.r.len()
    }

    fn energy(&self, c: &[f64]) -> f64 {
        let n = self.rank();
        let t: Vec<f64> = c.iter().map(|x| x.exp()).collect();
        let mut quad = self.area * self.r.iter().sum::<f64>();
        for j in 0..n {
            quad += 2.0 * self.r[j] * self.r[j] * t[j] * t[j] * self.e2[j];
            quad -= 2.0 * self.r[j] * t[j] * self.e1[j];
            if j + 1 < n {
                quad -= 2.0 * self.r[j] * self.r[j + 1] * t[j] * t[j + 1] * self.cross[j];
            }
        }
        let linear: f64 = self.b.iter().zip(c).map(|(b, c)| b * c).sum();
        let e = 0.5 * self.lambda * quad + linear;
        if e.is_finite() {
            e
        } else {
            f64::INFINITY
        }
    }

    fn neighbour_sum(&self, t: &[f64], j: usize) -> f64 {
        let mut s = 0.0;
        if j > 0 {
            s += self.r[j - 1] * t[j - 1] * self.cross[j - 1];
        }
        if j + 1 < self.rank() {
            s += self.r[j + 1] * t[j + 1] * self.cross[j];
        }
        s
    }

    fn gradient(&self, c: &[f64]) -> DVector<f64> {
        let t: Vec<f64> = c.iter().map(|x| x.exp()).collect();
        DVector::from_fn(self.rank(), |j, _| {
            let r = self.r[j];
            self.lambda
                * r
                * t[j]
                * (2.0 * r * t[j] * self.e2[j] - self.neighbour_sum(&t, j) - self.e1[j])
                + self.b[j]
        })
    }

    fn hessian(&self, c: &[f64]) -> DMatrix<f64> {
        let n = self.rank();
        let t: Vec<f64> = c.iter().map(|x| x.exp()).collect();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let r = self.r[j];
            h[(j, j)] = self.lambda
                * r
                * t[j]
                * (4.0 * r * t[j] * self.e2[j] - self.neighbour_sum(&t, j) - self.e1[j]);
            if j + 1 < n {
                let off = -self.lambda * r * self.r[j + 1] * t[j] * t[j + 1] * self.cross[j];
                h[(j, j + 1)] = off;
                h[(j + 1, j)] = off;
            }
        }
        h
    }

    /// Local minimization on `{bᵀc = target}` by projected Newton with a
    /// Levenberg shift and bounded steps.
    fn minimize_on_level(&self, start: &[f64], target: f64) -> (Vec<f64>, f64) {
        let n = self.rank();
        let b = DVector::from_column_slice(&self.b);
        let bb = b.dot(&b);
        let mut c = DVector::from_column_slice(start);
        c += &b * ((target - b.dot(&c)) / bb);
        let project = |v: &DVector<f64>| v - &b * (b.dot(v) / bb);
        let mut energy = self.energy(c.as_slice());
        for _ in 0..200 {
            let g = project(&self.gradient(c.as_slice()));
            if g.norm() <= 1e-12 * (1.0 + self.b.iter().sum::<f64>()) {
                break;
            }
            let p = DMatrix::<f64>::identity(n, n) - &b * b.transpose() / bb;
            let h = &p * self.hessian(c.as_slice()) * &p;
            let eig = nalgebra::SymmetricEigen::new(h.clone());
            let lowest = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            let scale_h = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
            let shift = if lowest > 1e-8 * scale_h {
                0.0
            } else {
                1e-3 * scale_h - lowest
            };
            let shifted = h + DMatrix::<f64>::identity(n, n) * shift + &b * b.transpose();
            let Some(step) = shifted.lu().solve(&(-&g)) else {
                break;
            };
            let mut step = project(&step);
            let longest = step.amax();
            if longest > 2.0 {
                step *= 2.0 / longest;
            }
            let slope = g.dot(&step);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let trial = &c + &step * alpha;
                let e = self.energy(trial.as_slice());
                if e <= energy + 1e-4 * alpha * slope {
                    c = trial;
                    energy = e;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (c.iter().copied().collect(), energy)
    }

    /// Best local minimum on the level set over starts built from `anchor`:
    /// each nonempty subset of components is shifted uniformly to reach the
    /// level while the rest keep their anchor values.
    fn global_minimum_on_level(&self, current: &[f64], anchor: &[f64], target: f64) -> Vec<f64> {
        let n = self.rank();
        let mut best = self.minimize_on_level(current, target);
        for mask in 1..(1usize << n) {
            let moved: f64 = (0..n)
                .filter(|j| mask >> j & 1 == 1)
                .map(|j| self.b[j])
                .sum();
            let base: f64 = self.b.iter().zip(anchor).map(|(b, c)| b * c).sum();
            let shift = (target - base) / moved;
            let start: Vec<f64> = (0..n)
                .map(|j| anchor[j] + if mask >> j & 1 == 1 { shift } else { 0.0 })
                .collect();
            let candidate = self.minimize_on_level(&start, target);
            if candidate.1 < best.1 {
                best = candidate;
            }
        }
        best.0
    }
}

#[derive(Clone)]
struct PathNode {
    fields: Vec<ScalarField>,
    level: f64,
    energy: f64,
    gradient: Vec<ScalarField>,
    /// Lagrange multiplier of the level constraint, `dm/dσ` once relaxed.
    multiplier: f64,
    /// `(W^{1,2})*` norm of the gradient within the level set.
    level_norm: f64,
    step: f64,
    fixed: bool,
}

impl PathNode {
    fn new(
        problem: &Problem,
        coordinate: &LevelCoordinate,
        fields: Vec<ScalarField>,
        step: f64,
        fixed: bool,
    ) -> Result<Self> {
        let state = SystemState::from_fields(problem.grid(), &fields);
        let energy = action(problem, &state)?.total;
        let gradient = action_gradient(problem, &state)?.fields;
        let mut node = Self {
            level: coordinate.value(problem, &fields),
            fields,
            energy,
            gradient,
            multiplier: 0.0,
            level_norm: 0.0,
            step,
            fixed,
        };
        node.refresh_multiplier(problem, coordinate);
        Ok(node)
    }

    /// Multiplier `μ` minimizing `‖G − μ dℓ‖` in the dual norm, and that
    /// residual norm. The representer is constant, so the minimizer is the
    /// `L²` projection.
    fn refresh_multiplier(&mut self, problem: &Problem, coordinate: &LevelCoordinate) {
        let grid = problem.grid();
        let rep = &coordinate.representer;
        self.multiplier = dot(grid, &self.gradient, rep) / dot(grid, rep, rep);
        let projected = combine(&self.gradient, -self.multiplier, rep);
        self.level_norm = dual_norm(grid, &projected);
    }

    /// Replaces the means by the best minimum of the action over means on
    /// the node's level set, keeping the mean-zero parts.
    fn settle_means(
        &self,
        problem: &Problem,
        coordinate: &LevelCoordinate,
        anchor: &[f64],
    ) -> Result<Self> {
        if self.fixed {
            return Ok(self.clone());
        }
        let state = self.state(problem);
        let ctx = problem.constraint_context(&state.w)?;
        let profile = MeanProfile::new(problem, &ctx);
        let total: f64 = problem.offsets().iter().sum();
        let c = profile.global_minimum_on_level(&state.c, anchor, self.level * total);
        let candidate = SystemState { w: state.w, c };
        let energy = action(problem, &candidate)?.total;
        if energy >= self.energy {
            return Ok(self.clone());
        }
        let mut node = PathNode::new(problem, coordinate, candidate.fields(), self.step, false)?;
        node.level = self.level;
        Ok(node)
    }

    fn state(&self, problem: &Problem) -> SystemState {
        SystemState::from_fields(problem.grid(), &self.fields)
    }

    /// One preconditioned descent step inside the node's level set, with
    /// Armijo backtracking.
    fn relax(&self, problem: &Problem, coordinate: &LevelCoordinate) -> Result<Self> {
        if self.fixed {
            return Ok(self.clone());
        }
        let grid = problem.grid();
        let state = self.state(problem);
        let pre = Preconditioner::for_linearization(problem, &Linearization::new(problem, &state)?);
        let pg = pre.apply(&self.gradient);
        let pr = pre.apply(&coordinate.representer);
        let mu = coordinate.value(problem, &pg) / coordinate.value(problem, &pr);
        let direction = scale(&combine(&pg, -mu, &pr), -1.0);
        let slope = dot(grid, &self.gradient, &direction);
        if slope >= 0.0 {
            return Ok(self.clone());
        }
        let mut step = self.step;
        for _ in 0..40 {
            let trial = combine(&self.fields, step, &direction);
            let trial_state = SystemState::from_fields(grid, &trial);
            if let Ok(e) = action(problem, &trial_state) {
                if e.total <= self.energy + 1e-4 * step * slope {
                    let mut next = PathNode::new(problem, coordinate, trial, (step * 1.5).min(10.0), false)?;
                    next.level = self.level;
                    return Ok(next);
                }
            }
            step *= 0.5;
        }
        let mut stuck = self.clone();
        stuck.step = step;
        Ok(stuck)
    }
}

fn record_profile(
    metric: &Preconditioner,
    nodes: &[PathNode],
    sweep: usize,
    profile: &mut Vec<ProfileRow>,
) {
    let mut arclength = 0.0;
    for (i, node) in nodes.iter().enumerate() {
        if i > 0 {
            let diff = combine(&node.fields, -1.0, &nodes[i - 1].fields);
            arclength += metric.norm_squared(&diff).max(0.0).sqrt();
        }
        profile.push(ProfileRow {
            sweep,
            node: i,
            arclength,
            energy: node.energy,
        });
    }
}

fn top_node(nodes: &[PathNode]) -> usize {
    nodes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.energy.total_cmp(&b.1.energy))
        .map(|(i, _)| i)
        .expect("non-empty path")
}

/// Inserts a node between `i` and `i + 1` at the level where the secant of
/// the multipliers vanishes, interpolating the fields linearly.
fn insert_between(
    problem: &Problem,
    coordinate: &LevelCoordinate,
    nodes: &mut Vec<PathNode>,
    i: usize,
    step: f64,
) -> Result<()> {
    let (a, b) = (&nodes[i], &nodes[i + 1]);
    let theta = if !a.fixed && !b.fixed && a.multiplier * b.multiplier < 0.0 {
        (a.multiplier / (a.multiplier - b.multiplier)).clamp(0.1, 0.9)
    } else {
        0.5
    };
    let diff = combine(&b.fields, -1.0, &a.fields);
    let fields = combine(&a.fields, theta, &diff);
    let node = PathNode::new(problem, coordinate, fields, step, false)?;
    nodes.insert(i + 1, node);
    Ok(())
}

/// Mountain pass between the local minimum `vstar` and the low-energy point
/// `vhat`.
///
/// The straight segment is sampled at level sets of the weighted mean
/// `ℓ(v) = Σ b_j c_j / Σ b_j`. Each sweep moves every interior node one
/// preconditioned descent step inside its level set, which lowers the path
/// maximum without letting nodes escape along the unbounded directions. Once
/// the top node is relaxed, a node is inserted on the side where the level
/// multiplier `dm/dσ` says the maximum lies. The top node is then refined by
/// Newton's method.
pub fn mountain_pass(
    problem: &Problem,
    vstar: &SystemState,
    vhat: &SystemState,
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    opts.validate()?;
    let started = Instant::now();
    let grid = problem.grid();
    let minimum_energy = action(problem, vstar)?.total;
    let end_energy = action(problem, vhat)?.total;
    if end_energy >= minimum_energy - opts.energy_drop {
        return Err(Error::Config(format!(
            "endpoint energy {end_energy} is not below I(v*) − {}",
            opts.energy_drop
        )));
    }
    let coordinate = LevelCoordinate::new(problem);
    let metric = Preconditioner::new(problem, 1.0, 0.0);
    let start = vstar.fields();
    let span = combine(&vhat.fields(), -1.0, &start);
    let last = opts.path_nodes - 1;
    let mut nodes: Vec<PathNode> = (0..opts.path_nodes)
        .into_par_iter()
        .map(|i| {
            let fields = combine(&start, i as f64 / last as f64, &span);
            PathNode::new(problem, &coordinate, fields, opts.step, i == 0 || i == last)
        })
        .collect::<Result<_>>()?;
    let anchor = vstar.c.clone();
    nodes = nodes
        .par_iter()
        .map(|node| node.settle_means(problem, &coordinate, &anchor))
        .collect::<Result<_>>()?;

    let mut profile = Vec::new();
    let mut history = Vec::new();
    let mut handoff = None;
    let mut sweeps = 0;
    for sweep in 0..opts.max_sweeps {
        sweeps = sweep + 1;
        let top = top_node(&nodes);
        if sweep % opts.profile_every == 0 {
            record_profile(&metric, &nodes, sweep, &mut profile);
        }
        let top_norm = dual_norm(grid, &nodes[top].gradient);
        history.push(ConvergenceRecord {
            phase: "path".into(),
            iteration: sweep,
            energy: nodes[top].energy,
            gradient_norm: top_norm,
            step: nodes[top].step,
        });
        if sweep % 100 == 0 {
            log::info!(
                "sweep {sweep}: {} nodes, top {top} at I = {:.10e}, |G| = {top_norm:.3e}, level |G| = {:.3e}, μ = {:.3e}",
                nodes.len(),
                nodes[top].energy,
                nodes[top].level_norm,
                nodes[top].multiplier
            );
        }
        if top == 0 || top == nodes.len() - 1 {
            if nodes[top].energy <= minimum_energy + opts.level_margin {
                break;
            }
            return Err(Error::PathCollapse(format!(
                "path maximum sits at endpoint {top} at sweep {sweep}"
            )));
        }
        if top_norm <= opts.handoff_tolerance && nodes[top].level_norm <= opts.settle_tolerance {
            handoff = Some(top);
            record_profile(&metric, &nodes, sweep, &mut profile);
            break;
        }
        if nodes[top].level_norm <= opts.settle_tolerance && nodes.len() < opts.max_nodes {
            // σ decreases along the path, so a positive dm/dσ at the top puts
            // the maximum between the top and its predecessor.
            let side = if nodes[top].multiplier > 0.0 { top - 1 } else { top };
            insert_between(problem, &coordinate, &mut nodes, side, opts.step)?;
            nodes[side + 1] = nodes[side + 1].settle_means(problem, &coordinate, &anchor)?;
            continue;
        }
        let resettle = sweep % opts.mean_refresh == opts.mean_refresh - 1;
        let window = top - 1..=top + 1;
        nodes = nodes
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                if !window.contains(&i) {
                    return Ok(node.clone());
                }
                let node = node.relax(problem, &coordinate)?;
                if resettle {
                    node.settle_means(problem, &coordinate, &anchor)
                } else {
                    Ok(node)
                }
            })
            .collect::<Result<_>>()?;
    }
    let top = top_node(&nodes);
    if handoff.is_none() && (top == 0 || top == nodes.len() - 1) {
        let mut report = verify_critical(problem, vstar, opts.critical_tolerance)?;
        report.label = "degenerate_minimizer".into();
        report.wall_time = started.elapsed().as_secs_f64();
        report.history = history;
        return Ok(MountainPassResult {
            outcome: MountainPassOutcome::DegenerateMinimizer,
            report,
            level: minimum_energy,
            minimum_energy,
            sweeps,
            profile,
        });
    }
    if handoff.is_none() {
        log::warn!("path deformation used all {} sweeps; refining the top node", opts.max_sweeps);
        record_profile(&metric, &nodes, sweeps, &mut profile);
    }
    let candidate = nodes[top].state(problem);
    let (state, newton_iterations) = newton_polish(
        problem,
        candidate,
        opts.gradient_tolerance,
        opts.max_newton,
        "mountain_pass_newton",
        &mut history,
    )?;
    let level = action(problem, &state)?.total;
    let distance = state.h1_distance(vstar, grid);
    if (level - minimum_energy).abs() <= opts.level_margin && distance <= opts.delta {
        let mut report = verify_critical(problem, vstar, opts.critical_tolerance)?;
        report.label = "degenerate_minimizer".into();
        report.wall_time = started.elapsed().as_secs_f64();
        report.history = history;
        return Ok(MountainPassResult {
            outcome: MountainPassOutcome::DegenerateMinimizer,
            report,
            level,
            minimum_energy,
            sweeps,
            profile,
        });
    }
    if level <= minimum_energy + opts.level_margin || distance <= opts.delta {
        return Err(Error::PathCollapse(format!(
            "refined top node fell back to the minimum (I = {level}, distance {distance:.3e})"
        )));
    }
    let mut report = verify_critical(problem, &state, opts.critical_tolerance)?;
    report.label = "mountain_pass".into();
    report.iterations = sweeps + newton_iterations;
    report.wall_time = started.elapsed().as_secs_f64();
    report.history = history;
    Ok(MountainPassResult {
        outcome: MountainPassOutcome::SecondSolution,
        report,
        level,
        minimum_energy,
        sweeps,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::CartanData;
    use crate::torus::{Regularization, TorusGrid, Vortex, VortexSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(m: usize, lambda_multiple: f64) -> Problem {
        let grid = TorusGrid::square([1.0, 1.0], m).unwrap();
        let vs = VortexSet::new(
            [1.0, 1.0],
            vec![
                vec![Vortex {
                    position: [0.5, 0.5],
                    multiplicity: 1,
                }],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        let cartan = CartanData::new(3).unwrap();
        let lambda0 = cartan.lambda_lower_bound(&vs.counts(), 1.0).unwrap();
        Problem::new(cartan, grid, vs, lambda_multiple * lambda0, Regularization::Exact).unwrap()
    }

    fn zeros(p: &Problem) -> Vec<ScalarField> {
        vec![ScalarField::zeros(p.grid()); p.rank()]
    }

    fn small_random(p: &Problem, seed: u64, amp: f64) -> Vec<ScalarField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p.rank())
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random_range(-amp..amp), rng.random_range(-amp..amp));
                let phase: f64 = rng.random_range(0.0..6.2);
                ScalarField::from_fn(p.grid(), |x, y| {
                    let tau = 2.0 * std::f64::consts::PI;
                    a * (tau * x + phase).cos() + b * (tau * (x + 2.0 * y)).sin()
                })
            })
            .collect()
    }

    #[test]
    fn minimum_is_critical_with_quantized_fluxes() {
        let p = problem(32, 100.0);
        let report = minimize_reduced(&p, &zeros(&p), &MinimizeOptions::default()).unwrap();
        assert!(report.critical, "{report:?}");
        assert_eq!(report.label, "local_minimum");
        assert!(report.gradient_norm < 1e-6);
        for (r, b) in report.flux_residuals.iter().zip(p.offsets()) {
            assert!(r.abs() < 1e-6 * b);
        }
        for integral in &report.rhs_integrals {
            assert!(integral.abs() < 1e-8, "{integral}");
        }
        assert!(report.c_hessian.dominant && report.c_hessian.positive_definite);
        assert!(report.admissibility_ratios.iter().all(|r| *r < 1.0));
        assert!(report.branch.iter().all(|b| *b));
        assert!(report.constraint_residual < 1e-8);
        let grad = action_gradient(&p, &report.state).unwrap();
        for m in &grad.means {
            assert!(m.abs() < 1e-8, "{m}");
        }
        assert!(report.energy.potential < 1e-2 * p.lambda() * p.grid().area());
    }

    #[test]
    fn minimum_is_independent_of_the_start() {
        let p = problem(32, 100.0);
        let opts = MinimizeOptions::default();
        let a = minimize_reduced(&p, &zeros(&p), &opts).unwrap();
        let b = minimize_reduced(&p, &small_random(&p, 7, 0.2), &opts).unwrap();
        assert!(a.state.h1_distance(&b.state, p.grid()) < 1e-6);
    }

    #[test]
    fn random_state_is_not_critical() {
        let p = problem(32, 100.0);
        let w = small_random(&p, 3, 0.5);
        let state = SystemState {
            w,
            c: vec![0.1, -0.2, 0.05],
        };
        let report = verify_critical(&p, &state, 1e-6).unwrap();
        assert!(!report.critical);
        assert_eq!(report.label, "verification");
    }

    #[test]
    fn below_threshold_breaches_admissibility() {
        let p = problem(32, 0.5);
        match minimize_reduced(&p, &zeros(&p), &MinimizeOptions::default()) {
            Err(Error::AdmissibilityBreach { ratio, .. }) => assert!(ratio >= 1.0),
            other => panic!("expected AdmissibilityBreach, got {other:?}"),
        }
    }

    #[test]
    fn xi0_selection_postconditions() {
        let p = problem(32, 100.0);
        let vstar = minimize_reduced(&p, &zeros(&p), &MinimizeOptions::default())
            .unwrap()
            .state;
        let opts = MountainPassOptions::default();
        let sel = select_xi0(&p, &vstar, &opts).unwrap();
        let base = action(&p, &vstar).unwrap().total;
        assert!(sel.energy < base - opts.energy_drop);
        assert_eq!(sel.endpoint.w, vstar.w);
        for (c, c0) in sel.endpoint.c.iter().zip(&vstar.c) {
            assert!((c0 - c - sel.xi0).abs() < 1e-12);
        }
        assert!(sel.endpoint.h1_distance(&vstar, p.grid()) > opts.delta);
        for (xi, e) in &sel.trials[..sel.trials.len() - 1] {
            assert!(*xi < sel.xi0 && *e >= base - opts.energy_drop);
        }
        let mut xi = sel.xi0;
        for _ in 0..3 {
            xi *= 2.0;
            assert!(action(&p, &vstar.translated(xi)).unwrap().total < base - opts.energy_drop);
        }
    }

    #[test]
    fn tiny_cap_is_reported() {
        let p = problem(16, 100.0);
        let vstar = minimize_reduced(&p, &zeros(&p), &MinimizeOptions::default())
            .unwrap()
            .state;
        let opts = MountainPassOptions {
            xi_cap: 4.0,
            ..Default::default()
        };
        assert!(matches!(
            select_xi0(&p, &vstar, &opts),
            Err(Error::XiCapExceeded(_))
        ));
    }

    #[test]
    fn mountain_pass_finds_a_distinct_critical_point() {
        let p = problem(32, 100.0);
        let min = minimize_reduced(&p, &zeros(&p), &MinimizeOptions::default()).unwrap();
        let opts = MountainPassOptions::default();
        let sel = select_xi0(&p, &min.state, &opts).unwrap();
        let mp = mountain_pass(&p, &min.state, &sel.endpoint, &opts).unwrap();
        assert_eq!(mp.outcome, MountainPassOutcome::SecondSolution);
        assert!(mp.report.critical && mp.report.gradient_norm < 1e-6);
        assert!(mp.level > mp.minimum_energy + opts.level_margin);
        assert!(mp.report.state.h1_distance(&min.state, p.grid()) > opts.delta);
        for (a, b) in mp.report.flux_integrals.iter().zip(&min.flux_integrals) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0));
        }
        assert!(mp.report.rhs_integrals.iter().all(|x| x.abs() < 1e-8));
        let first = mp.profile.iter().filter(|r| r.sweep == 0);
        let top = first.clone().map(|r| r.energy).fold(f64::MIN, f64::max);
        let ends: Vec<f64> = first.map(|r| r.energy).collect();
        assert!(top > ends[0] && top > *ends.last().unwrap());
    }

    #[test]
    fn options_are_validated() {
        assert!(MinimizeOptions::default().validate().is_ok());
        assert!(MountainPassOptions::default().validate().is_ok());
        let bad = MinimizeOptions {
            armijo: 1.5,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = MinimizeOptions {
            gradient_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MountainPassOptions {
            path_nodes: 2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MountainPassOptions {
            xi_growth: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn options_round_trip_through_json() {
        let opts = MountainPassOptions::default();
        let back: MountainPassOptions =
            serde_json::from_str(&serde_json::to_string(&opts).unwrap()).unwrap();
        assert_eq!(opts, back);
        let opts = MinimizeOptions::default();
        let back: MinimizeOptions =
            serde_json::from_str(&serde_json::to_string(&opts).unwrap()).unwrap();
        assert_eq!(opts, back);
    }
}
