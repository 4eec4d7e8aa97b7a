//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use csh_core::cartan::CartanData;
use csh_core::constraint::{c_plus, newton, sweep_patterns, ContinuationOptions};
use csh_core::energy::{
    action, action_gradient, c_hessian, dominance_certificate, dot, Problem, SystemState,
};
use csh_core::solver::{
    minimize_reduced, mountain_pass, select_xi0, MinimizeOptions, MountainPassOptions,
    MountainPassOutcome, SolveReport,
};
use csh_core::torus::{random_smooth_field, Regularization, ScalarField};
use csh_core::tridiag::{audit, AuditOptions};
use csh_core::Error;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion.
struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed < budget
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let mut failures = Vec::new();
    for n in 1..=12usize {
        let data = CartanData::new(n).unwrap();
        let k = data.cartan();
        let a = data.inverse();
        let one = Rational64::from(1);
        let zero = Rational64::from(0);
        for i in 0..n {
            for j in 0..n {
                let entry: Rational64 = (0..n).map(|l| Rational64::from(k[i][l]) * a[l][j]).sum();
                if entry != if i == j { one } else { zero } {
                    failures.push(format!("N={n}: (K·A)[{i}][{j}] = {entry}"));
                }
            }
        }
        let r = data.weights();
        let at = |j: usize| if j == 0 || j > n { zero } else { r[j - 1] };
        for j in 1..=n {
            if Rational64::from(2) * at(j) - at(j - 1) - at(j + 1) != one {
                failures.push(format!("N={n}: weight recurrence fails at j={j}"));
            }
        }
        let expected = Rational64::new((n * (n + 1) * (n + 2)) as i64, 12);
        if data.weight_sum() != expected {
            failures.push(format!("N={n}: Σr = {} ≠ {expected}", data.weight_sum()));
        }
        for (i, row) in data.interaction().iter().enumerate() {
            let sum: Rational64 = row.iter().copied().sum();
            if sum != r[i] {
                failures.push(format!("N={n}: (M𝟙)_{i} = {sum} ≠ r = {}", r[i]));
            }
        }
    }
    let elapsed = started.elapsed();
    let ok = failures.is_empty() && within(elapsed, Duration::from_secs(1));
    Verdict::new(
        ok,
        format!(
            "Cartan identities for N=1..12: {} exact mismatches, {:.3} s{}",
            failures.len(),
            elapsed.as_secs_f64(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = AuditOptions {
        samples: 10_000,
        max_size: 10,
        ..Default::default()
    };
    let rows = audit(&opts, &mut rng).unwrap();
    let elapsed = started.elapsed();
    let ok = rows.iter().all(|r| r.passed() && r.checked > 0)
        && within(elapsed, Duration::from_secs(30));
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {}/{} worst {:.1e}", r.property, r.checked - r.failed, r.checked, r.worst))
        .collect();
    Verdict::new(
        ok,
        format!(
            "determinant audit over 10⁴ samples, {:.2} s: {}",
            elapsed.as_secs_f64(),
            summary.join("; ")
        ),
    )
}

fn random_admissible_w(problem: &Problem, rng: &mut ChaCha8Rng) -> Vec<ScalarField> {
    for _ in 0..1000 {
        let w: Vec<ScalarField> = (0..problem.rank())
            .map(|_| random_smooth_field(problem.grid(), rng, 0.5, 3))
            .collect();
        if problem.constraint_context(&w).unwrap().admissible() {
            return w;
        }
    }
    panic!("no admissible random field in 1000 draws at λ = {}", problem.lambda());
}

fn criterion_3() -> Verdict {
    let started = Instant::now();
    let opts = ContinuationOptions::default();
    let problem = common::problem(3, 128, 10.0, Regularization::gaussian());
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst_residual = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut min_det = f64::INFINITY;
    let mut envelope = true;
    let mut reached = true;
    for _ in 0..20 {
        let ctx = problem.constraint_context(&random_admissible_w(&problem, &mut rng)).unwrap();
        let sol = c_plus(&ctx, &opts).unwrap();
        reached &= sol.s == 1.0;
        worst_residual = worst_residual.max(sol.residual_norm);
        min_det = sol.steps.iter().map(|s| s.jacobian_det).fold(min_det, f64::min);
        envelope &= sol.envelope_ok;
        for _ in 0..4 {
            let start: Vec<f64> = sol.t.iter().map(|t| t * rng.random_range(0.8..1.2)).collect();
            let spread = match newton(&ctx, &start, 1.0, &[true; 3], &opts) {
                Ok((t, _)) => max_of(t.iter().zip(&sol.t).map(|(a, b)| (a - b).abs())),
                Err(_) => f64::INFINITY,
            };
            worst_spread = worst_spread.max(spread);
        }
    }
    let mut sweep_ok = true;
    let mut sweep_rows = 0;
    let mut sweep_residual = 0.0f64;
    for n in 3..=5 {
        let problem = common::problem(n, 128, 20.0, Regularization::gaussian());
        for _ in 0..5 {
            let ctx = problem.constraint_context(&random_admissible_w(&problem, &mut rng)).unwrap();
            match sweep_patterns(&ctx, 0.1, &opts) {
                Ok(rows) => {
                    sweep_rows += rows.len();
                    for row in rows {
                        sweep_residual = sweep_residual.max(row.residual_norm);
                        sweep_ok &= row.steps_positive
                            && row.jacobian_det > 0.0
                            && row.unique
                            && row.residual_norm < 1e-12;
                    }
                }
                Err(_) => sweep_ok = false,
            }
        }
    }
    let elapsed = started.elapsed();
    let ok = reached
        && worst_residual < 1e-12
        && min_det > 0.0
        && worst_spread <= 1e-10
        && envelope
        && sweep_ok
        && sweep_rows == 5 * (8 + 16 + 32)
        && within(elapsed, Duration::from_secs(300));
    Verdict::new(
        ok,
        format!(
            "20 samples at 128², λ=10λ₀: residual ≤ {worst_residual:.1e}, min det J {min_det:.3}, \
             multi-start spread {worst_spread:.1e}, envelope {envelope}; sign sweep N=3,4,5 at 20λ₀: \
             {sweep_rows} rows ok {sweep_ok} (residual ≤ {sweep_residual:.1e}); {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let problem = common::problem(3, 64, 20.0, Regularization::gaussian());
    let mut worst_gradient = 0.0f64;
    for _ in 0..5 {
        let w: Vec<ScalarField> = (0..3)
            .map(|_| random_smooth_field(problem.grid(), &mut rng, 0.5, 3))
            .collect();
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.3)).collect();
        let state = SystemState { w, c };
        let fields = state.fields();
        let gradient = action_gradient(&problem, &state).unwrap();
        for _ in 0..20 {
            let phi: Vec<ScalarField> = (0..3)
                .map(|_| {
                    random_smooth_field(problem.grid(), &mut rng, 1.0, 4)
                        .add_constant(rng.random_range(-0.5..0.5))
                })
                .collect();
            let h = 1e-5;
            let energy = |s: f64| {
                let v: Vec<ScalarField> = fields
                    .iter()
                    .zip(&phi)
                    .map(|(a, b)| {
                        let mut out = a.clone();
                        out.axpy(s, b);
                        out
                    })
                    .collect();
                action(&problem, &SystemState::from_fields(problem.grid(), &v)).unwrap().total
            };
            let fd = (energy(h) - energy(-h)) / (2.0 * h);
            let exact = dot(problem.grid(), &gradient.fields, &phi);
            worst_gradient = worst_gradient.max((fd - exact).abs() / exact.abs());
        }
    }
    let mut worst_mean = 0.0f64;
    let mut hessian_ok = true;
    let mut min_margin = f64::INFINITY;
    for n in 3..=5 {
        let problem = common::problem(n, 64, 20.0, Regularization::gaussian());
        for _ in 0..5 {
            let w = random_admissible_w(&problem, &mut rng);
            let ctx = problem.constraint_context(&w).unwrap();
            let c = c_plus(&ctx, &ContinuationOptions::default()).unwrap().means();
            let state = SystemState { w, c };
            let means = action_gradient(&problem, &state).unwrap().means;
            worst_mean = worst_mean.max(max_of(means.iter().map(|m| m.abs())));
            let cert = dominance_certificate(&c_hessian(&problem, &state).unwrap());
            hessian_ok &= cert.dominant && cert.positive_definite;
            min_margin = cert.row_margins.iter().copied().fold(min_margin, f64::min);
        }
    }
    let elapsed = started.elapsed();
    let ok = worst_gradient < 1e-5
        && worst_mean < 1e-8
        && hessian_ok
        && within(elapsed, Duration::from_secs(120));
    Verdict::new(
        ok,
        format!(
            "gradient vs central differences (20 directions × 5 states) worst relative error \
             {worst_gradient:.1e}; |∂I/∂c| at c₊ ≤ {worst_mean:.1e}; c-Hessian dominant and \
             positive definite for N=3,4,5: {hessian_ok} (min row margin {min_margin:.3e}); {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// The reference configuration: SU(4), one vortex in the first component,
/// unit torus, λ = 100λ₀.
fn reference_problem(m: usize) -> Problem {
    common::problem(3, m, 100.0, Regularization::Exact)
}

fn solve_minimum(problem: &Problem) -> (Result<SolveReport, Error>, Duration) {
    let started = Instant::now();
    let zero = vec![ScalarField::zeros(problem.grid()); problem.rank()];
    let report = minimize_reduced(problem, &zero, &MinimizeOptions::default());
    (report, started.elapsed())
}

fn criterion_5(problem: &Problem, minimum: &Result<SolveReport, Error>, elapsed: Duration) -> Verdict {
    let report = match minimum {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, format!("minimize_reduced failed: {e}")),
    };
    let fluxes_ok = report
        .flux_residuals
        .iter()
        .zip(problem.offsets())
        .all(|(r, b)| r.abs() < 1e-6 * b);
    let ok = report.critical
        && report.tolerance == 1e-6
        && fluxes_ok
        && report.c_hessian.dominant
        && report.c_hessian.positive_definite
        && within(elapsed, Duration::from_secs(600));
    Verdict::new(
        ok,
        format!(
            "128², λ=100λ₀: critical {} at tol 1e-6, I = {:.8}, |G| = {:.1e}, flux residual / b ≤ {:.1e}, \
             c-Hessian dominant {} (min margin {:.3e}); {:.2} s",
            report.critical,
            report.energy.total,
            report.gradient_norm,
            max_of(report.relative_flux_residuals.iter().copied()),
            report.c_hessian.dominant,
            report.c_hessian.row_margins.iter().copied().fold(f64::INFINITY, f64::min),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6(problem: &Problem, minimum: &Result<SolveReport, Error>) -> Verdict {
    let Ok(minimum) = minimum else {
        return Verdict::new(false, "no minimum to start from");
    };
    let started = Instant::now();
    let opts = MountainPassOptions::default();
    let selection = match select_xi0(problem, &minimum.state, &opts) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, format!("select_xi0 failed: {e}")),
    };
    let result = match mountain_pass(problem, &minimum.state, &selection.endpoint, &opts) {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, format!("mountain_pass failed: {e}")),
    };
    let elapsed = started.elapsed();
    let in_time = within(elapsed, Duration::from_secs(1800));
    match result.outcome {
        MountainPassOutcome::DegenerateMinimizer => Verdict::new(
            in_time,
            format!(
                "ξ₀ = {}; path stagnated at I(v*) = {:.8}: degenerate minimizer reported; {:.1} s",
                selection.xi0,
                result.minimum_energy,
                elapsed.as_secs_f64()
            ),
        ),
        MountainPassOutcome::SecondSolution => {
            let report = &result.report;
            let distance = report.state.h1_distance(&minimum.state, problem.grid());
            let flux_gap = max_of(
                report
                    .flux_integrals
                    .iter()
                    .zip(&minimum.flux_integrals)
                    .map(|(a, b)| (a - b).abs()),
            );
            let ok = report.critical
                && report.gradient_norm < 1e-6
                && result.level > result.minimum_energy
                && distance > 1e-3
                && flux_gap < 1e-6
                && in_time;
            Verdict::new(
                ok,
                format!(
                    "ξ₀ = {}; second solution critical {}, |G| = {:.1e}, a₀ = {:.8} > I(v*) = {:.8}, \
                     H¹ distance {:.4}, flux integral gap {:.1e}, means {:?}; {:.1} s",
                    selection.xi0,
                    report.critical,
                    report.gradient_norm,
                    result.level,
                    result.minimum_energy,
                    distance,
                    flux_gap,
                    report.means,
                    elapsed.as_secs_f64()
                ),
            )
        }
    }
}

fn criterion_7() -> Verdict {
    let started = Instant::now();
    let problem = common::problem(3, 128, 0.5, Regularization::gaussian());
    let zero = vec![ScalarField::zeros(problem.grid()); 3];
    let ratios = problem.constraint_context(&zero).unwrap().admissibility_ratios();
    let inadmissible = ratios.iter().any(|r| *r >= 1.0);
    let library = matches!(
        minimize_reduced(&problem, &zero, &MinimizeOptions::default()),
        Err(Error::AdmissibilityBreach { .. })
    );
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, common::SU4_CONFIG).unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_cshsolve"))
        .args(["solve-min", "--config", config.to_str().unwrap(), "--lambda-multiple", "0.5"])
        .args(["--resolution", "128", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    let code = output.status.code();
    let elapsed = started.elapsed();
    let ok = inadmissible && library && code == Some(3) && within(elapsed, Duration::from_secs(60));
    Verdict::new(
        ok,
        format!(
            "λ = 0.5λ₀, w = 0: admissibility ratios {ratios:.3?}, library AdmissibilityBreach {library}, \
             solve-min exit code {code:?}; {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8(fine: &Result<SolveReport, Error>, fine_time: Duration) -> Verdict {
    let Ok(fine) = fine else {
        return Verdict::new(false, "no 128² minimum");
    };
    let problem = reference_problem(64);
    let (coarse, coarse_time) = solve_minimum(&problem);
    let coarse = match coarse {
        Ok(r) => r,
        Err(e) => return Verdict::new(false, format!("64² minimization failed: {e}")),
    };
    let relative = (coarse.energy.total - fine.energy.total).abs() / fine.energy.total.abs();
    let flux_gap = max_of(
        coarse
            .flux_integrals
            .iter()
            .zip(&fine.flux_integrals)
            .map(|(a, b)| (a - b).abs()),
    );
    let elapsed = coarse_time + fine_time;
    let ok = relative < 1e-2 && flux_gap < 1e-5 && within(elapsed, Duration::from_secs(900));
    Verdict::new(
        ok,
        format!(
            "I(64²) = {:.8}, I(128²) = {:.8}, relative difference {relative:.2e}, flux integral gap \
             {flux_gap:.1e}; {:.2} s",
            coarse.energy.total,
            fine.energy.total,
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let mut verdicts = Vec::new();
    let mut report = |k: usize, verdict: Verdict| {
        println!(
            "criterion {k} [{}]: {}",
            if verdict.passed { "PASS" } else { "FAIL" },
            verdict.detail
        );
        verdicts.push(verdict.passed);
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    let problem = reference_problem(128);
    let (minimum, minimum_time) = solve_minimum(&problem);
    report(5, criterion_5(&problem, &minimum, minimum_time));
    report(6, criterion_6(&problem, &minimum));
    report(7, criterion_7());
    report(8, criterion_8(&minimum, minimum_time));
    let failed = verdicts.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
