//! Configuration, orchestration and artifact emission behind `cshsolve`.
//!
//! A run reads a JSON [`RunConfig`], applies command-line overrides, and
//! writes `report.json` plus CSV artifacts into the output directory. Every
//! artifact carries the SHA-256 hash of the effective configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::cartan::CartanData;
use crate::constraint::{sweep_patterns, ContinuationOptions, PatternRow};
use crate::energy::{Problem, SystemState};
use crate::error::{Error, Result};
use crate::solver::{
    minimize_reduced, mountain_pass, select_xi0, verify_critical, ConvergenceRecord,
    MinimizeOptions, MountainPassOptions, MountainPassOutcome, SolveReport,
};
use crate::torus::{
    random_smooth_field, read_field_csv, write_field_csv, FieldHeader, Regularization,
    ScalarField, TorusGrid, Vortex, VortexSet,
};
use crate::tridiag::{audit, AuditOptions};

#[derive(Debug, Parser)]
#[command(name = "cshsolve", version, about = "Doubly periodic SU(N+1) Chern-Simons-Higgs solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Coupling as a multiple of the threshold λ₀; overrides the config.
    #[arg(long, global = true)]
    pub lambda_multiple: Option<f64>,
    /// Grid points per period direction; overrides the config.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Local minimum of the reduced functional.
    SolveMin,
    /// Second solution by the mountain pass from the local minimum.
    SolveMp,
    /// Randomized audit of the tri-diagonal determinant calculus.
    AppendixCheck,
    /// All sign patterns of the mean-value constraint on random fields.
    ConstraintSweep,
    /// Criticality diagnostics of a stored state.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveMin => "solve-min",
            Command::SolveMp => "solve-mp",
            Command::AppendixCheck => "appendix-check",
            Command::ConstraintSweep => "constraint-sweep",
            Command::Verify => "verify",
        }
    }
}

/// Random-field parameters of the constraint sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub samples: usize,
    /// Sup norm of each random mean-zero field.
    pub amplitude: f64,
    pub modes: i32,
    /// Relative size of the Newton restarts used for the uniqueness check.
    pub spread: f64,
    pub continuation: ContinuationOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: 5,
            amplitude: 0.5,
            modes: 3,
            spread: 0.05,
            continuation: ContinuationOptions::default(),
        }
    }
}

/// Input of every command.
///
/// Vortex positions are period-relative, in `[0, 1)²`. Exactly one of
/// `lambda` and `lambda_multiple` must be present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_multiple: Option<f64>,
    #[serde(default = "unit_periods")]
    pub periods: [f64; 2],
    pub resolution: usize,
    /// One list per component.
    pub vortices: Vec<Vec<Vortex>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub regularization: Regularization,
    /// Directory with a stored state (`v_1.csv`, …) for `solve-mp` and
    /// `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<PathBuf>,
    #[serde(default)]
    pub minimize: MinimizeOptions,
    #[serde(default)]
    pub mountain_pass: MountainPassOptions,
    #[serde(default)]
    pub appendix: AuditOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
}

fn unit_periods() -> [f64; 2] {
    [1.0, 1.0]
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidRank(0));
        }
        if self.vortices.len() != self.rank {
            return Err(Error::Config(format!(
                "{} vortex lists for rank {}",
                self.vortices.len(),
                self.rank
            )));
        }
        for v in self.vortices.iter().flatten() {
            if !v.position.iter().all(|x| (0.0..1.0).contains(x)) {
                return Err(Error::Config(format!(
                    "vortex position {:?} is outside [0, 1)²",
                    v.position
                )));
            }
        }
        match (self.lambda, self.lambda_multiple) {
            (Some(x), None) | (None, Some(x)) if x > 0.0 && x.is_finite() => {}
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either lambda or lambda_multiple".into()))
            }
            (None, None) => return Err(Error::Config("lambda is missing".into())),
            _ => return Err(Error::Config("lambda must be positive".into())),
        }
        if !self.periods.iter().all(|p| *p > 0.0 && p.is_finite()) {
            return Err(Error::Config("periods must be positive".into()));
        }
        if self.resolution < 4 {
            return Err(Error::Config("resolution must be at least 4".into()));
        }
        self.minimize.validate()?;
        self.mountain_pass.validate()
    }

    /// Applies the command-line overrides and revalidates.
    pub fn with_overrides(
        mut self,
        lambda_multiple: Option<f64>,
        resolution: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if let Some(x) = lambda_multiple {
            self.lambda = None;
            self.lambda_multiple = Some(x);
        }
        if let Some(m) = resolution {
            self.resolution = m;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::square(self.periods, self.resolution)
    }

    pub fn vortex_set(&self) -> Result<VortexSet> {
        let [l1, l2] = self.periods;
        let components = self
            .vortices
            .iter()
            .map(|list| {
                list.iter()
                    .map(|v| Vortex {
                        position: [v.position[0] * l1, v.position[1] * l2],
                        multiplicity: v.multiplicity,
                    })
                    .collect()
            })
            .collect();
        VortexSet::new(self.periods, components)
    }

    pub fn problem(&self) -> Result<Problem> {
        let grid = self.grid()?;
        let vortices = self.vortex_set()?;
        let cartan = CartanData::new(self.rank)?;
        let lambda0 = cartan.lambda_lower_bound(&vortices.counts(), grid.area())?;
        let lambda = match (self.lambda, self.lambda_multiple) {
            (Some(l), _) => l,
            (None, Some(m)) => m * lambda0,
            (None, None) => return Err(Error::Config("lambda is missing".into())),
        };
        Problem::new(cartan, grid, vortices, lambda, self.regularization)
    }
}

/// Process exit code of a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) | Error::InvalidRank(_) | Error::ZeroVortexCounts => 2,
        Error::InvalidGrid(_) | Error::CountLength { .. } => 2,
        Error::AdmissibilityBreach { .. } => 3,
        _ => 1,
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, summary: Vec<String>) -> Self {
        Self {
            exit_code: if passed { 0 } else { 1 },
            summary,
        }
    }
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let config = match &cli.config {
        Some(path) => Some(RunConfig::load(path)?.with_overrides(
            cli.lambda_multiple,
            cli.resolution,
            cli.seed,
        )?),
        None => None,
    };
    match (cli.command, config) {
        (Command::AppendixCheck, config) => {
            let (options, seed, hash) = match &config {
                Some(c) => (c.appendix, c.seed, c.hash()),
                None => (AuditOptions::default(), cli.seed.unwrap_or(0), String::new()),
            };
            cmd_appendix_check(&options, seed, &hash, config.as_ref(), &cli.out)
        }
        (_, None) => Err(Error::Config(format!(
            "{} needs --config",
            cli.command.name()
        ))),
        (Command::SolveMin, Some(c)) => cmd_solve_min(&c, &cli.out),
        (Command::SolveMp, Some(c)) => cmd_solve_mp(&c, &cli.out),
        (Command::ConstraintSweep, Some(c)) => cmd_constraint_sweep(&c, &cli.out),
        (Command::Verify, Some(c)) => cmd_verify(&c, &cli.out),
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("fields"))?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// A CSV file whose first line is a JSON header with the config hash.
fn write_csv(
    path: &Path,
    hash: &str,
    columns: &[&str],
    rows: impl IntoIterator<Item = String>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", json!({ "config_hash": hash, "columns": columns }))?;
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

fn write_convergence(path: &Path, hash: &str, history: &[ConvergenceRecord]) -> Result<()> {
    write_csv(
        path,
        hash,
        &["phase", "iteration", "energy", "gradient_norm", "step"],
        history.iter().map(|r| {
            format!(
                "{},{},{:e},{:e},{:e}",
                r.phase, r.iteration, r.energy, r.gradient_norm, r.step
            )
        }),
    )
}

/// Writes `prefix_1.csv`, … with the full fields `v_j = w_j + c_j`.
pub fn write_state(dir: &Path, prefix: &str, grid: &TorusGrid, state: &SystemState, hash: &str) -> Result<()> {
    for (j, field) in state.fields().iter().enumerate() {
        let header = FieldHeader {
            periods: grid.periods(),
            resolution: grid.resolution(),
            component: Some(j + 1),
            label: prefix.into(),
            config_hash: Some(hash.into()),
        };
        write_field_csv(&dir.join(format!("{prefix}_{}.csv", j + 1)), &header, field)?;
    }
    Ok(())
}

pub fn read_state(dir: &Path, prefix: &str, grid: &TorusGrid, rank: usize) -> Result<SystemState> {
    let mut fields: Vec<ScalarField> = Vec::with_capacity(rank);
    for j in 1..=rank {
        let path = dir.join(format!("{prefix}_{j}.csv"));
        let (header, field) = read_field_csv(&path)
            .map_err(|e| Error::Config(format!("cannot load {}: {e}", path.display())))?;
        if header.resolution != grid.resolution() {
            return Err(Error::Config(format!(
                "{} has resolution {:?}, the grid has {:?}",
                path.display(),
                header.resolution,
                grid.resolution()
            )));
        }
        fields.push(field);
    }
    Ok(SystemState::from_fields(grid, &fields))
}

fn describe(report: &SolveReport) -> String {
    format!(
        "{}: critical = {}, I = {:.10e}, |G| = {:.3e}, max flux residual / b = {:.3e}",
        report.label,
        report.critical,
        report.energy.total,
        report.gradient_norm,
        report
            .relative_flux_residuals
            .iter()
            .fold(0.0f64, |m, x| m.max(*x))
    )
}

fn envelope(command: Command, config: &RunConfig, problem: &Problem) -> serde_json::Value {
    json!({
        "command": command.name(),
        "config_hash": config.hash(),
        "config": config,
        "lambda": problem.lambda(),
        "lambda0": problem.lambda_lower_bound(),
    })
}

pub fn cmd_solve_min(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = config.problem()?;
    let hash = config.hash();
    let w0 = vec![ScalarField::zeros(problem.grid()); problem.rank()];
    let report = minimize_reduced(&problem, &w0, &config.minimize)?;
    prepare(out)?;
    let mut doc = envelope(Command::SolveMin, config, &problem);
    doc["report"] = serde_json::to_value(&report)?;
    write_json(&out.join("report.json"), &doc)?;
    write_state(&out.join("fields"), "v", problem.grid(), &report.state, &hash)?;
    write_convergence(&out.join("convergence.csv"), &hash, &report.history)?;
    Ok(Outcome::new(report.critical, vec![describe(&report)]))
}

pub fn cmd_solve_mp(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = config.problem()?;
    let hash = config.hash();
    let minimum = match &config.initial_state {
        Some(dir) => {
            let state = read_state(dir, "v", problem.grid(), problem.rank())?;
            let report = verify_critical(&problem, &state, config.minimize.critical_tolerance)?;
            if !report.critical {
                return Err(Error::Config(format!(
                    "stored state in {} is not critical",
                    dir.display()
                )));
            }
            report
        }
        None => minimize_reduced(
            &problem,
            &vec![ScalarField::zeros(problem.grid()); problem.rank()],
            &config.minimize,
        )?,
    };
    let opts = &config.mountain_pass;
    let selection = select_xi0(&problem, &minimum.state, opts)?;
    let result = mountain_pass(&problem, &minimum.state, &selection.endpoint, opts)?;
    prepare(out)?;
    let mut doc = envelope(Command::SolveMp, config, &problem);
    doc["outcome"] = serde_json::to_value(result.outcome)?;
    doc["level"] = json!(result.level);
    doc["minimum_energy"] = json!(result.minimum_energy);
    doc["sweeps"] = json!(result.sweeps);
    doc["xi0"] = json!(selection.xi0);
    doc["xi_trials"] = json!(selection.trials);
    doc["distance_from_minimum"] =
        json!(result.report.state.h1_distance(&minimum.state, problem.grid()));
    doc["minimum"] = serde_json::to_value(&minimum)?;
    doc["report"] = serde_json::to_value(&result.report)?;
    write_json(&out.join("report.json"), &doc)?;
    let fields = out.join("fields");
    write_state(&fields, "v", problem.grid(), &result.report.state, &hash)?;
    write_state(&fields, "minimum", problem.grid(), &minimum.state, &hash)?;
    write_convergence(&out.join("convergence.csv"), &hash, &result.report.history)?;
    write_csv(
        &out.join("path_profile.csv"),
        &hash,
        &["sweep", "node", "arclength", "energy"],
        result
            .profile
            .iter()
            .map(|r| format!("{},{},{:e},{:e}", r.sweep, r.node, r.arclength, r.energy)),
    )?;
    let mut summary = vec![
        describe(&minimum),
        format!("xi0 = {}", selection.xi0),
    ];
    let passed = match result.outcome {
        MountainPassOutcome::SecondSolution => {
            summary.push(describe(&result.report));
            summary.push(format!(
                "second solution at level {:.10e} above I(v*) = {:.10e}",
                result.level, result.minimum_energy
            ));
            result.report.critical
        }
        MountainPassOutcome::DegenerateMinimizer => {
            summary.push(format!(
                "path maximum stagnated at I(v*) = {:.10e}: degenerate minimizer",
                result.minimum_energy
            ));
            true
        }
    };
    Ok(Outcome::new(passed, summary))
}

pub fn cmd_appendix_check(
    options: &AuditOptions,
    seed: u64,
    hash: &str,
    config: Option<&RunConfig>,
    out: &Path,
) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = audit(options, &mut rng)?;
    prepare(out)?;
    write_json(
        &out.join("report.json"),
        &json!({
            "command": Command::AppendixCheck.name(),
            "config_hash": hash,
            "config": config,
            "options": options,
            "seed": seed,
            "rows": rows,
        }),
    )?;
    let mut summary = vec![format!(
        "{:<40} {:>8} {:>7} {:>8} {:>10}  result",
        "property", "checked", "failed", "skipped", "worst"
    )];
    for row in &rows {
        summary.push(format!(
            "{:<40} {:>8} {:>7} {:>8} {:>10.2e}  {}",
            row.property,
            row.checked,
            row.failed,
            row.skipped,
            row.worst,
            if row.passed() { "pass" } else { "FAIL" }
        ));
    }
    Ok(Outcome::new(rows.iter().all(|r| r.passed()), summary))
}

/// One sweep row tagged with its sample.
#[derive(Clone, Debug, Serialize)]
struct SampleRow {
    sample: usize,
    #[serde(flatten)]
    row: PatternRow,
}

pub fn cmd_constraint_sweep(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = config.problem()?;
    let hash = config.hash();
    let opts = &config.sweep;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    let mut rejected = 0;
    let mut sample = 0;
    while sample < opts.samples {
        let w: Vec<ScalarField> = (0..problem.rank())
            .map(|_| random_smooth_field(problem.grid(), &mut rng, opts.amplitude, opts.modes))
            .collect();
        let ctx = problem.constraint_context(&w)?;
        if !ctx.admissible() {
            rejected += 1;
            if rejected > 100 * opts.samples.max(1) {
                return Err(Error::Config(format!(
                    "random fields of amplitude {} are almost never admissible",
                    opts.amplitude
                )));
            }
            continue;
        }
        for row in sweep_patterns(&ctx, opts.spread, &opts.continuation)? {
            rows.push(SampleRow { sample, row });
        }
        sample += 1;
    }
    let failures = rows
        .iter()
        .filter(|r| !(r.row.steps_positive && r.row.jacobian_det > 0.0))
        .count();
    let non_unique = rows.iter().filter(|r| !r.row.unique).count();
    prepare(out)?;
    let mut doc = envelope(Command::ConstraintSweep, config, &problem);
    doc["rejected_samples"] = json!(rejected);
    doc["rows"] = serde_json::to_value(&rows)?;
    write_json(&out.join("report.json"), &doc)?;
    let n = problem.rank();
    let mut columns = vec!["sample".to_string(), "epsilon".to_string()];
    columns.extend((1..=n).map(|j| format!("t_{j}")));
    columns.extend(
        ["jacobian_det", "residual", "certified", "envelope_ok", "start_spread", "unique"]
            .map(String::from),
    );
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    write_csv(
        &out.join("sweep.csv"),
        &hash,
        &column_refs,
        rows.iter().map(|r| {
            let eps: String = r.row.epsilon.iter().map(|e| if *e { '1' } else { '0' }).collect();
            let t: Vec<String> = r.row.t.iter().map(|x| format!("{x:e}")).collect();
            format!(
                "{},{eps},{},{:e},{:e},{},{},{:e},{}",
                r.sample,
                t.join(","),
                r.row.jacobian_det,
                r.row.residual_norm,
                r.row.certified,
                r.row.envelope_ok,
                r.row.start_spread,
                r.row.unique
            )
        }),
    )?;
    let summary = vec![format!(
        "{} samples × {} patterns: {failures} nonpositive Jacobian determinants, {non_unique} non-unique, {rejected} inadmissible draws skipped",
        opts.samples,
        1usize << n
    )];
    Ok(Outcome::new(failures == 0, summary))
}

pub fn cmd_verify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let problem = config.problem()?;
    let dir = config
        .initial_state
        .clone()
        .unwrap_or_else(|| out.join("fields"));
    let state = read_state(&dir, "v", problem.grid(), problem.rank())?;
    let report = verify_critical(&problem, &state, config.minimize.critical_tolerance)?;
    prepare(out)?;
    let mut doc = envelope(Command::Verify, config, &problem);
    doc["state_dir"] = json!(dir);
    doc["report"] = serde_json::to_value(&report)?;
    write_json(&out.join("verify.json"), &doc)?;
    Ok(Outcome::new(report.critical, vec![describe(&report)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "rank": 3,
        "lambda_multiple": 100,
        "resolution": 16,
        "vortices": [[{"position": [0.5, 0.5], "multiplicity": 1}], [], []]
    }"#;

    #[test]
    fn round_trip_is_identity() {
        let config = RunConfig::from_json(SAMPLE).unwrap();
        let again = RunConfig::from_json(&config.to_json()).unwrap();
        assert_eq!(config, again);
        assert_eq!(config.to_json(), again.to_json());
        assert_eq!(config.hash(), again.hash());
        assert_eq!(config.hash().len(), 64);
    }

    #[test]
    fn overrides_replace_lambda_and_change_the_hash() {
        let config = RunConfig::from_json(SAMPLE).unwrap();
        let changed = config.clone().with_overrides(Some(0.5), Some(32), Some(9)).unwrap();
        assert_eq!(changed.lambda_multiple, Some(0.5));
        assert_eq!(changed.resolution, 32);
        assert_eq!(changed.seed, 9);
        assert_ne!(config.hash(), changed.hash());
        let problem = changed.problem().unwrap();
        assert!((problem.lambda() / problem.lambda_lower_bound() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let cases = [
            r#"{"rank": 3, "lambda": 1, "resolution": 16}"#,
            r#"{"rank": 3, "resolution": 16, "vortices": [[{"position": [0.5, 0.5], "multiplicity": 1}], [], []]}"#,
            r#"{"rank": 2, "lambda": 1, "resolution": 16, "vortices": [[{"position": [1.5, 0.5], "multiplicity": 1}], []]}"#,
            r#"{"rank": 2, "lambda": 1, "resolution": 16, "vortices": [[]]}"#,
            r#"{"rank": 2, "lambda": -1, "resolution": 16, "vortices": [[], [{"position": [0.1, 0.5], "multiplicity": 1}]]}"#,
            r#"{"rank": 2, "lambda": 1, "resolution": 16, "vortices": [[], []], "typo": 1}"#,
        ];
        for case in cases {
            let err = RunConfig::from_json(case).unwrap_err();
            assert_eq!(exit_code(&err), 2, "{case}: {err}");
        }
    }

    #[test]
    fn positions_are_period_relative() {
        let mut config = RunConfig::from_json(SAMPLE).unwrap();
        config.periods = [2.0, 3.0];
        let set = config.vortex_set().unwrap();
        assert_eq!(set.component(0)[0].position, [1.0, 1.5]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(
            exit_code(&Error::AdmissibilityBreach {
                component: 1,
                ratio: 1.2
            }),
            3
        );
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 1);
        assert_eq!(exit_code(&Error::PathCollapse("x".into())), 1);
    }
}
