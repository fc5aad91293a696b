//! Solves an experiment's problem, runs its checks and writes the output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use rayon::prelude::*;

use halfspace_core::estimates::{
    abp_check, bernstein_quantity_check, gradient_bound_check, growth_lemma_check, harnack_quotient, holder_bound_check,
    oscillation_decay, poly_approx_check, schauder_ratio,
};
use halfspace_core::operators::{apply_l0, TransportVelocity};
use halfspace_core::solver::{random_positive_solution_ensemble, solve_ivbp, Forcing};
use halfspace_core::{EstimateReport, Grid, ParabolicCube, ScalarField, WeightedMeasure};

use crate::experiment::{CheckKind, CheckSpec, ExperimentSpec};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces the experiment's `seed`.
    pub seed: Option<u64>,
}

/// One check applied to one solution.
#[derive(Clone, Debug)]
pub enum Record {
    Report(EstimateReport),
    Failed(String),
}

impl Record {
    pub fn pass(&self) -> bool {
        matches!(self, Record::Report(r) if r.pass)
    }
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub kind: &'static str,
    pub records: Vec<Record>,
}

impl CheckOutcome {
    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass()).count()
    }

    pub fn pass(&self) -> bool {
        self.passed() == self.records.len()
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(CheckOutcome::pass)
    }
}

struct Solved {
    members: Vec<ScalarField>,
    residuals: Vec<f64>,
    /// Forcing in the `Lu − u_t = g` convention of the estimates.
    g: ScalarField,
    mu: WeightedMeasure,
}

fn estimate_forcing(forcing: &Forcing, grid: Arc<Grid>) -> halfspace_core::Result<ScalarField> {
    match forcing {
        Forcing::Zero => Ok(ScalarField::constant(grid, 0.0)),
        Forcing::Function(f) => ScalarField::sample(grid, |x, y, t| -f(x, y, t)),
        Forcing::Field(f) => Ok(f.scale(-1.0)),
    }
}

fn solve(spec: &ExperimentSpec, seed: u64) -> Result<Solved> {
    let grid = Arc::new(spec.grid.clone());
    let (members, residuals) = match spec.ensemble {
        Some(count) => {
            let members = random_positive_solution_ensemble(seed, count, &spec.problem.coeffs, grid.clone(), &spec.config)
                .with_context(|| format!("solving the ensemble of experiment {:?}", spec.name))?;
            (members, Vec::new())
        }
        None => {
            let sol = solve_ivbp(&spec.problem, grid.clone(), &spec.config)
                .with_context(|| format!("solving the problem of experiment {:?}", spec.name))?;
            (vec![sol.field], sol.residuals)
        }
    };
    let g = estimate_forcing(&spec.problem.forcing, grid)?;
    let mu = WeightedMeasure::new(spec.problem.coeffs.params().nu)?;
    Ok(Solved { members, residuals, g, mu })
}

fn with_cap(report: EstimateReport, cap: f64) -> EstimateReport {
    if cap.is_finite() {
        let m = cap - report.measured_constant;
        report.margin("max_constant", m)
    } else {
        report
    }
}

fn run_check(check: &CheckSpec, u: &ScalarField, solved: &Solved) -> halfspace_core::Result<EstimateReport> {
    let (g, mu) = (&solved.g, &solved.mu);
    let report = match &check.kind {
        CheckKind::Exact { solution, tol } => {
            let grid = u.grid();
            let n = grid.n();
            let err = (0..grid.len())
                .map(|i| {
                    let c = grid.coords(i);
                    (u.value(i) - solution(c[0] * c[0], &c[1..n], c[n])).abs()
                })
                .fold(0.0, f64::max);
            EstimateReport::new("exact", err, vec![("tol".into(), *tol)], err).margin("tol", tol - err)
        }
        CheckKind::Residual { tol } => {
            let res = solved.residuals.iter().copied().fold(0.0, f64::max);
            EstimateReport::new("residual", res, vec![("tol".into(), *tol)], res)
                .margin("tol", tol - res)
                .detail("steps", solved.residuals.len() as f64)
        }
        CheckKind::MaxPrinciple { tol } => {
            let sup = u.max().max(0.0);
            EstimateReport::new("max_principle", sup, vec![("tol".into(), *tol)], sup).margin("tol", tol - sup)
        }
        CheckKind::Abp { at, rho, y_norm, opts } => {
            let cube = ParabolicCube::q_rho(at.s0, &at.y0, at.t0, *rho)?.with_y_norm(*y_norm);
            abp_check(u, g, &cube, mu, opts)?
        }
        CheckKind::Harnack { at, rho, max_constant } => {
            with_cap(harnack_quotient(u, g, at.s0, &at.y0, at.t0, *rho, mu)?, *max_constant)
        }
        CheckKind::Oscillation { at, rho, levels, theta_max } => {
            oscillation_decay(u, &at.point()?, *rho, *levels, g, mu, *theta_max)?
        }
        CheckKind::Holder { at, r, rho, alpha } => holder_bound_check(u, g, &at.point()?, *r, *rho, mu, *alpha)?,
        CheckKind::Growth { at, rho, k_level, opts } => growth_lemma_check(u, g, &at.point()?, *rho, *k_level, mu, opts)?,
        CheckKind::PolyApprox { v, s_outer, radii } => {
            let l0f = apply_l0(TransportVelocity::new(*v)?, u)?;
            poly_approx_check(u, &l0f, *s_outer, radii)?
        }
        CheckKind::Schauder { v, r, alpha, max_constant } => {
            with_cap(schauder_ratio(u, TransportVelocity::new(*v)?, *r, *alpha)?, *max_constant)
        }
        CheckKind::Bernstein { v, a, opts } => bernstein_quantity_check(u, TransportVelocity::new(*v)?, *a, opts)?,
        CheckKind::Gradient { bound, r, gamma } => gradient_bound_check(u, *bound, *r, *gamma)?,
    };
    Ok(report)
}

/// Runs every check on every solution; checks run concurrently and results
/// come back in file order.
pub fn run_checks(spec: &ExperimentSpec, seed: u64) -> Result<RunSummary> {
    let solved = solve(spec, seed)?;
    let tasks: Vec<(usize, usize)> =
        (0..spec.checks.len()).flat_map(|c| (0..solved.members.len()).map(move |m| (c, m))).collect();
    let records: Vec<Record> = tasks
        .par_iter()
        .map(|&(c, m)| {
            let check = &spec.checks[c];
            match run_check(check, &solved.members[m], &solved) {
                Ok(r) => Record::Report(r.with_provenance(format!("{}/{} member {m}", spec.name, check.name))),
                Err(e) => Record::Failed(e.to_string()),
            }
        })
        .collect();
    let mut it = records.into_iter();
    let checks = spec
        .checks
        .iter()
        .map(|c| CheckOutcome {
            name: c.name.clone(),
            kind: c.kind.label(),
            records: it.by_ref().take(solved.members.len()).collect(),
        })
        .collect();
    Ok(RunSummary { experiment: spec.name.clone(), seed, checks })
}

fn summary_text(spec: &ExperimentSpec, summary: &RunSummary) -> String {
    let mut out = String::new();
    let grid = &spec.grid;
    let dims: Vec<String> = grid.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "experiment = {}", summary.experiment);
    let _ = writeln!(out, "seed = {}", summary.seed);
    let _ = writeln!(out, "grid = n={} nodes={}", grid.n(), dims.join("x"));
    let _ = writeln!(out, "coefficients = {}", spec.problem.coeffs.label());
    let _ = writeln!(out, "members = {}", spec.ensemble.unwrap_or(1));
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<24} {:<14} {:>8} {:>8}  status", "check", "kind", "records", "passed");
    let (mut total, mut passed) = (0, 0);
    for c in &summary.checks {
        let status = if c.pass() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{:<24} {:<14} {:>8} {:>8}  {status}", c.name, c.kind, c.records.len(), c.passed());
        total += c.records.len();
        passed += c.passed();
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "total_records = {total}");
    let _ = writeln!(out, "total_passed = {passed}");
    let _ = writeln!(out, "result = {}", if summary.pass() { "PASS" } else { "FAIL" });
    out
}

fn write_check(dir: &Path, outcome: &CheckOutcome) -> Result<()> {
    let mut text = String::new();
    let mut json = String::new();
    // series name -> (labels, blocks)
    let mut series: Vec<(String, String, String)> = Vec::new();
    for (m, record) in outcome.records.iter().enumerate() {
        let _ = writeln!(text, "[record {m}]");
        match record {
            Record::Report(r) => {
                text.push_str(&r.to_text());
                json.push_str(&r.to_json());
                for s in &r.series {
                    let idx = match series.iter().position(|e| e.0 == s.name) {
                        Some(i) => i,
                        None => {
                            let header = format!("# {} {}\n", s.x_label, s.y_label);
                            series.push((s.name.clone(), header, String::new()));
                            series.len() - 1
                        }
                    };
                    let body = &mut series[idx].2;
                    let _ = writeln!(body, "# member {m}");
                    for (x, y) in &s.points {
                        let _ = writeln!(body, "{x:.12e} {y:.12e}");
                    }
                    body.push('\n');
                }
            }
            Record::Failed(msg) => {
                let _ = writeln!(text, "error = {msg}");
                let _ = writeln!(text, "pass = false");
                json.push_str(&serde_json::json!({ "name": outcome.kind, "error": msg, "pass": false }).to_string());
            }
        }
        text.push('\n');
        json.push('\n');
    }
    fs::write(dir.join(format!("{}.report.txt", outcome.name)), text)?;
    fs::write(dir.join(format!("{}.records", outcome.name)), json)?;
    for (name, header, body) in series {
        fs::write(dir.join(format!("{}.{name}.dat", outcome.name)), header + &body)?;
    }
    Ok(())
}

/// Solves, checks and writes `summary.txt`, `<check>.report.txt`,
/// `<check>.records` and `<check>.<series>.dat` into `opts.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    let seed = opts.seed.unwrap_or(spec.seed);
    let summary = run_checks(spec, seed)?;
    fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    for outcome in &summary.checks {
        write_check(&opts.out_dir, outcome).with_context(|| format!("writing the output of check {:?}", outcome.name))?;
    }
    fs::write(opts.out_dir.join("summary.txt"), summary_text(spec, &summary))?;
    Ok(summary)
}
