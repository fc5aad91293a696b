//! Experiment files: the problem sections of the core format plus
//! `[experiment]`, an optional `[ensemble]` and one `[check.NAME]` per check.
//!
//! ```text
//! [experiment]
//! name = model_manufactured
//! seed = 1
//!
//! [check.exact]
//! kind = exact
//! solution = x + t
//! tol = 1e-10
//! ```

use halfspace_core::estimates::{AbpOptions, BernsteinOptions, ContactSide, GrowthOptions};
use halfspace_core::operators::StFn;
use halfspace_core::solver::file::{expr_fn, parse_grid, parse_problem, parse_solver, Entry, KvDocument, Section};
use halfspace_core::solver::{IvbProblem, SolverConfig};
use halfspace_core::{Error, Grid, Result, SPoint, YNorm};

/// Where a check sits and what it measures.
#[derive(Clone, Debug)]
pub struct Locator {
    pub s0: f64,
    pub y0: Vec<f64>,
    pub t0: f64,
}

impl Locator {
    pub fn point(&self) -> Result<SPoint> {
        SPoint::new(self.s0, self.y0.clone(), self.t0)
    }
}

#[derive(Clone)]
pub enum CheckKind {
    /// Max error against a closed-form solution.
    Exact { solution: StFn, tol: f64 },
    /// Max implicit-step residual reported by the solver.
    Residual { tol: f64 },
    /// `sup u⁺ ≤ tol`.
    MaxPrinciple { tol: f64 },
    Abp { at: Locator, rho: f64, y_norm: YNorm, opts: AbpOptions },
    Harnack { at: Locator, rho: f64, max_constant: f64 },
    Oscillation { at: Locator, rho: f64, levels: usize, theta_max: f64 },
    Holder { at: Locator, r: f64, rho: f64, alpha: f64 },
    Growth { at: Locator, rho: f64, k_level: f64, opts: GrowthOptions },
    PolyApprox { v: f64, s_outer: f64, radii: Vec<f64> },
    Schauder { v: f64, r: f64, alpha: f64, max_constant: f64 },
    Bernstein { v: f64, a: f64, opts: BernsteinOptions },
    Gradient { bound: f64, r: f64, gamma: f64 },
}

impl CheckKind {
    pub fn label(&self) -> &'static str {
        match self {
            CheckKind::Exact { .. } => "exact",
            CheckKind::Residual { .. } => "residual",
            CheckKind::MaxPrinciple { .. } => "max_principle",
            CheckKind::Abp { .. } => "abp",
            CheckKind::Harnack { .. } => "harnack",
            CheckKind::Oscillation { .. } => "oscillation",
            CheckKind::Holder { .. } => "holder",
            CheckKind::Growth { .. } => "growth",
            CheckKind::PolyApprox { .. } => "poly_approx",
            CheckKind::Schauder { .. } => "schauder",
            CheckKind::Bernstein { .. } => "bernstein",
            CheckKind::Gradient { .. } => "gradient",
        }
    }
}

#[derive(Clone)]
pub struct CheckSpec {
    pub name: String,
    pub kind: CheckKind,
    pub line: usize,
}

#[derive(Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    /// Number of random positive solutions; `None` solves the `[problem]` once.
    pub ensemble: Option<usize>,
    pub grid: Grid,
    pub problem: IvbProblem,
    pub config: SolverConfig,
    pub checks: Vec<CheckSpec>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn required_f64(section: &Section, key: &str) -> Result<f64> {
    section.require(key)?;
    Ok(section.f64(key)?.expect("checked above"))
}

fn usize_or(section: &Section, key: &str, default: usize) -> Result<usize> {
    Ok(section.u64_or(key, default as u64)? as usize)
}

fn locator(section: &Section, n: usize) -> Result<Locator> {
    let y0 = section.f64_list("y0")?.unwrap_or_else(|| vec![0.0; n - 1]);
    if y0.len() != n - 1 {
        let line = section.get("y0").map_or(section.line, |e| e.line);
        return Err(parse_err(line, format!("y0 needs {} entries, got {}", n - 1, y0.len())));
    }
    Ok(Locator { s0: required_f64(section, "s0")?, y0, t0: required_f64(section, "t0")? })
}

fn model_velocity(section: &Section, problem: &IvbProblem) -> Result<f64> {
    match section.f64("v")? {
        Some(v) => Ok(v),
        None => problem
            .coeffs
            .as_model()
            .ok_or_else(|| parse_err(section.line, format!("[{}] needs v: the coefficients are not a model operator", section.name))),
    }
}

fn parse_check(section: &Section, name: &str, n: usize, problem: &IvbProblem, ensemble: bool) -> Result<CheckKind> {
    let kind = section.require("kind")?;
    let line = kind.line;
    let allow = |extra: &[&str]| {
        let mut keys = vec!["kind"];
        keys.extend_from_slice(extra);
        section.check_keys(&keys)
    };
    let single_only = || {
        if ensemble {
            Err(parse_err(line, format!("check {name:?} of kind {:?} needs a single solution, not an ensemble", kind.value)))
        } else {
            Ok(())
        }
    };
    let check = match kind.value.as_str() {
        "exact" => {
            allow(&["solution", "tol"])?;
            single_only()?;
            let solution = expr_fn(section, "solution", n, &[])?
                .ok_or_else(|| parse_err(section.line, format!("[{}] needs solution", section.name)))?;
            CheckKind::Exact { solution, tol: section.f64_or("tol", 1e-10)? }
        }
        "residual" => {
            allow(&["tol"])?;
            single_only()?;
            CheckKind::Residual { tol: section.f64_or("tol", 1e-8)? }
        }
        "max_principle" => {
            allow(&["tol"])?;
            CheckKind::MaxPrinciple { tol: section.f64_or("tol", 1e-12)? }
        }
        "abp" => {
            allow(&["s0", "y0", "t0", "rho", "y_norm", "c_max", "side", "boundary_tol"])?;
            let y_norm = match section.str_or("y_norm", "euclidean") {
                "euclidean" => YNorm::Euclidean,
                "max" => YNorm::Max,
                other => return Err(parse_err(section.get("y_norm").map_or(line, |e| e.line), format!("unknown y_norm {other:?}"))),
            };
            let side = match section.str_or("side", "plus") {
                "plus" => ContactSide::Plus,
                "minus" => ContactSide::Minus,
                other => return Err(parse_err(section.get("side").map_or(line, |e| e.line), format!("unknown side {other:?}"))),
            };
            let d = AbpOptions::default();
            let opts = AbpOptions {
                c_max: section.f64_or("c_max", d.c_max)?,
                side,
                boundary_tol: section.f64_or("boundary_tol", d.boundary_tol)?,
            };
            CheckKind::Abp { at: locator(section, n)?, rho: required_f64(section, "rho")?, y_norm, opts }
        }
        "harnack" => {
            allow(&["s0", "y0", "t0", "rho", "max_constant"])?;
            CheckKind::Harnack {
                at: locator(section, n)?,
                rho: required_f64(section, "rho")?,
                max_constant: section.f64_or("max_constant", f64::INFINITY)?,
            }
        }
        "oscillation" => {
            allow(&["s0", "y0", "t0", "rho", "levels", "theta_max"])?;
            CheckKind::Oscillation {
                at: locator(section, n)?,
                rho: required_f64(section, "rho")?,
                levels: usize_or(section, "levels", 2)?,
                theta_max: section.f64_or("theta_max", 0.95)?,
            }
        }
        "holder" => {
            allow(&["s0", "y0", "t0", "r", "rho", "alpha"])?;
            CheckKind::Holder {
                at: locator(section, n)?,
                r: required_f64(section, "r")?,
                rho: required_f64(section, "rho")?,
                alpha: section.f64_or("alpha", 0.5)?,
            }
        }
        "growth" => {
            allow(&["s0", "y0", "t0", "rho", "k_level", "eps0", "k"])?;
            let d = GrowthOptions::default();
            CheckKind::Growth {
                at: locator(section, n)?,
                rho: required_f64(section, "rho")?,
                k_level: section.f64_or("k_level", 1.0)?,
                opts: GrowthOptions { eps0: section.f64_or("eps0", d.eps0)?, k: section.f64_or("k", d.k)? },
            }
        }
        "poly_approx" => {
            allow(&["v", "s_outer", "radii"])?;
            CheckKind::PolyApprox {
                v: model_velocity(section, problem)?,
                s_outer: required_f64(section, "s_outer")?,
                radii: section.f64_list("radii")?.ok_or_else(|| parse_err(section.line, "poly_approx needs radii"))?,
            }
        }
        "schauder" => {
            allow(&["v", "r", "alpha", "max_constant"])?;
            CheckKind::Schauder {
                v: model_velocity(section, problem)?,
                r: section.f64_or("r", 0.5)?,
                alpha: section.f64_or("alpha", 0.5)?,
                max_constant: section.f64_or("max_constant", f64::INFINITY)?,
            }
        }
        "bernstein" => {
            allow(&["v", "a", "tol", "equation_tol", "skip_s_rows"])?;
            let d = BernsteinOptions::default();
            CheckKind::Bernstein {
                v: model_velocity(section, problem)?,
                a: section.f64_or("a", 8.0)?,
                opts: BernsteinOptions {
                    tol: section.f64_or("tol", d.tol)?,
                    equation_tol: section.f64_or("equation_tol", d.equation_tol)?,
                    skip_s_rows: usize_or(section, "skip_s_rows", d.skip_s_rows)?,
                },
            }
        }
        "gradient" => {
            allow(&["bound", "r", "gamma"])?;
            CheckKind::Gradient {
                bound: required_f64(section, "bound")?,
                r: required_f64(section, "r")?,
                gamma: section.f64_or("gamma", 0.5)?,
            }
        }
        other => return Err(parse_err(line, format!("unknown check kind {other:?}"))),
    };
    Ok(check)
}

/// Ensembles draw their own data, so `initial` is optional there.
fn problem_section(section: &Section, ensemble: bool) -> Section {
    let mut s = section.clone();
    if ensemble && s.get("initial").is_none() {
        s.entries.push(Entry { key: "initial".into(), value: "0".into(), line: section.line });
    }
    s
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        for s in &doc.sections {
            let known = matches!(s.name.as_str(), "experiment" | "grid" | "problem" | "solver" | "ensemble")
                || s.name.starts_with("check.");
            if !known {
                return Err(parse_err(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        let exp = doc.require("experiment")?;
        exp.check_keys(&["name", "seed"])?;
        let name = exp.require("name")?.value.clone();
        if !valid_name(&name) {
            return Err(parse_err(exp.require("name")?.line, format!("experiment name {name:?} must be alphanumeric, '_' or '-'")));
        }
        let seed = exp.u64_or("seed", 0)?;
        let ensemble = match doc.section("ensemble") {
            Some(s) => {
                s.check_keys(&["count"])?;
                let count = usize_or(s, "count", 1)?;
                if count == 0 {
                    return Err(parse_err(s.line, "ensemble count must be at least 1"));
                }
                Some(count)
            }
            None => None,
        };
        let grid = parse_grid(doc.require("grid")?)?;
        let n = grid.n();
        let problem = parse_problem(&problem_section(doc.require("problem")?, ensemble.is_some()), n)?;
        let config = parse_solver(doc.section("solver"))?;
        let mut checks = Vec::new();
        for s in doc.sections.iter().filter(|s| s.name.starts_with("check.")) {
            let check_name = &s.name["check.".len()..];
            if !valid_name(check_name) {
                return Err(parse_err(s.line, format!("check name {check_name:?} must be alphanumeric, '_' or '-'")));
            }
            let kind = parse_check(s, check_name, n, &problem, ensemble.is_some())?;
            checks.push(CheckSpec { name: check_name.to_string(), kind, line: s.line });
        }
        if checks.is_empty() {
            return Err(parse_err(1, "an experiment needs at least one [check.NAME] section"));
        }
        Ok(Self { name, seed, ensemble, grid, problem, config, checks })
    }
}
