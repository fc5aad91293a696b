//! Sectioned key/value text format shared by problem and experiment files.
//!
//! ```text
//! # comment
//! [grid]
//! n = 2
//! s = 0, 1, 33
//! y = -1, 1, 33
//! t = 0, 0.5, 11
//!
//! [problem]
//! coefficients = model:v=1
//! initial = x + t
//!
//! [solver]
//! dt = 0.01
//! ```

use std::sync::Arc;

use super::{Forcing, IvbProblem, LinearSolver, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::{Axis, Grid};
use crate::operators::{CoefficientField, EllipticityParams, Expr, StFn};

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).map_or(default, |e| e.value.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| e.value.parse::<f64>().map_err(|_| parse_err(e.line, format!("{key}: expected a number, got {:?}", e.value))))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.get(key).map_or(Ok(default), |e| {
            e.value.parse().map_err(|_| parse_err(e.line, format!("{key}: expected an integer, got {:?}", e.value)))
        })
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|tok| tok.trim().parse::<f64>().map_err(|_| parse_err(e.line, format!("{key}: bad number {:?}", tok.trim()))))
                    .collect()
            })
            .transpose()
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| parse_err(self.line, format!("[{}] is missing required key {key:?}", self.name)))
    }

    /// Rejects keys outside `allowed`. A trailing `*` in an allowed key matches any suffix.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for e in &self.entries {
            let ok = allowed.iter().any(|a| match a.strip_suffix('*') {
                Some(prefix) => e.key.starts_with(prefix),
                None => *a == e.key,
            });
            if !ok {
                return Err(parse_err(e.line, format!("unknown key {:?} in [{}]", e.key, self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct KvDocument {
    pub sections: Vec<Section>,
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| parse_err(line, "unterminated section header"))?.trim();
                if name.is_empty() {
                    return Err(parse_err(line, "empty section name"));
                }
                if sections.iter().any(|s| s.name == name) {
                    return Err(parse_err(line, format!("duplicate section [{name}]")));
                }
                sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| parse_err(line, "expected key = value"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(parse_err(line, "empty key"));
            }
            let section = sections.last_mut().ok_or_else(|| parse_err(line, "key outside of any section"))?;
            if section.get(key).is_some() {
                return Err(parse_err(line, format!("duplicate key {key:?} in [{}]", section.name)));
            }
            section.entries.push(Entry { key: key.to_string(), value: value.trim().to_string(), line });
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name).ok_or_else(|| parse_err(1, format!("missing section [{name}]")))
    }
}

fn axis_from(section: &Section, key: &str) -> Result<Option<Axis>> {
    let Some(list) = section.f64_list(key)? else { return Ok(None) };
    let line = section.get(key).map_or(section.line, |e| e.line);
    if list.len() != 3 || list[2].fract() != 0.0 || list[2] < 2.0 {
        return Err(parse_err(line, format!("{key}: expected lo, hi, count")));
    }
    Axis::uniform(list[0], list[1], list[2] as usize).map(Some).map_err(|e| parse_err(line, e.to_string()))
}

/// `[grid]`: `n`, `s`, `t`, and either `y` (shared) or `y2 … yn`.
pub fn parse_grid(section: &Section) -> Result<Grid> {
    section.check_keys(&["n", "s", "t", "y", "y*"])?;
    let n = section.u64_or("n", 2)? as usize;
    if n < 2 {
        return Err(parse_err(section.line, format!("n must be >= 2, got {n}")));
    }
    let s = axis_from(section, "s")?.ok_or_else(|| parse_err(section.line, "[grid] needs s = lo, hi, count"))?;
    let t = axis_from(section, "t")?.ok_or_else(|| parse_err(section.line, "[grid] needs t = lo, hi, count"))?;
    let shared = axis_from(section, "y")?;
    let mut y = Vec::with_capacity(n - 1);
    for k in 2..=n {
        let axis = match axis_from(section, &format!("y{k}"))? {
            Some(a) => a,
            None => shared.clone().ok_or_else(|| parse_err(section.line, format!("[grid] needs y or y{k}")))?,
        };
        y.push(axis);
    }
    Grid::new(s, y, t).map_err(|e| parse_err(section.line, e.to_string()))
}

fn named_params(section: &Section) -> Result<Vec<(String, f64)>> {
    let Some(e) = section.get("params") else { return Ok(Vec::new()) };
    e.value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| parse_err(e.line, format!("params: expected name=value, got {kv:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| parse_err(e.line, format!("params: bad number in {kv:?}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Expression entry compiled into a data function; errors carry the line.
pub fn expr_fn(section: &Section, key: &str, n: usize, params: &[(String, f64)]) -> Result<Option<StFn>> {
    let Some(e) = section.get(key) else { return Ok(None) };
    let named: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let expr = Expr::parse(&e.value, n, &named).map_err(|err| parse_err(e.line, format!("{key}: {err}")))?;
    Ok(Some(Arc::new(move |x, y, t| expr.eval(x, y, t))))
}

/// Structure constants from `lambda` and `nu`, validated against `(0, 1)`.
pub fn parse_params(section: &Section) -> Result<EllipticityParams> {
    let lambda = section.f64_or("lambda", 0.5)?;
    let nu = section.f64_or("nu", 0.5)?;
    let line = section.get("nu").or(section.get("lambda")).map_or(section.line, |e| e.line);
    EllipticityParams::new(lambda, nu)
        .map_err(|e| parse_err(line, format!("{e}; the structure conditions require 0 < lambda < 1 and 0 < nu < 1")))
}

/// `[problem]`: coefficients (preset or `expressions` with `a11 … ann`, `b1 … bn`),
/// `lambda`, `nu`, `params`, `initial`, `boundary`, `forcing`, `c`.
pub fn parse_problem(section: &Section, n: usize) -> Result<IvbProblem> {
    section.check_keys(&["coefficients", "a*", "b*", "lambda", "nu", "params", "initial", "boundary", "forcing", "c"])?;
    let params = parse_params(section)?;
    let named = parse_params_list(section)?;
    let coeff_entry = section.require("coefficients")?;
    let coeffs = if coeff_entry.value == "expressions" {
        let mut a_upper = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                let key = format!("a{i}{j}");
                let default = if i == j { "1" } else { "0" };
                a_upper.push(section.str_or(&key, default).to_string());
            }
        }
        let b: Vec<String> = (1..=n).map(|i| section.str_or(&format!("b{i}"), "0").to_string()).collect();
        let a_refs: Vec<&str> = a_upper.iter().map(String::as_str).collect();
        let b_refs: Vec<&str> = b.iter().map(String::as_str).collect();
        let named_refs: Vec<(&str, f64)> = named.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        CoefficientField::from_expressions(n, &a_refs, &b_refs, params, &named_refs)
            .map_err(|e| parse_err(coeff_entry.line, e.to_string()))?
    } else {
        CoefficientField::preset(&coeff_entry.value, n, params).map_err(|e| parse_err(coeff_entry.line, e.to_string()))?
    };
    let initial = expr_fn(section, "initial", n, &named)?.ok_or_else(|| parse_err(section.line, "[problem] needs initial"))?;
    let boundary = expr_fn(section, "boundary", n, &named)?.unwrap_or_else(|| initial.clone());
    let forcing = match expr_fn(section, "forcing", n, &named)? {
        Some(g) => Forcing::Function(g),
        None => Forcing::Zero,
    };
    let c = section.f64_or("c", 0.0)?;
    Ok(IvbProblem { coeffs, forcing, initial, boundary, c })
}

fn parse_params_list(section: &Section) -> Result<Vec<(String, f64)>> {
    named_params(section)
}

/// `[solver]`: `dt`, `tolerance`, `max_iterations`, `linear_solver` (`auto`, `banded`, `bicgstab`).
pub fn parse_solver(section: Option<&Section>) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    let Some(section) = section else { return Ok(cfg) };
    section.check_keys(&["dt", "tolerance", "max_iterations", "linear_solver"])?;
    cfg.dt = section.f64_or("dt", cfg.dt)?;
    cfg.tolerance = section.f64_or("tolerance", cfg.tolerance)?;
    cfg.max_iterations = section.u64_or("max_iterations", cfg.max_iterations as u64)? as usize;
    if let Some(e) = section.get("linear_solver") {
        cfg.linear_solver = match e.value.as_str() {
            "auto" => LinearSolver::Auto,
            "banded" => LinearSolver::Banded,
            "bicgstab" => LinearSolver::BiCgStab,
            other => return Err(parse_err(e.line, format!("unknown linear solver {other:?}"))),
        };
    }
    cfg.validate().map_err(|e| parse_err(section.line, e.to_string()))?;
    Ok(cfg)
}

/// A complete problem definition.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub grid: Grid,
    pub problem: IvbProblem,
    pub config: SolverConfig,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDocument::parse(text)?;
        let grid = parse_grid(doc.require("grid")?)?;
        let problem = parse_problem(doc.require("problem")?, grid.n())?;
        let config = parse_solver(doc.section("solver"))?;
        Ok(Self { grid, problem, config })
    }
}
