//! Measurements of the a-priori estimates on grid functions.
//!
//! Every check returns an [`EstimateReport`]. Measured constants are reported,
//! never compared with the (unknown) constants of the statements; pass criteria
//! are finiteness, configured caps, and refinement or scale stability.

mod abp;
mod contact;
mod harnack;
mod model;
mod oscillation;

use std::fmt::Write as _;

use serde::Serialize;

pub use abp::{abp_check, AbpOptions};
pub use contact::{contact_sets, ContactSetResult, ContactSide};
pub use harnack::{growth_lemma_check, harnack_quotient, GrowthOptions};
pub use model::{
    bernstein_quantity_check, gradient_bound_check, poly_approx_check, schauder_ratio, taylor_polynomial,
    BernsteinOptions, TaylorPolynomial,
};
pub use oscillation::{holder_bound_check, oscillation_decay};

use crate::error::{Error, Result};
use crate::fields::{lp_norm_weighted, Grid, ScalarField};
use crate::geometry::{rho_nu, ParabolicCube, WeightedMeasure};

/// Two-column plot data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs_components: Vec<(String, f64)>,
    pub measured_constant: f64,
    pub margins: Vec<(String, f64)>,
    pub pass: bool,
    /// False when the statement's hypotheses fail on the input; such reports pass vacuously.
    pub applicable: bool,
    pub provenance: String,
    pub details: Vec<(String, f64)>,
    pub series: Vec<Series>,
}

impl EstimateReport {
    pub fn new(name: &str, lhs: f64, rhs_components: Vec<(String, f64)>, measured_constant: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs_components,
            measured_constant,
            margins: Vec::new(),
            pass: true,
            applicable: true,
            provenance: String::new(),
            details: Vec::new(),
            series: Vec::new(),
        }
    }

    pub fn margin(mut self, name: &str, value: f64) -> Self {
        self.margins.push((name.into(), value));
        self.refresh();
        self
    }

    pub fn detail(mut self, name: &str, value: f64) -> Self {
        self.details.push((name.into(), value));
        self
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn not_applicable(mut self) -> Self {
        self.applicable = false;
        self.refresh();
        self
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    fn refresh(&mut self) {
        self.pass = !self.applicable || self.margins.iter().all(|(_, m)| *m >= 0.0);
    }

    pub fn get_margin(&self, name: &str) -> Option<f64> {
        self.margins.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn get_detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// Line-oriented `key = value` rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "provenance = {}", self.provenance);
        let _ = writeln!(out, "lhs = {:.12e}", self.lhs);
        for (k, v) in &self.rhs_components {
            let _ = writeln!(out, "rhs.{k} = {v:.12e}");
        }
        let _ = writeln!(out, "measured_constant = {:.12e}", self.measured_constant);
        for (k, v) in &self.margins {
            let _ = writeln!(out, "margin.{k} = {v:.12e}");
        }
        for (k, v) in &self.details {
            let _ = writeln!(out, "detail.{k} = {v:.12e}");
        }
        for s in &self.series {
            let _ = writeln!(out, "series.{} = {} points", s.name, s.points.len());
        }
        let _ = writeln!(out, "applicable = {}", self.applicable);
        let _ = writeln!(out, "pass = {}", self.pass);
        out
    }

    /// One JSON record; non-finite numbers become `null`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
    }
}

/// `lhs/rhs`, with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn quotient(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Relative change `|a − b| / max(|a|, |b|)` (0 when both vanish).
pub fn relative_drift(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// `ρ^{n/(n+1)} ρ_ν(s₀)^{1/(n+1)} ‖g‖_{L^{n+1}(cube, dμ)}` with the cube's radius and center.
pub fn forcing_term(g: &ScalarField, cube: &ParabolicCube, mu: &WeightedMeasure) -> Result<f64> {
    let n = cube.n() as f64;
    let rho = cube.radius;
    let norm = lp_norm_weighted(g, n + 1.0, cube, mu)?;
    Ok(rho.powf(n / (n + 1.0)) * rho_nu(cube.s0(), rho, mu.nu()).powf(1.0 / (n + 1.0)) * norm)
}

/// Errors unless the cube's closed extent lies within the grid's bounding box.
pub(crate) fn require_inside(grid: &Grid, cube: &ParabolicCube) -> Result<()> {
    let tol = 1e-9;
    let (slo, shi) = cube.s_range();
    let (tlo, thi) = cube.t_range();
    let s = grid.s_axis();
    let t = grid.t_axis();
    let mut ok = slo >= s.lo() - tol && shi <= s.hi() + tol && tlo >= t.lo() - tol && thi <= t.hi() + tol;
    for (i, axis) in grid.y_axes().iter().enumerate() {
        let (lo, hi) = cube.y_range(i);
        ok &= lo >= axis.lo() - tol && hi <= axis.hi() + tol;
    }
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "cube of radius {} at (s, t) = ({}, {}) leaves the grid",
            cube.radius,
            cube.s0(),
            cube.base.t
        )))
    }
}
