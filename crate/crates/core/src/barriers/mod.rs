//! Explicit barrier functions, parameter searches and sampled certification.

mod harnack;
mod model;

use std::fmt::Write as _;

use serde::Serialize;

pub use harnack::{
    certify_harnack_barrier, find_harnack_params, harnack_barrier_v, harnack_barrier_v_rho, lambda_kernel, omega,
    sup_outer_omega_l, theta_jet, HarnackBarrierParams, HarnackRegions, ThetaJet, VJet, M_LEVELS,
};
pub use model::{
    barrier_cond_residual, certify_barrier_cond, certify_barrier_inequality, find_barrier_params, model_barrier_jet,
    model_barrier_phi, BarrierForm, BarrierRegion, ModelBarrierParams, PhiJet, SEARCH_CAP,
};

/// One checked quantity of a certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
    pub ok: bool,
    /// Coordinates of the worst sample, when there is one.
    pub worst: Option<Vec<f64>>,
}

/// Outcome of a sampled certification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub grid: String,
    pub margins: Vec<Margin>,
    pub samples: usize,
    pub pass: bool,
}

impl Certificate {
    pub(crate) fn new(name: &str, params: Vec<(String, f64)>, grid: String, margins: Vec<Margin>, samples: usize) -> Self {
        let pass = margins.iter().all(|m| m.ok);
        Self { name: name.into(), params, grid, margins, samples, pass }
    }

    pub fn margin(&self, name: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.name == name)
    }

    /// Plain-text rendering: parameters, grid, margins, verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "certificate {}", self.name);
        for (k, v) in &self.params {
            let _ = writeln!(out, "param {k} = {v:.12e}");
        }
        let _ = writeln!(out, "grid {}", self.grid);
        let _ = writeln!(out, "samples {}", self.samples);
        for m in &self.margins {
            let _ = write!(out, "margin {} = {:.12e} {}", m.name, m.value, if m.ok { "ok" } else { "FAIL" });
            if let Some(w) = &m.worst {
                let coords: Vec<String> = w.iter().map(|c| format!("{c:.6}")).collect();
                let _ = write!(out, " at [{}]", coords.join(", "));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "pass {}", self.pass);
        out
    }
}

/// Running minimum with the location where it was attained.
#[derive(Clone, Debug)]
pub(crate) struct MinTracker {
    pub value: f64,
    pub at: Option<Vec<f64>>,
}

impl MinTracker {
    pub fn new() -> Self {
        Self { value: f64::INFINITY, at: None }
    }

    pub fn push(&mut self, value: f64, at: impl FnOnce() -> Vec<f64>) {
        if value < self.value || value.is_nan() {
            self.value = value;
            self.at = Some(at());
        }
    }

    pub fn into_margin(self, name: &str, ok: impl FnOnce(f64) -> bool) -> Margin {
        let ok = ok(self.value);
        Margin { name: name.into(), value: self.value, ok, worst: self.at }
    }
}

/// Central difference with one Richardson step; `f` is evaluated at `z ± h`, `z ± h/2`.
pub(crate) fn richardson_d1(f: &dyn Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    let d = |h: f64| (f(z + h) - f(z - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub(crate) fn richardson_d2(f: &dyn Fn(f64) -> f64, z: f64, h: f64) -> f64 {
    let f0 = f(z);
    let d = |h: f64| (f(z + h) - 2.0 * f0 + f(z - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_fourth_order() {
        let f = |z: f64| z.sin();
        assert!((richardson_d1(&f, 0.3, 1e-2) - 0.3f64.cos()).abs() < 1e-10);
        assert!((richardson_d2(&f, 0.3, 1e-2) + 0.3f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn certificate_text_lists_margins() {
        let m = Margin { name: "a".into(), value: -1.0, ok: false, worst: Some(vec![1.0]) };
        let c = Certificate::new("demo", vec![("b".into(), 0.5)], "g".into(), vec![m], 3);
        assert!(!c.pass);
        let text = c.to_text();
        assert!(text.contains("margin a = -1.0"));
        assert!(text.contains("FAIL at [1.000000]"));
        assert!(text.ends_with("pass false\n"));
    }
}
