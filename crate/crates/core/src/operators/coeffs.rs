use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::fields::Grid;

/// `0 < λ < 1`, `0 < ν < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipticityParams {
    pub lambda: f64,
    pub nu: f64,
}

impl EllipticityParams {
    pub fn new(lambda: f64, nu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Coefficients(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::Coefficients(format!("nu must lie in (0, 1), got {nu}")));
        }
        Ok(Self { lambda, nu })
    }
}

/// Transport velocity `v > 0` of the model operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportVelocity(f64);

impl TransportVelocity {
    pub fn new(v: f64) -> Result<Self> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Coefficients(format!("transport velocity must be positive, got {v}")));
        }
        Ok(Self(v))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Sum of sinusoids `c + Σ amp·sin(k·(x, y, t) + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSum {
    pub offset: f64,
    /// `(amplitude, kx, ky…, kt, phase)`.
    pub modes: Vec<(f64, Vec<f64>, f64)>,
}

impl TrigSum {
    fn eval(&self, x: f64, y: &[f64], t: f64) -> f64 {
        let mut v = self.offset;
        for (amp, k, phase) in &self.modes {
            let n = k.len() - 1;
            let mut arg = k[0] * x + k[n] * t + phase;
            for (ki, yi) in k[1..n].iter().zip(y) {
                arg += ki * yi;
            }
            v += amp * arg.sin();
        }
        v
    }
}

/// One coefficient function of `(x, y, t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Coef {
    Const(f64),
    Expr(Arc<Expr>),
    Trig(Arc<TrigSum>),
}

impl Coef {
    pub fn eval(&self, x: f64, y: &[f64], t: f64) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Expr(e) => e.eval(x, y, t),
            Coef::Trig(s) => s.eval(x, y, t),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Coef::Const(_) => false,
            Coef::Expr(e) => e.depends_on_t(),
            Coef::Trig(s) => s.modes.iter().any(|(a, k, _)| *a != 0.0 && *k.last().unwrap() != 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coef::Const(c) if *c == 0.0)
    }
}

/// The coefficients `a` (symmetric `n × n`) and `b` of `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    n: usize,
    a: Vec<Vec<Coef>>,
    b: Vec<Coef>,
    params: EllipticityParams,
    label: String,
}

impl CoefficientField {
    pub fn new(a: Vec<Vec<Coef>>, b: Vec<Coef>, params: EllipticityParams, label: impl Into<String>) -> Result<Self> {
        let n = b.len();
        if n < 2 {
            return Err(Error::Coefficients(format!("dimension must be >= 2, got {n}")));
        }
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::Coefficients("a must be n x n with n = len(b)".into()));
        }
        Ok(Self { n, a, b, params, label: label.into() })
    }

    /// `a = I`, `b = (v, 0, …, 0)`: the model operator.
    pub fn model(n: usize, v: TransportVelocity, params: EllipticityParams) -> Result<Self> {
        let a = (0..n).map(|i| (0..n).map(|j| Coef::Const(if i == j { 1.0 } else { 0.0 })).collect()).collect();
        let mut b = vec![Coef::Const(0.0); n];
        b[0] = Coef::Const(v.get());
        Self::new(a, b, params, format!("model:v={}", v.get()))
    }

    /// Expressions for the upper triangle of `a` (row-major, `i ≤ j`) and for `b`.
    pub fn from_expressions(
        n: usize,
        a_upper: &[&str],
        b: &[&str],
        params: EllipticityParams,
        named: &[(&str, f64)],
    ) -> Result<Self> {
        if a_upper.len() != n * (n + 1) / 2 || b.len() != n {
            return Err(Error::Coefficients(format!(
                "expected {} entries for a and {n} for b, got {} and {}",
                n * (n + 1) / 2,
                a_upper.len(),
                b.len()
            )));
        }
        let parse = |src: &str| -> Result<Coef> {
            let e = Expr::parse(src, n, named)?;
            Ok(match e.as_constant() {
                Some(c) => Coef::Const(c),
                None => Coef::Expr(Arc::new(e)),
            })
        };
        let mut a = vec![vec![Coef::Const(0.0); n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let c = parse(a_upper[k])?;
                a[i][j] = c.clone();
                a[j][i] = c;
                k += 1;
            }
        }
        let b = b.iter().map(|s| parse(s)).collect::<Result<_>>()?;
        Self::new(a, b, params, "expressions")
    }

    /// Smooth random coefficients satisfying the structure conditions for
    /// `λ ≤ 0.5` and every `ν < 1`: diagonal in `[0.8, 1.2]`, off-diagonal
    /// entries at most `0.15/(n−1)`, `b₁ ∈ [0.6, 1]`, `|bⱼ| ≤ 0.3`.
    pub fn random(n: usize, seed: u64, params: EllipticityParams) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trig = |offset: f64, total_amp: f64, rng: &mut ChaCha8Rng| {
            let modes = (0..3)
                .map(|_| {
                    let k: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
                    (total_amp / 3.0 * rng.gen_range(-1.0..1.0), k, rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect();
            Coef::Trig(Arc::new(TrigSum { offset, modes }))
        };
        let off = 0.15 / (n - 1) as f64;
        let mut a = vec![vec![Coef::Const(0.0); n]; n];
        for i in 0..n {
            a[i][i] = trig(1.0, 0.2, &mut rng);
            for j in i + 1..n {
                let c = trig(0.0, off, &mut rng);
                a[i][j] = c.clone();
                a[j][i] = c;
            }
        }
        let mut b = vec![trig(0.8, 0.2, &mut rng)];
        for _ in 1..n {
            b.push(trig(0.0, 0.3, &mut rng));
        }
        Self::new(a, b, params, format!("random:seed={seed}"))
    }

    /// Parses `identity`, `model:v=<v>` or `random:seed=<u64>`.
    pub fn preset(name: &str, n: usize, params: EllipticityParams) -> Result<Self> {
        let bad = || Error::Coefficients(format!("unknown coefficient preset {name:?}"));
        if name == "identity" {
            return Self::model(n, TransportVelocity::new(1.0)?, params).map(|c| c.with_label("identity"));
        }
        let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
        let (key, value) = arg.split_once('=').ok_or_else(bad)?;
        match (kind, key) {
            ("model", "v") => {
                let v: f64 = value.trim().parse().map_err(|_| bad())?;
                Self::model(n, TransportVelocity::new(v)?, params)
            }
            ("random", "seed") => Self::random(n, value.trim().parse().map_err(|_| bad())?, params),
            _ => Err(bad()),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> EllipticityParams {
        self.params
    }

    pub fn a(&self, i: usize, j: usize) -> &Coef {
        &self.a[i][j]
    }

    pub fn b(&self, i: usize) -> &Coef {
        &self.b[i]
    }

    pub fn depends_on_t(&self) -> bool {
        self.a.iter().flatten().chain(&self.b).any(Coef::depends_on_t)
    }

    /// Fills `a` (row-major `n × n`) and `b` at one point.
    pub fn eval_into(&self, x: f64, y: &[f64], t: f64, a: &mut [f64], b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.a[i][j].eval(x, y, t);
            }
            b[i] = self.b[i].eval(x, y, t);
        }
    }

    /// True for the model operator `a = I`, `b = (v, 0, …)` with constant `v`.
    pub fn as_model(&self) -> Option<f64> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                match self.a[i][j] {
                    Coef::Const(c) if c == if i == j { 1.0 } else { 0.0 } => {}
                    _ => return None,
                }
            }
        }
        if !self.b[1..].iter().all(Coef::is_zero) {
            return None;
        }
        match self.b[0] {
            Coef::Const(v) => Some(v),
            _ => None,
        }
    }
}

/// Worst-case margins of the structure conditions over the grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `min eig(a) − λ`.
    pub ellipticity_margin: f64,
    /// `λ⁻¹ − max |aᵢⱼ|`.
    pub a_bound_margin: f64,
    /// `λ⁻¹ − max |bᵢ|`.
    pub b_bound_margin: f64,
    /// `min 2b₁/a₁₁ − ν`.
    pub transport_margin: f64,
    /// `min b₁/(2a₁₁)`, reported for information.
    pub transport_quarter_quotient: f64,
    pub pass: bool,
}

pub fn validate_coefficients(coeffs: &CoefficientField, grid: &Grid) -> Result<ValidationReport> {
    let n = coeffs.n();
    if grid.n() != n {
        return Err(Error::Coefficients(format!("coefficients have n = {n}, grid has n = {}", grid.n())));
    }
    let EllipticityParams { lambda, nu } = coeffs.params();
    let time_dependent = coeffs.depends_on_t();
    let count = if time_dependent { grid.len() } else { grid.spatial_len() };
    let mut c = vec![0.0; grid.num_axes()];
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let (mut min_eig, mut max_a, mut max_b) = (f64::INFINITY, 0.0_f64, 0.0_f64);
    let (mut min_transport, mut min_quarter) = (f64::INFINITY, f64::INFINITY);
    for idx in 0..count {
        grid.coords_into(idx, &mut c);
        let (x, y, t) = (c[0] * c[0], &c[1..n], c[n]);
        coeffs.eval_into(x, y, t, &mut a, &mut b);
        if let Some(v) = a.iter().chain(&b).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: crate::fields::describe_node(grid, idx), value: *v });
        }
        for i in 0..n {
            for j in i + 1..n {
                if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * (1.0 + a[i * n + j].abs()) {
                    return Err(Error::Coefficients(format!("a is not symmetric at entry ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let eig = DMatrix::from_row_slice(n, n, &a).symmetric_eigenvalues();
        min_eig = min_eig.min(eig.min());
        max_a = a.iter().fold(max_a, |m, v| m.max(v.abs()));
        max_b = b.iter().fold(max_b, |m, v| m.max(v.abs()));
        min_transport = min_transport.min(2.0 * b[0] / a[0]);
        min_quarter = min_quarter.min(b[0] / (2.0 * a[0]));
    }
    let report = ValidationReport {
        ellipticity_margin: min_eig - lambda,
        a_bound_margin: 1.0 / lambda - max_a,
        b_bound_margin: 1.0 / lambda - max_b,
        transport_margin: min_transport - nu,
        transport_quarter_quotient: min_quarter,
        pass: false,
    };
    let pass = [report.ellipticity_margin, report.a_bound_margin, report.b_bound_margin, report.transport_margin]
        .iter()
        .all(|m| *m >= 0.0);
    Ok(ValidationReport { pass, ..report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::uniform(2, (0.0, 1.0, 5), (-1.0, 1.0, 5), (0.0, 1.0, 3)).unwrap()
    }

    fn half() -> EllipticityParams {
        EllipticityParams::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn model_passes() {
        let c = CoefficientField::model(2, TransportVelocity::new(1.0).unwrap(), half()).unwrap();
        let r = validate_coefficients(&c, &grid()).unwrap();
        assert!(r.pass);
        assert_eq!(r.transport_margin, 1.5);
        assert_eq!(c.as_model(), Some(1.0));
    }

    #[test]
    fn zero_drift_fails_transport() {
        let c = CoefficientField::from_expressions(2, &["1", "0", "1"], &["0", "0"], half(), &[]).unwrap();
        let r = validate_coefficients(&c, &grid()).unwrap();
        assert!(!r.pass);
        assert!(r.transport_margin < 0.0);
        assert!(r.ellipticity_margin >= 0.0);
    }

    #[test]
    fn eigenvalue_margin() {
        // eigenvalues 0.4 and 1 with eigenvectors (1, ±1)/√2
        let c = CoefficientField::from_expressions(2, &["0.7", "0.3", "0.7"], &["1", "0"], half(), &[]).unwrap();
        let r = validate_coefficients(&c, &grid()).unwrap();
        assert!(!r.pass);
        assert!((r.ellipticity_margin + 0.1).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_rejected() {
        let mut a = vec![vec![Coef::Const(1.0), Coef::Const(0.1)], vec![Coef::Const(0.0), Coef::Const(1.0)]];
        a[1][0] = Coef::Const(0.2);
        let c = CoefficientField::new(a, vec![Coef::Const(1.0), Coef::Const(0.0)], half(), "bad").unwrap();
        assert!(validate_coefficients(&c, &grid()).is_err());
    }

    #[test]
    fn presets_parse_and_validate() {
        for name in ["identity", "model:v=0.25", "random:seed=7"] {
            for n in [2, 3] {
                let g = Grid::uniform(n, (0.0, 1.0, 5), (-1.0, 1.0, 5), (0.0, 1.0, 3)).unwrap();
                let c = CoefficientField::preset(name, n, half()).unwrap();
                assert!(validate_coefficients(&c, &g).unwrap().pass, "{name} n={n}");
            }
        }
        assert!(CoefficientField::preset("model:v=-1", 2, half()).is_err());
        assert!(CoefficientField::preset("nope", 2, half()).is_err());
        assert!(EllipticityParams::new(0.5, 1.5).is_err());
    }
}
