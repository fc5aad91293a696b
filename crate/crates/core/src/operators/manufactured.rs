//! Exact polynomial solutions of the model equation `f_t = x f_xx + Σ f_yy + v f_x + g`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::coeffs::TransportVelocity;
use crate::error::{Error, Result};

/// Function of `(x, y, t)` shared across threads.
pub type StFn = Arc<dyn Fn(f64, &[f64], f64) -> f64 + Send + Sync>;

/// Polynomial in `x, y_2, …, y_n, t`; exponent vectors are `[px, py…, pt]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::zero(n).add_term(c, &vec![0; n + 1])
    }

    /// Adds `c · Π var^exp`.
    pub fn add_term(mut self, c: f64, exps: &[u32]) -> Self {
        assert_eq!(exps.len(), self.n + 1);
        *self.terms.entry(exps.to_vec()).or_insert(0.0) += c;
        self
    }

    /// Monomial `x^px y_{k+2}^py t^pt` helper with a single tangential factor.
    pub fn mono(n: usize, c: f64, px: u32, y: Option<(usize, u32)>, pt: u32) -> Self {
        let mut e = vec![0; n + 1];
        e[0] = px;
        if let Some((k, p)) = y {
            e[k + 1] = p;
        }
        e[n] = pt;
        Self::zero(n).add_term(c, &e)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    /// Derivative along variable `var` (`0` is x, `n` is t).
    pub fn diff(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                *out.terms.entry(d).or_insert(0.0) += c * e[var] as f64;
            }
        }
        out
    }

    /// Multiplies by `x`.
    pub fn times_x(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e[0] += 1;
                    (e, *c)
                })
                .collect(),
        }
    }

    pub fn eval(&self, x: f64, y: &[f64], t: f64) -> f64 {
        let n = self.n;
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c * x.powi(e[0] as i32) * t.powi(e[n] as i32);
                for (k, yk) in y.iter().enumerate().take(n - 1) {
                    v *= yk.powi(e[k + 1] as i32);
                }
                v
            })
            .sum()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn to_fn(&self) -> StFn {
        let p = self.clone();
        Arc::new(move |x, y, t| p.eval(x, y, t))
    }

    /// `L₀p = p_t − (x p_xx + Σ p_yy + v p_x)`.
    pub fn apply_l0(&self, v: f64) -> Self {
        let n = self.n;
        let mut spatial = self.diff(0).diff(0).times_x().add(&self.diff(0).scale(v));
        for k in 1..n {
            spatial = spatial.add(&self.diff(k).diff(k));
        }
        self.diff(n).add(&spatial.scale(-1.0))
    }
}

/// A pair `(f, g)` with `L₀f = g` for transport velocity `v`.
#[derive(Clone, Debug)]
pub struct ManufacturedSolution {
    pub name: String,
    pub v: f64,
    pub f: Poly,
    pub g: Poly,
}

impl ManufacturedSolution {
    /// Builds the pair and verifies `L₀f − g = 0` symbolically.
    pub fn new(name: impl Into<String>, v: f64, f: Poly, g: Poly) -> Result<Self> {
        let name = name.into();
        let residual = f.apply_l0(v).add(&g.scale(-1.0));
        let r = residual.max_abs_coefficient();
        if r > 1e-12 {
            return Err(Error::Internal(format!("manufactured pair {name} fails its self-check (residual {r:e})")));
        }
        Ok(Self { name, v, f, g })
    }

    pub fn f_fn(&self) -> StFn {
        self.f.to_fn()
    }

    pub fn g_fn(&self) -> StFn {
        self.g.to_fn()
    }
}

/// `x + vt`, the caloric quadratic, `y₂² + 2t` and `x` (with `g = −v`) in dimension `n`.
pub fn manufactured_solutions(v: TransportVelocity, n: usize) -> Result<Vec<ManufacturedSolution>> {
    let v = v.get();
    let m = |c, px, y, pt| Poly::mono(n, c, px, y, pt);
    let zero = Poly::zero(n);
    Ok(vec![
        ManufacturedSolution::new("linear", v, m(1.0, 1, None, 0).add(&m(v, 0, None, 1)), zero.clone())?,
        ManufacturedSolution::new("caloric_quadratic", v, caloric_quadratic(n, v), zero.clone())?,
        ManufacturedSolution::new("tangential", v, m(1.0, 0, Some((0, 2)), 0).add(&m(2.0, 0, None, 1)), zero)?,
        ManufacturedSolution::new("steady_x", v, m(1.0, 1, None, 0), Poly::constant(n, -v))?,
    ])
}

/// `x² + 2(1+v)xt + v(1+v)t²`.
pub fn caloric_quadratic(n: usize, v: f64) -> Poly {
    Poly::mono(n, 1.0, 2, None, 0)
        .add(&Poly::mono(n, 2.0 * (1.0 + v), 1, None, 1))
        .add(&Poly::mono(n, v * (1.0 + v), 0, None, 2))
}
