//! The smoothing operator `M_ε` and the regularization `h_ε` adapted to the
//! degenerate geometry.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out[i] = (-z, w);
        out[m - 1 - i] = (z, w);
    }
    out
}

/// `exp(−1/(1 − r²))` on `(−1, 1)`, zero outside.
fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Product bump `φ(u, v) = Π ψ(·)/Z` on the unit box, `Z = (∫ψ)^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpKernel {
    n: usize,
    /// One-dimensional rule with the normalized profile folded into the weights.
    rule: Vec<(f64, f64)>,
    one_d_integral: f64,
}

impl BumpKernel {
    /// Kernel in dimension `n` with an `m`-point rule per axis, `m ≥ 8`.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {n}")));
        }
        if m < 8 {
            return Err(Error::Domain(format!("quadrature needs at least 8 points per axis, got {m}")));
        }
        let gl = gauss_legendre(m);
        let integral: f64 = gl.iter().map(|&(z, w)| w * bump(z)).sum();
        let rule = gl.iter().map(|&(z, w)| (z, w * bump(z) / integral)).collect();
        Ok(Self { n, rule, one_d_integral: integral })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `∫_{−1}^{1} exp(−1/(1−r²)) dr` as computed by the rule.
    pub fn one_d_integral(&self) -> f64 {
        self.one_d_integral
    }

    /// Normalized profile at `q = (u, v₂, …, vₙ)`.
    pub fn profile(&self, q: &[f64]) -> f64 {
        q.iter().map(|&z| bump(z) / self.one_d_integral).product()
    }

    /// `Σ weights`, which equals 1 up to rounding.
    pub fn total_weight(&self) -> f64 {
        self.rule.iter().map(|r| r.1).sum::<f64>().powi(self.n as i32)
    }

    fn for_each_node(&self, mut f: impl FnMut(&[f64], f64)) {
        let n = self.n;
        let m = self.rule.len();
        let mut idx = vec![0usize; n];
        let mut q = vec![0.0; n];
        loop {
            let mut w = 1.0;
            for k in 0..n {
                let (z, wk) = self.rule[idx[k]];
                q[k] = z;
                w *= wk;
            }
            f(&q, w);
            let mut k = 0;
            loop {
                if k == n {
                    return;
                }
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// `M_ε(P; Q) = ((√(x+2ε) + √ε u)², y + √ε v)` with `Q = (u, v)`.
pub fn m_epsilon(x: f64, y: &[f64], q: &[f64], eps: f64) -> Result<(f64, Vec<f64>)> {
    if !(x >= 0.0) || !(eps > 0.0) {
        return Err(Error::Domain(format!("need x >= 0 and eps > 0, got x = {x}, eps = {eps}")));
    }
    if q.len() != y.len() + 1 {
        return Err(Error::Domain("Q must have one more coordinate than y".into()));
    }
    let r = eps.sqrt();
    let s = (x + 2.0 * eps).sqrt() + r * q[0];
    Ok((s * s, y.iter().zip(&q[1..]).map(|(a, b)| a + r * b).collect()))
}

/// `h_ε(P) = ∫ φ(Q) h(M_ε(P; Q), t) dQ` at every grid node.
pub fn smooth_field<F>(h: F, eps: f64, kernel: &BumpKernel, grid: Arc<Grid>) -> Result<ScalarField>
where
    F: Fn(f64, &[f64], f64) -> f64 + Sync,
{
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let n = grid.n();
    if kernel.n() != n {
        return Err(Error::Domain(format!("kernel dimension {} does not match grid dimension {n}", kernel.n())));
    }
    let root = eps.sqrt();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let c = grid.coords(idx);
            let (x, y, t) = (c[0] * c[0], &c[1..n], c[n]);
            let base = (x + 2.0 * eps).sqrt();
            let mut ys = vec![0.0; n - 1];
            let mut acc = 0.0;
            kernel.for_each_node(|q, w| {
                let s = base + root * q[0];
                for (k, v) in ys.iter_mut().enumerate() {
                    *v = y[k] + root * q[k + 1];
                }
                acc += w * h(s * s, &ys, t);
            });
            acc
        })
        .collect();
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node: format!("{:?}", grid.coords(idx)), value: values[idx] });
    }
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::uniform(2, (0.0, 1.0, 9), (-1.0, 1.0, 5), (0.0, 1.0, 2)).unwrap())
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let total: f64 = rule.iter().map(|r| r.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        // degree 15 is exact for 8 points
        let m14: f64 = rule.iter().map(|&(z, w)| w * z.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
        let odd: f64 = rule.iter().map(|&(z, w)| w * z.powi(15)).sum();
        assert!(odd.abs() < 1e-15);
    }

    #[test]
    fn kernel_is_normalized() {
        let k = BumpKernel::new(3, 16).unwrap();
        assert!((k.total_weight() - 1.0).abs() < 1e-10);
        // ∫ exp(−1/(1−r²)) dr ≈ 0.443994
        let fine = BumpKernel::new(2, 256).unwrap();
        assert!((fine.one_d_integral() - 0.443_993_816_168_079_4).abs() < 1e-9);
        assert_eq!(k.profile(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn m_epsilon_values() {
        let (xi, zeta) = m_epsilon(0.0, &[0.0], &[0.0, 0.0], 0.01).unwrap();
        assert!((xi - 0.02).abs() < 1e-16);
        assert_eq!(zeta, vec![0.0]);
        let (xi, _) = m_epsilon(0.7, &[0.3], &[0.0, 0.5], 0.04).unwrap();
        assert!((xi - 0.78).abs() < 1e-15);
    }

    #[test]
    fn constants_and_odd_linear_are_fixed() {
        let k = BumpKernel::new(2, 16).unwrap();
        let c = smooth_field(|_, _, _| 2.5, 1e-3, &k, grid()).unwrap();
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        let y = smooth_field(|_, y, _| y[0], 1e-3, &k, grid()).unwrap();
        let exact = ScalarField::sample(grid(), |_, y, _| y[0]).unwrap();
        assert!(y.values().iter().zip(exact.values()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn square_root_error_is_order_root_eps() {
        let k = BumpKernel::new(2, 16).unwrap();
        let g = grid();
        let exact = ScalarField::sample(g.clone(), |x, _, _| x.sqrt()).unwrap();
        for eps in [1e-2, 1e-4] {
            let h = smooth_field(|x, _, _| x.sqrt(), eps, &k, g.clone()).unwrap();
            let err = h.zip_with(&exact, |a, b| (a - b).abs()).unwrap().max();
            // h_ε = √(x+2ε) exactly, worst at x = 0
            assert!((err - (2.0 * eps).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn nan_is_reported() {
        let k = BumpKernel::new(2, 8).unwrap();
        assert!(smooth_field(|x, _, _| if x > 0.5 { f64::NAN } else { 0.0 }, 1e-3, &k, grid()).is_err());
    }

    proptest! {
        #[test]
        fn displacement_identity(x in 0.0f64..4.0, u in -1.0f64..1.0, v in -1.0f64..1.0, eps in 1e-6f64..1.0) {
            let (xi, zeta) = m_epsilon(x, &[0.2], &[u, v], eps).unwrap();
            prop_assert!(xi >= 0.0);
            prop_assert!(((xi.sqrt() - (x + 2.0 * eps).sqrt()).abs() - eps.sqrt() * u.abs()).abs() < 1e-12);
            prop_assert!((zeta[0] - 0.2 - eps.sqrt() * v).abs() < 1e-12);
        }

        #[test]
        fn positivity_preserved(c in 0.0f64..3.0, eps in 1e-4f64..1e-1) {
            let k = BumpKernel::new(2, 8).unwrap();
            let h = smooth_field(move |x, y, _| c * x + y[0] * y[0], eps, &k, grid()).unwrap();
            prop_assert!(h.min() >= 0.0);
        }
    }
}
