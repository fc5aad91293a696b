use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{c0_norm, cs_norm_2_alpha, d1, d11, d2, holder_seminorm, x_derivatives, Grid, ScalarField};
use crate::geometry::ParabolicCube;
use crate::operators::{apply_l0, TransportVelocity};

use super::{quotient, EstimateReport, Series};

/// Below this multiple of the data scale `|f − p|` counts as zero.
const ROUNDOFF_FLOOR: f64 = 1e-11;

fn in_box(grid: &Grid, cube: &ParabolicCube) -> Result<Vec<usize>> {
    let nodes = grid.nodes_in(cube);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no grid node in the box of radius {}", cube.radius)));
    }
    Ok(nodes)
}

fn s_at(grid: &Grid, idx: usize) -> f64 {
    grid.s_axis().node(grid.axis_index(idx, 0))
}

/// `max |f_x|` and `max |f_y|` on `B_{γr}` scaled by `r²/B`, under `|f| ≤ B` on `B_r`.
pub fn gradient_bound_check(f: &ScalarField, bound: f64, r: f64, gamma_frac: f64) -> Result<EstimateReport> {
    if !(bound >= 0.0) || !(gamma_frac > 0.0 && gamma_frac < 1.0) {
        return Err(Error::Domain(format!("need B >= 0 and 0 < gamma < 1, got B = {bound}, gamma = {gamma_frac}")));
    }
    let grid = f.grid();
    let n = grid.n();
    let outer = in_box(grid, &ParabolicCube::model_box(n, r)?)?;
    let sup = outer.iter().fold(0.0_f64, |m, &i| m.max(f.value(i).abs()));
    if sup > bound * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("|f| reaches {sup:e} > B = {bound:e} on B_r")));
    }
    let inner = in_box(grid, &ParabolicCube::model_box(n, gamma_frac * r)?)?;
    let (fx, _) = x_derivatives(f)?;
    let fy: Vec<ScalarField> = (1..n).map(|k| d1(f, k)).collect::<Result<_>>()?;
    let max_fx = inner.iter().fold(0.0_f64, |m, &i| m.max(fx.value(i).abs()));
    let max_fy = inner.iter().fold(0.0_f64, |m, &i| fy.iter().fold(m, |m, d| m.max(d.value(i).abs())));
    let lhs = max_fx.max(max_fy);
    let constant = quotient(lhs * r * r, bound);
    Ok(EstimateReport::new("gradient", lhs, vec![("bound".into(), bound), ("r".into(), r)], constant)
        .margin("finite", if constant.is_finite() { 0.0 } else { -1.0 })
        .detail("max_fx", max_fx)
        .detail("max_fy", max_fy)
        .detail("const_x", quotient(max_fx * r * r, bound))
        .detail("const_y", quotient(max_fy * r * r, bound)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernsteinOptions {
    /// Allowed residual relative to `1 +` the local term magnitudes.
    pub tol: f64,
    /// Allowed `|L₀f|` relative to `1 +` the magnitudes of its terms.
    pub equation_tol: f64,
    /// Rows of the `s` axis nearest the degenerate face that are left out.
    /// FD derivatives in `x` amplify the solver error there by `1/h`.
    pub skip_s_rows: usize,
}

impl Default for BernsteinOptions {
    fn default() -> Self {
        Self { tol: 0.05, equation_tol: 0.1, skip_s_rows: 4 }
    }
}

struct Parabolic {
    t: ScalarField,
    x: ScalarField,
    xx: ScalarField,
    yy: Vec<ScalarField>,
}

impl Parabolic {
    fn of(q: &ScalarField) -> Result<Self> {
        let n = q.grid().n();
        let (x, xx) = x_derivatives(q)?;
        Ok(Self { t: d1(q, n)?, x, xx, yy: (1..n).map(|k| d2(q, k)).collect::<Result<_>>()? })
    }

    /// `q_t − (x q_xx + Σ q_yy + drift q_x)` and the sum of the absolute terms.
    fn residual(&self, idx: usize, x: f64, drift: f64) -> (f64, f64) {
        let lap: f64 = self.yy.iter().map(|f| f.value(idx)).sum();
        let lap_abs: f64 = self.yy.iter().map(|f| f.value(idx).abs()).sum();
        let (qt, qx, qxx) = (self.t.value(idx), self.x.value(idx), self.xx.value(idx));
        (qt - (x * qxx + lap + drift * qx), qt.abs() + (x * qxx).abs() + lap_abs + (drift * qx).abs())
    }
}

/// Differential inequalities of `X = (A+f²)f_x²` and `Y = (A+f²)f_yᵢ²` on interior nodes:
/// `X_t − (xX_xx + ΣX_yy + (v+1)X_x) ≤ −x f_x⁴ + 2|f||f_x|³` and
/// `Y_t − (xY_xx + ΣY_yy + vY_x) ≤ −Y²/(4A²)`.
pub fn bernstein_quantity_check(
    f: &ScalarField,
    v: TransportVelocity,
    a: f64,
    opts: &BernsteinOptions,
) -> Result<EstimateReport> {
    if !(a >= 8.0) {
        return Err(Error::Domain(format!("A must be at least 8, got {a}")));
    }
    let grid = f.grid();
    let n = grid.n();
    let vv = v.get();
    let interior: Vec<usize> =
        (0..grid.len()).filter(|&i| !grid.on_nondegenerate_edge(i, 2) && grid.axis_index(i, 0) >= opts.skip_s_rows).collect();
    if interior.is_empty() {
        return Err(Error::EmptyRegion("no interior node left after skipping boundary layers".into()));
    }
    if f.max_abs() > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!("|f| must be at most 1, got {:e}", f.max_abs())));
    }
    let pf = Parabolic::of(f)?;
    let mut worst_eq = 0.0_f64;
    for &i in &interior {
        let s = s_at(grid, i);
        let (res, scale) = pf.residual(i, s * s, vv);
        worst_eq = worst_eq.max(res.abs() / (1.0 + scale));
    }
    if worst_eq > opts.equation_tol {
        return Err(Error::Precondition(format!("f does not solve the model equation: relative |L0 f| = {worst_eq:e}")));
    }

    let fx = &pf.x;
    let weight = f.map(|u| a + u * u)?;
    let x_field = weight.zip_with(fx, |w, d| w * d * d)?;
    let px = Parabolic::of(&x_field)?;
    let mut worst_x = f64::NEG_INFINITY;
    let mut max_x_res = f64::NEG_INFINITY;
    for &i in &interior {
        let s = s_at(grid, i);
        let x = s * s;
        let (res, scale) = px.residual(i, x, vv + 1.0);
        let (u, d) = (f.value(i), fx.value(i));
        let bound = -x * d.powi(4) + 2.0 * u.abs() * d.abs().powi(3);
        let excess = res - bound;
        max_x_res = max_x_res.max(excess);
        worst_x = worst_x.max(excess / (1.0 + scale + bound.abs()));
    }

    let mut worst_y = f64::NEG_INFINITY;
    let mut max_y_res = f64::NEG_INFINITY;
    for k in 1..n {
        let fy = d1(f, k)?;
        let y_field = weight.zip_with(&fy, |w, d| w * d * d)?;
        let py = Parabolic::of(&y_field)?;
        for &i in &interior {
            let s = s_at(grid, i);
            let (res, scale) = py.residual(i, s * s, vv);
            let yv = y_field.value(i);
            let bound = -yv * yv / (4.0 * a * a);
            let excess = res - bound;
            max_y_res = max_y_res.max(excess);
            worst_y = worst_y.max(excess / (1.0 + scale + bound.abs()));
        }
    }

    Ok(EstimateReport::new("bernstein", max_x_res.max(max_y_res), vec![("A".into(), a)], worst_x.max(worst_y))
        .margin("x_inequality", opts.tol - worst_x)
        .margin("y_inequality", opts.tol - worst_y)
        .detail("x_residual", max_x_res)
        .detail("y_residual", max_y_res)
        .detail("equation_residual", worst_eq)
        .detail("interior_nodes", interior.len() as f64))
}

/// `p = c + c_x x + c_t (t−1) + Σ cᵢ yᵢ + Σ_{i≤j} cᵢⱼ yᵢ yⱼ` around `(0, 0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorPolynomial {
    pub c: f64,
    pub c_x: f64,
    pub c_t: f64,
    pub c_y: Vec<f64>,
    /// Upper triangle, `c_yy[i][j]` for `i ≤ j`; zero below.
    pub c_yy: Vec<Vec<f64>>,
}

impl TaylorPolynomial {
    pub fn eval(&self, x: f64, y: &[f64], t: f64) -> f64 {
        let mut p = self.c + self.c_x * x + self.c_t * (t - 1.0);
        for i in 0..y.len() {
            p += self.c_y[i] * y[i];
            for j in i..y.len() {
                p += self.c_yy[i][j] * y[i] * y[j];
            }
        }
        p
    }
}

fn node_at(grid: &Grid, k: usize, value: f64) -> Option<usize> {
    grid.axis(k).nodes().iter().position(|&z| (z - value).abs() <= 1e-12)
}

/// FD Taylor coefficients at `(0, 0, 1)`; one-sided in `x` and, at the last slice, in `t`.
pub fn taylor_polynomial(f: &ScalarField) -> Result<TaylorPolynomial> {
    let grid = f.grid();
    let n = grid.n();
    let mut multi = vec![0usize; grid.num_axes()];
    for k in 0..grid.num_axes() {
        let target = if k == n { 1.0 } else { 0.0 };
        let i = node_at(grid, k, target).ok_or_else(|| {
            Error::Domain(format!("Taylor stencil needs a node at {target} on axis {k}"))
        })?;
        if k > 0 && k < n && (i == 0 || i + 1 == grid.axis(k).len()) {
            return Err(Error::Domain(format!("Taylor stencil exceeds the grid along axis {k}")));
        }
        multi[k] = i;
    }
    let idx = grid.flat_index(&multi);
    let (fx, _) = x_derivatives(f)?;
    let mut c_y = vec![0.0; n - 1];
    let mut c_yy = vec![vec![0.0; n - 1]; n - 1];
    for i in 0..n - 1 {
        c_y[i] = d1(f, i + 1)?.value(idx);
        for j in i..n - 1 {
            let d = d11(f, i + 1, j + 1)?.value(idx);
            c_yy[i][j] = if i == j { 0.5 * d } else { d };
        }
    }
    Ok(TaylorPolynomial { c: f.value(idx), c_x: fx.value(idx), c_t: d1(f, n)?.value(idx), c_y, c_yy })
}

/// `‖f − p‖_r` on the boxes `B_r` against `(r/s)³‖f‖_s + s²‖L₀f‖_s`.
///
/// Passes when the ratio `‖f − p‖_r / r³` stays within twice its value at the
/// largest radius.
pub fn poly_approx_check(f: &ScalarField, l0f: &ScalarField, s_outer: f64, r_list: &[f64]) -> Result<EstimateReport> {
    if r_list.is_empty() || r_list.iter().any(|&r| !(r > 0.0 && r <= s_outer)) {
        return Err(Error::Domain(format!("radii must lie in (0, {s_outer}]")));
    }
    let grid = f.grid();
    let n = grid.n();
    let p = taylor_polynomial(f)?;
    let outer = ParabolicCube::model_box(n, s_outer)?;
    let f_outer = c0_norm(f, &outer)?;
    let l0_outer = c0_norm(l0f, &outer)?;
    let floor = ROUNDOFF_FLOOR * f_outer.max(1.0);
    let mut radii = r_list.to_vec();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut ratios = Vec::with_capacity(radii.len());
    let mut constant = 0.0_f64;
    let mut c = vec![0.0; grid.num_axes()];
    for &r in &radii {
        let nodes = in_box(grid, &ParabolicCube::model_box(n, r)?)?;
        let err = nodes.iter().fold(0.0_f64, |m, &i| {
            grid.coords_into(i, &mut c);
            let d = (f.value(i) - p.eval(c[0] * c[0], &c[1..n], c[n])).abs();
            m.max(if d <= floor { 0.0 } else { d })
        });
        let bound = (r / s_outer).powi(3) * f_outer + s_outer * s_outer * l0_outer;
        constant = constant.max(quotient(err, bound));
        ratios.push((r, err / r.powi(3)));
    }
    let first = ratios[0].1;
    let max_ratio = ratios.iter().fold(0.0_f64, |m, &(_, q)| m.max(q));
    let cap = 2.0 * first.max(ROUNDOFF_FLOOR);
    Ok(EstimateReport::new("poly_approx", max_ratio, vec![("f_outer".into(), f_outer), ("l0f_outer".into(), l0_outer)], constant)
        .margin("bounded", cap - max_ratio)
        .detail("ratio_smallest_r", ratios[ratios.len() - 1].1)
        .series(Series { name: "poly_ratio".into(), x_label: "r".into(), y_label: "ratio".into(), points: ratios }))
}

/// `‖f‖_{C_s^{2+α}(B_r)}` against `‖f‖_{C⁰(B_1)} + ‖L₀f‖_{C_s^α(B_1)}`.
pub fn schauder_ratio(f: &ScalarField, v: TransportVelocity, r: f64, alpha: f64) -> Result<EstimateReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("r must lie in (0, 1), got {r}")));
    }
    let n = f.grid().n();
    let inner = ParabolicCube::model_box(n, r)?;
    let unit = ParabolicCube::model_box(n, 1.0)?;
    let lhs = cs_norm_2_alpha(f, alpha, &inner)?;
    let l0f = apply_l0(v, f)?;
    let sup = c0_norm(f, &unit)?;
    let l0_sup = c0_norm(&l0f, &unit)?;
    let l0_semi = holder_seminorm(&l0f, alpha, &unit)?;
    let constant = quotient(lhs, sup + l0_sup + l0_semi);
    Ok(EstimateReport::new(
        "schauder",
        lhs,
        vec![("c0".into(), sup), ("l0f_c0".into(), l0_sup), ("l0f_holder".into(), l0_semi)],
        constant,
    )
    .margin("finite", if constant.is_finite() { 0.0 } else { -1.0 }))
}
