use super::coeffs::{CoefficientField, TransportVelocity};
use crate::error::{Error, Result};
use crate::fields::{d1, d11, d2, x_derivatives, ScalarField};

fn check_dims(coeffs: &CoefficientField, field: &ScalarField) -> Result<()> {
    if coeffs.n() != field.grid().n() {
        return Err(Error::Coefficients(format!(
            "coefficients have n = {}, field has n = {}",
            coeffs.n(),
            field.grid().n()
        )));
    }
    Ok(())
}

struct Tangential {
    u_y: Vec<ScalarField>,
    u_yy: Vec<Vec<ScalarField>>,
    u_sy: Vec<ScalarField>,
}

fn tangential(field: &ScalarField) -> Result<Tangential> {
    let n = field.grid().n();
    let u_y: Vec<ScalarField> = (1..n).map(|k| d1(field, k)).collect::<Result<_>>()?;
    let mut u_yy = Vec::with_capacity(n - 1);
    for i in 1..n {
        u_yy.push((1..n).map(|j| d11(field, i, j)).collect::<Result<Vec<_>>>()?);
    }
    let u_sy = u_y.iter().map(|f| d1(f, 0)).collect::<Result<_>>()?;
    Ok(Tangential { u_y, u_yy, u_sy })
}

/// Shared evaluation loop: `pure(idx, s, a, b)` supplies the part that
/// differs between the x-form and the s-form.
fn assemble(
    coeffs: &CoefficientField,
    field: &ScalarField,
    pure: impl Fn(usize, f64, &[f64], &[f64]) -> f64,
) -> Result<ScalarField> {
    check_dims(coeffs, field)?;
    let grid = field.grid();
    let n = grid.n();
    let tan = tangential(field)?;
    let mut c = vec![0.0; grid.num_axes()];
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let mut out = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        grid.coords_into(idx, &mut c);
        let s = c[0];
        coeffs.eval_into(s * s, &c[1..n], c[n], &mut a, &mut b);
        let mut v = pure(idx, s, &a, &b);
        for i in 1..n {
            if s > 0.0 {
                v += a[i] * tan.u_sy[i - 1].value(idx);
            }
            v += b[i] * tan.u_y[i - 1].value(idx);
            for j in 1..n {
                v += a[i * n + j] * tan.u_yy[i - 1][j - 1].value(idx);
            }
        }
        out.push(v);
    }
    ScalarField::from_values(field.grid_arc().clone(), out)
}

/// `Lu = x a₁₁ u_xx + 2√x a₁ⱼ u_xyⱼ + aᵢⱼ u_yᵢyⱼ + b₁ u_x + bⱼ u_yⱼ`.
///
/// The x-derivatives use three-point stencils on the nodes `x = s²`; the
/// cross term is evaluated as `a₁ⱼ u_syⱼ` and vanishes at `s = 0`, where the
/// row reduces to `b₁ u_x + aᵢⱼ u_yᵢyⱼ + bⱼ u_yⱼ`.
pub fn apply_l(coeffs: &CoefficientField, field: &ScalarField) -> Result<ScalarField> {
    let (ux, uxx) = x_derivatives(field)?;
    assemble(coeffs, field, |idx, s, a, b| s * s * a[0] * uxx.value(idx) + b[0] * ux.value(idx))
}

/// `L` written in `s = √x`:
/// `(a₁₁/4) u_ss + ((2b₁ − a₁₁)/(4s)) u_s + a₁ⱼ u_syⱼ + aᵢⱼ u_yᵢyⱼ + bⱼ u_yⱼ`.
///
/// At `s = 0` the quotient `u_s/s` is replaced by its limit `u_ss(0)`, taken
/// from the even extension `2(u₁ − u₀)/h²`.
pub fn apply_ls(coeffs: &CoefficientField, field: &ScalarField) -> Result<ScalarField> {
    let u_s = d1(field, 0)?;
    let u_ss = d2(field, 0)?;
    let grid = field.grid();
    let h = grid.s_axis().step();
    let v = field.values();
    assemble(coeffs, field, |idx, s, a, b| {
        if s > 0.0 {
            0.25 * a[0] * u_ss.value(idx) + (2.0 * b[0] - a[0]) / (4.0 * s) * u_s.value(idx)
        } else {
            0.5 * b[0] * 2.0 * (v[idx + 1] - v[idx]) / (h * h)
        }
    })
}

/// `L₀f = f_t − (x f_xx + Σ f_yᵢyᵢ + v f_x)`.
pub fn apply_l0(v: TransportVelocity, field: &ScalarField) -> Result<ScalarField> {
    let grid = field.grid();
    let n = grid.n();
    let (ux, uxx) = x_derivatives(field)?;
    let u_t = d1(field, n)?;
    let u_yy: Vec<ScalarField> = (1..n).map(|k| d2(field, k)).collect::<Result<_>>()?;
    let v = v.get();
    let out = (0..grid.len())
        .map(|idx| {
            let s = grid.s_axis().node(grid.axis_index(idx, 0));
            let lap: f64 = u_yy.iter().map(|f| f.value(idx)).sum();
            u_t.value(idx) - (s * s * uxx.value(idx) + lap + v * ux.value(idx))
        })
        .collect();
    ScalarField::from_values(field.grid_arc().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::operators::coeffs::EllipticityParams;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid(ns: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, 1.0, 5)).unwrap())
    }

    fn model(v: f64) -> CoefficientField {
        CoefficientField::model(2, TransportVelocity::new(v).unwrap(), EllipticityParams::new(0.5, 0.5).unwrap()).unwrap()
    }

    fn max_abs_diff(f: &ScalarField, exact: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let g = f.grid();
        (0..g.len())
            .map(|i| {
                let c = g.coords(i);
                (f.value(i) - exact(c[0] * c[0], c[1], c[2])).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn apply_l_examples() {
        let v = 0.7;
        let g = grid(9);
        let c = model(v);
        let f = ScalarField::sample(g.clone(), |x, _, t| x + v * t).unwrap();
        assert!(max_abs_diff(&apply_l(&c, &f).unwrap(), |_, _, _| v) < 1e-12);
        let f = ScalarField::sample(g.clone(), |_, y, _| y[0]).unwrap();
        assert!(max_abs_diff(&apply_l(&c, &f).unwrap(), |_, _, _| 0.0) < 1e-12);
        let f = ScalarField::sample(g.clone(), |x, _, _| x * x).unwrap();
        assert!(max_abs_diff(&apply_l(&c, &f).unwrap(), |x, _, _| 2.0 * (1.0 + v) * x) < 1e-10);
    }

    #[test]
    fn apply_ls_examples() {
        let v = 1.3;
        let g = grid(9);
        let c = model(v);
        let f = ScalarField::sample(g.clone(), |x, _, _| x).unwrap();
        let ls = apply_ls(&c, &f).unwrap();
        let l = apply_l(&c, &f).unwrap();
        assert!(max_abs_diff(&ls, |_, _, _| v) < 1e-10);
        assert!(max_abs_diff(&ls.zip_with(&l, |a, b| a - b).unwrap(), |_, _, _| 0.0) < 1e-8);
        let f = ScalarField::constant(g.clone(), 4.0);
        assert!(apply_ls(&c, &f).unwrap().max_abs() < 1e-12);
        let f = ScalarField::sample(g.clone(), |_, y, _| y[0] * y[0]).unwrap();
        assert!(max_abs_diff(&apply_ls(&CoefficientField::preset("identity", 2, c.params()).unwrap(), &f).unwrap(), |_, _, _| 2.0) < 1e-10);
    }

    #[test]
    fn forms_agree_at_second_order() {
        let c = CoefficientField::preset("random:seed=3", 2, EllipticityParams::new(0.5, 0.5).unwrap()).unwrap();
        let err = |ns: usize| {
            let g = grid(ns);
            let f = ScalarField::sample(g.clone(), |x, y, t| (x + 0.5 * y[0]).sin() * (1.0 + t)).unwrap();
            let d = apply_l(&c, &f).unwrap().zip_with(&apply_ls(&c, &f).unwrap(), |a, b| a - b).unwrap();
            // compare away from the lateral edges and the degenerate line
            (0..g.len())
                .filter(|&i| {
                    let cc = g.coords(i);
                    cc[0] >= 0.25 && cc[0] <= 0.75 && cc[1].abs() <= 0.5
                })
                .map(|i| d.value(i).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(17) / err(33);
        assert!(ratio > 3.0, "ratio {ratio}");
    }

    #[test]
    fn apply_l0_examples() {
        let v = 1.0;
        let g = grid(9);
        let tv = TransportVelocity::new(v).unwrap();
        let f = ScalarField::sample(g.clone(), |x, _, t| x + v * t).unwrap();
        assert!(apply_l0(tv, &f).unwrap().max_abs() < 1e-12);
        let f = ScalarField::sample(g.clone(), |x, _, t| x * x + 2.0 * (1.0 + v) * x * t + v * (1.0 + v) * t * t).unwrap();
        assert!(apply_l0(tv, &f).unwrap().max_abs() < 1e-10);
        let f = ScalarField::constant(g.clone(), -2.0);
        assert!(apply_l0(tv, &f).unwrap().max_abs() < 1e-12);
        let f = ScalarField::sample(g.clone(), |x, y, t| x * x + y[0] + t).unwrap();
        let via_l = apply_l(&model(v), &f).unwrap();
        let l0 = apply_l0(tv, &f).unwrap();
        let ut = d1(&f, 2).unwrap();
        for i in 0..g.len() {
            assert!((l0.value(i) - (ut.value(i) - via_l.value(i))).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn apply_l_is_linear(alpha in -3.0..3.0_f64, beta in -3.0..3.0_f64, seed in 0u64..20) {
            let c = CoefficientField::random(2, seed, EllipticityParams::new(0.5, 0.5).unwrap()).unwrap();
            let g = grid(7);
            let u = ScalarField::sample(g.clone(), |x, y, t| (2.0 * x).cos() + y[0] * t).unwrap();
            let w = ScalarField::sample(g.clone(), |x, y, _| x.sqrt() * y[0] * y[0]).unwrap();
            let combo = u.zip_with(&w, |p, q| alpha * p + beta * q).unwrap();
            let lhs = apply_l(&c, &combo).unwrap();
            let (lu, lw) = (apply_l(&c, &u).unwrap(), apply_l(&c, &w).unwrap());
            for i in 0..g.len() {
                let rhs = alpha * lu.value(i) + beta * lw.value(i);
                prop_assert!((lhs.value(i) - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
