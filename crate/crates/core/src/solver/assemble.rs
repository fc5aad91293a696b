//! Monotone finite-difference discretization of `L + c` on one time slice.

use serde::Serialize;

use super::linalg::Csr;
use crate::error::{Error, Result};
use crate::fields::{lagrange3, Grid};
use crate::operators::CoefficientField;

/// Off-diagonal weights more negative than this count as M-matrix violations.
const NEG_TOL: f64 = 1e-12;

/// `L_h + c` on one time slice. Dirichlet rows are empty.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    pub matrix: Csr,
    pub dirichlet: Vec<bool>,
    /// Interior rows where the drift fell back to an upwind difference.
    pub upwind_rows: usize,
    /// Interior rows with a negative off-diagonal weight.
    pub m_matrix_violations: usize,
}

/// `I − Δt (L_h + c)` with identity rows on the lateral boundary.
#[derive(Clone, Debug)]
pub struct StepSystem {
    pub matrix: Csr,
    pub dirichlet: Vec<bool>,
    pub dt: f64,
    /// Rows that are not weakly diagonally dominant with nonpositive off-diagonals.
    pub dominance_violations: usize,
    /// Largest `Δt` keeping every row dominant: `1/c` for `c > 0`, otherwise unbounded.
    pub dt_bound: f64,
    pub upwind_rows: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AssemblyStats {
    pub upwind_rows: usize,
    pub m_matrix_violations: usize,
    pub dominance_violations: usize,
    pub dt_bound: f64,
}

/// True for spatial nodes carrying lateral Dirichlet data: the far `s` face,
/// the near `s` face when it is not the degenerate line, and every `y` face.
pub fn is_lateral(grid: &Grid, p: usize) -> bool {
    let ns = grid.s_axis().len();
    let k = p % ns;
    if k == ns - 1 || (k == 0 && !grid.touches_boundary()) {
        return true;
    }
    (1..grid.n()).any(|a| {
        let i = grid.axis_index(p, a);
        i == 0 || i + 1 == grid.axis(a).len()
    })
}

/// Adds the weights of `coef · ∂_p∂_q u` using the seven-point stencil that
/// keeps the `(±1, ±1)` corner along the diagonal matching the sign of `coef`.
fn push_cross(row: &mut Vec<(usize, f64)>, p: usize, sp: usize, sq: usize, hp: f64, hq: f64, coef: f64) {
    if coef == 0.0 {
        return;
    }
    let w = coef.abs() / (2.0 * hp * hq);
    if coef > 0.0 {
        row.push((p + sp + sq, w));
        row.push((p - sp - sq, w));
    } else {
        row.push((p + sp - sq, w));
        row.push((p - sp + sq, w));
    }
    for nb in [p + sp, p - sp, p + sq, p - sq] {
        row.push((nb, -w));
    }
    row.push((p, 2.0 * w));
}

/// Adds `diff · ∂²u + drift · ∂u` along one uniform axis, central when both
/// neighbour weights stay nonnegative and upwind in the drift otherwise.
fn push_axis(row: &mut Vec<(usize, f64)>, p: usize, stride: usize, h: f64, diff: f64, drift: f64) -> bool {
    let lo = diff / (h * h) - drift / (2.0 * h);
    let hi = diff / (h * h) + drift / (2.0 * h);
    if lo >= 0.0 && hi >= 0.0 {
        row.push((p - stride, lo));
        row.push((p + stride, hi));
        row.push((p, -(lo + hi)));
        false
    } else {
        let (lo, hi) = if drift > 0.0 {
            (diff / (h * h), diff / (h * h) + drift / h)
        } else {
            (diff / (h * h) - drift / h, diff / (h * h))
        };
        row.push((p - stride, lo));
        row.push((p + stride, hi));
        row.push((p, -(lo + hi)));
        true
    }
}

/// Discretizes `L + c` at time `t`.
///
/// The degenerate direction is discretized in `x = s²` on the nonuniform
/// nodes `x_k = s_k²`. The row at `s = 0` is the limit equation, with the
/// transport term `b₁ (u₁ − u₀)/(x₁ − x₀)`.
pub fn assemble_operator(coeffs: &CoefficientField, grid: &Grid, t: f64, c: f64) -> Result<SpatialOperator> {
    let n = grid.n();
    if coeffs.n() != n {
        return Err(Error::Coefficients(format!("coefficients have n = {}, grid has n = {n}", coeffs.n())));
    }
    for k in 0..n {
        if grid.axis(k).len() < 3 {
            return Err(Error::Grid(format!("spatial axis {k} needs at least 3 nodes")));
        }
    }
    let ns = grid.s_axis().len();
    let hs = grid.s_axis().step();
    let xs: Vec<f64> = grid.s_axis().nodes().iter().map(|s| s * s).collect();
    let len = grid.spatial_len();
    let mut rows = Vec::with_capacity(len);
    let mut dirichlet = vec![false; len];
    let mut coords = vec![0.0; grid.num_axes()];
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    let (mut upwind_rows, mut violations) = (0, 0);
    for p in 0..len {
        if is_lateral(grid, p) {
            dirichlet[p] = true;
            rows.push(Vec::new());
            continue;
        }
        grid.coords_into(p, &mut coords);
        coords[n] = t;
        let k = p % ns;
        let x = xs[k];
        coeffs.eval_into(x, &coords[1..n], t, &mut a, &mut b);
        if let Some(v) = a.iter().chain(&b).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: crate::fields::describe_node(grid, p), value: *v });
        }
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(4 * n * n + 1);
        let mut upwind = false;
        if k == 0 {
            let w = b[0] / (xs[1] - xs[0]);
            if b[0] >= 0.0 {
                row.push((p + 1, w));
                row.push((p, -w));
            } else {
                return Err(Error::Coefficients("b1 must be positive on the degenerate line".into()));
            }
        } else {
            let (w1, w2) = lagrange3([xs[k - 1], x, xs[k + 1]], x);
            let diff = x * a[0];
            let lo = diff * w2[0] + b[0] * w1[0];
            let hi = diff * w2[2] + b[0] * w1[2];
            if lo >= 0.0 && hi >= 0.0 {
                row.push((p - 1, lo));
                row.push((p + 1, hi));
                row.push((p, -(lo + hi)));
            } else {
                upwind = true;
                let (lo, hi) = if b[0] > 0.0 {
                    (diff * w2[0], diff * w2[2] + b[0] / (xs[k + 1] - x))
                } else {
                    (diff * w2[0] - b[0] / (x - xs[k - 1]), diff * w2[2])
                };
                row.push((p - 1, lo));
                row.push((p + 1, hi));
                row.push((p, -(lo + hi)));
            }
            for j in 1..n {
                let ay = grid.axis(j);
                push_cross(&mut row, p, 1, grid.stride(j), hs, ay.step(), a[j]);
            }
        }
        for i in 1..n {
            let ai = grid.axis(i);
            upwind |= push_axis(&mut row, p, grid.stride(i), ai.step(), a[i * n + i], b[i]);
            for j in i + 1..n {
                push_cross(&mut row, p, grid.stride(i), grid.stride(j), ai.step(), grid.axis(j).step(), 2.0 * a[i * n + j]);
            }
        }
        row.push((p, c));
        let merged = Csr::from_rows(vec![row]);
        if merged.row(0).any(|(col, v)| col != p && v < -NEG_TOL) {
            violations += 1;
        }
        upwind_rows += upwind as usize;
        rows.push(merged.cols.into_iter().zip(merged.vals).collect());
    }
    Ok(SpatialOperator { matrix: Csr::from_rows(rows), dirichlet, upwind_rows, m_matrix_violations: violations })
}

/// Forms `I − Δt (L_h + c)` from an assembled operator.
pub fn step_system(op: &SpatialOperator, dt: f64, c: f64) -> Result<StepSystem> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let n = op.matrix.n;
    let mut rows = Vec::with_capacity(n);
    let mut dominance_violations = 0;
    for i in 0..n {
        if op.dirichlet[i] {
            rows.push(vec![(i, 1.0)]);
            continue;
        }
        let row: Vec<(usize, f64)> = op
            .matrix
            .row(i)
            .map(|(col, v)| (col, if col == i { 1.0 - dt * v } else { -dt * v }))
            .collect();
        let diag = row.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
        let off: f64 = row.iter().filter(|e| e.0 != i).map(|e| e.1.abs()).sum();
        let positive_off = row.iter().any(|e| e.0 != i && e.1 > NEG_TOL * dt);
        if diag < off - 1e-12 * (1.0 + off) || positive_off {
            dominance_violations += 1;
        }
        rows.push(row);
    }
    Ok(StepSystem {
        matrix: Csr::from_rows(rows),
        dirichlet: op.dirichlet.clone(),
        dt,
        dominance_violations,
        dt_bound: if c > 0.0 { 1.0 / c } else { f64::INFINITY },
        upwind_rows: op.upwind_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{EllipticityParams, TransportVelocity};

    fn params() -> EllipticityParams {
        EllipticityParams::new(0.5, 0.5).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        for name in ["model:v=4", "random:seed=11"] {
            for n in [2, 3] {
                let grid = Grid::uniform(n, (0.0, 1.0, 9), (-1.0, 1.0, 7), (0.0, 1.0, 3)).unwrap();
                let c = CoefficientField::preset(name, n, params()).unwrap();
                let op = assemble_operator(&c, &grid, 0.0, 0.0).unwrap();
                assert_eq!(op.m_matrix_violations, 0, "{name} n={n}");
                let ones = vec![1.0; op.matrix.n];
                let mut out = vec![0.0; op.matrix.n];
                op.matrix.matvec(&ones, &mut out);
                assert!(out.iter().all(|v| v.abs() < 1e-9), "{name} n={n}");
                let sys = step_system(&op, 0.01, 0.0).unwrap();
                assert_eq!(sys.dominance_violations, 0);
            }
        }
    }

    #[test]
    fn row_sums_of_step_matrix() {
        let grid = Grid::uniform(2, (0.0, 1.0, 5), (-1.0, 1.0, 3), (0.0, 1.0, 3)).unwrap();
        let c = CoefficientField::model(2, TransportVelocity::new(1.0).unwrap(), params()).unwrap();
        let op = assemble_operator(&c, &grid, 0.0, 0.0).unwrap();
        let interior: Vec<usize> = (0..op.matrix.n).filter(|&i| !op.dirichlet[i]).collect();
        assert_eq!(interior, vec![5, 6, 7, 8]);
        let sys = step_system(&op, 0.1, 0.0).unwrap();
        for &i in &interior {
            let sum: f64 = sys.matrix.row(i).map(|e| e.1).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        let sys = step_system(&assemble_operator(&c, &grid, 0.0, 2.0).unwrap(), 0.1, 2.0).unwrap();
        assert_eq!(sys.dt_bound, 0.5);
    }

    #[test]
    fn linear_in_x_is_exact() {
        let grid = Grid::uniform(2, (0.0, 1.0, 9), (-1.0, 1.0, 5), (0.0, 1.0, 3)).unwrap();
        let v = 4.0;
        let c = CoefficientField::model(2, TransportVelocity::new(v).unwrap(), params()).unwrap();
        let op = assemble_operator(&c, &grid, 0.0, 0.0).unwrap();
        assert!(op.upwind_rows > 0);
        let u: Vec<f64> = (0..op.matrix.n).map(|p| grid.coords(p)[0].powi(2)).collect();
        let mut out = vec![0.0; op.matrix.n];
        op.matrix.matvec(&u, &mut out);
        for p in 0..op.matrix.n {
            if !op.dirichlet[p] {
                assert!((out[p] - v).abs() < 1e-10);
            }
        }
    }
}
