use super::{Grid, ScalarField};
use crate::error::{Error, Result};

fn require_nodes(grid: &Grid, k: usize, min: usize) -> Result<()> {
    let m = grid.axis(k).len();
    if m < min {
        return Err(Error::Grid(format!("axis {k} has {m} nodes; derivatives need at least {min}")));
    }
    Ok(())
}

/// First derivative along axis `k`: central inside, second-order one-sided at the ends.
pub fn d1(field: &ScalarField, k: usize) -> Result<ScalarField> {
    let grid = field.grid();
    require_nodes(grid, k, 3)?;
    let (m, stride, h) = (grid.axis(k).len(), grid.stride(k), grid.axis(k).step());
    let v = field.values();
    let out = (0..grid.len())
        .map(|idx| {
            let i = grid.axis_index(idx, k);
            let at = |j: usize| v[idx - i * stride + j * stride];
            if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if i == m - 1 {
                (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h)
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            }
        })
        .collect();
    ScalarField::from_values(field.grid_arc().clone(), out)
}

/// Second derivative along axis `k`. The end formula is second order when the
/// axis has at least four nodes.
pub fn d2(field: &ScalarField, k: usize) -> Result<ScalarField> {
    let grid = field.grid();
    require_nodes(grid, k, 3)?;
    let (m, stride, h) = (grid.axis(k).len(), grid.stride(k), grid.axis(k).step());
    let h2 = h * h;
    let v = field.values();
    let out = (0..grid.len())
        .map(|idx| {
            let i = grid.axis_index(idx, k);
            let at = |j: usize| v[idx - i * stride + j * stride];
            if i == 0 {
                if m >= 4 {
                    (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
                } else {
                    (at(0) - 2.0 * at(1) + at(2)) / h2
                }
            } else if i == m - 1 {
                if m >= 4 {
                    (2.0 * at(m - 1) - 5.0 * at(m - 2) + 4.0 * at(m - 3) - at(m - 4)) / h2
                } else {
                    (at(m - 1) - 2.0 * at(m - 2) + at(m - 3)) / h2
                }
            } else {
                (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2
            }
        })
        .collect();
    ScalarField::from_values(field.grid_arc().clone(), out)
}

/// Mixed or pure second derivative along axes `a` and `b`.
pub fn d11(field: &ScalarField, a: usize, b: usize) -> Result<ScalarField> {
    if a == b {
        d2(field, a)
    } else {
        d1(&d1(field, a)?, b)
    }
}

/// First- and second-derivative weights at `z` of the quadratic through
/// `(p[0], p[1], p[2])`.
pub fn lagrange3(p: [f64; 3], z: f64) -> ([f64; 3], [f64; 3]) {
    let [a, b, c] = p;
    let da = (a - b) * (a - c);
    let db = (b - a) * (b - c);
    let dc = (c - a) * (c - b);
    (
        [(2.0 * z - b - c) / da, (2.0 * z - a - c) / db, (2.0 * z - a - b) / dc],
        [2.0 / da, 2.0 / db, 2.0 / dc],
    )
}

/// `(u_x, u_xx)` from three-point stencils on the nodes `x_k = s_k²`.
/// Exact for functions quadratic in `x`, including at `x = 0`.
pub fn x_derivatives(field: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let grid = field.grid();
    require_nodes(grid, 0, 3)?;
    let xs: Vec<f64> = grid.s_axis().nodes().iter().map(|s| s * s).collect();
    let m = xs.len();
    let weights: Vec<(usize, [f64; 3], [f64; 3])> = (0..m)
        .map(|i| {
            let first = i.saturating_sub(1).min(m - 3);
            let (w1, w2) = lagrange3([xs[first], xs[first + 1], xs[first + 2]], xs[i]);
            (first, w1, w2)
        })
        .collect();
    let v = field.values();
    let mut ux = Vec::with_capacity(v.len());
    let mut uxx = Vec::with_capacity(v.len());
    for idx in 0..grid.len() {
        let i = grid.axis_index(idx, 0);
        let (first, w1, w2) = &weights[i];
        let row = idx - i + first;
        let (f0, f1, f2) = (v[row], v[row + 1], v[row + 2]);
        ux.push(w1[0] * f0 + w1[1] * f1 + w1[2] * f2);
        uxx.push(w2[0] * f0 + w2[1] * f1 + w2[2] * f2);
    }
    Ok((
        ScalarField::from_values(field.grid_arc().clone(), ux)?,
        ScalarField::from_values(field.grid_arc().clone(), uxx)?,
    ))
}

/// Discrete derivatives in the `(s, y, t)` coordinates.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub u_s: ScalarField,
    pub u_ss: ScalarField,
    /// `u_y[i]` differentiates along tangential axis `i` (0-based).
    pub u_y: Vec<ScalarField>,
    /// Full symmetric table, `u_yy[i][j]`.
    pub u_yy: Vec<Vec<ScalarField>>,
    pub u_sy: Vec<ScalarField>,
    pub u_t: ScalarField,
    s_floor: f64,
}

impl Derivatives {
    pub fn s_floor(&self) -> f64 {
        self.s_floor
    }

    fn s_at(&self, idx: usize) -> Result<f64> {
        let grid = self.u_s.grid();
        let s = grid.s_axis().node(grid.axis_index(idx, 0));
        if s <= self.s_floor {
            return Err(Error::BelowSFloor { s, floor: self.s_floor });
        }
        Ok(s)
    }

    /// `u_x = u_s/(2s)`.
    pub fn u_x(&self, idx: usize) -> Result<f64> {
        let s = self.s_at(idx)?;
        Ok(self.u_s.value(idx) / (2.0 * s))
    }

    /// `u_xx = (u_ss − u_s/s)/(4s²)`.
    pub fn u_xx(&self, idx: usize) -> Result<f64> {
        let s = self.s_at(idx)?;
        Ok((self.u_ss.value(idx) - self.u_s.value(idx) / s) / (4.0 * s * s))
    }
}

pub fn fd_derivatives(field: &ScalarField) -> Result<Derivatives> {
    let grid = field.grid();
    let n = grid.n();
    for k in 0..grid.num_axes() {
        require_nodes(grid, k, 3)?;
    }
    let u_s = d1(field, 0)?;
    let u_ss = d2(field, 0)?;
    let u_y: Vec<ScalarField> = (1..n).map(|k| d1(field, k)).collect::<Result<_>>()?;
    let mut u_yy: Vec<Vec<ScalarField>> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut row = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            row.push(if j < i { u_yy[j][i].clone() } else if i == j { d2(field, i + 1)? } else { d1(&u_y[i], j + 1)? });
        }
        u_yy.push(row);
    }
    let u_sy = u_y.iter().map(|f| d1(f, 0)).collect::<Result<_>>()?;
    let u_t = d1(field, n)?;
    Ok(Derivatives { u_s, u_ss, u_y, u_yy, u_sy, u_t, s_floor: grid.s_floor() })
}
