//! Space-time grids uniform in `s = √x`, sampled scalar fields, finite
//! differences and the discrete norms measured against the singular metric.

mod deriv;
mod io;
mod norms;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ParabolicCube;

pub use deriv::{d1, d11, d2, fd_derivatives, lagrange3, x_derivatives, Derivatives};
pub use io::{read_field, write_field};
pub use norms::{
    c0_norm, cs_norm_2_alpha, discrete_norms, holder_seminorm, holder_seminorm_nodes, lp_norm_weighted,
    lp_norm_weighted_masked, osc, DiscreteNorms, PairSampling,
};

/// Membership slack for closed region tests; absorbs rounding in node coordinates.
pub(crate) const MEMBERSHIP_EPS: f64 = 1e-12;

/// A uniform axis `lo, lo + h, …, hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
}

impl Axis {
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Grid(format!("axis needs at least 2 nodes, got {count}")));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::Grid(format!("axis bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| lo + i as f64 * h).collect();
        nodes[count - 1] = hi;
        Ok(Self { lo, hi, nodes })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }
}

/// Tensor grid over `(s, y_2, …, y_n, t)`.
///
/// Storage order is `s` fastest, then the tangential axes in order, then `t`.
/// Axis indices used throughout the crate: `0` is `s`, `1..n` are the
/// tangential axes, `n` is time.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    s: Axis,
    y: Vec<Axis>,
    t: Axis,
    strides: Vec<usize>,
    spatial_len: usize,
}

impl Grid {
    pub fn new(s: Axis, y: Vec<Axis>, t: Axis) -> Result<Self> {
        if s.lo() < 0.0 {
            return Err(Error::Grid(format!("s axis must start at s >= 0, got {}", s.lo())));
        }
        if y.is_empty() {
            return Err(Error::Grid("dimension n >= 2 requires at least one tangential axis".into()));
        }
        let mut strides = Vec::with_capacity(y.len() + 2);
        let mut stride = 1;
        strides.push(stride);
        stride *= s.len();
        for axis in &y {
            strides.push(stride);
            stride *= axis.len();
        }
        let spatial_len = stride;
        strides.push(stride);
        Ok(Self { s, y, t, strides, spatial_len })
    }

    /// Same `(lo, hi, count)` on every tangential axis.
    pub fn uniform(
        n: usize,
        s: (f64, f64, usize),
        y: (f64, f64, usize),
        t: (f64, f64, usize),
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!("dimension must be >= 2, got {n}")));
        }
        let y_axis = Axis::uniform(y.0, y.1, y.2)?;
        Self::new(Axis::uniform(s.0, s.1, s.2)?, vec![y_axis; n - 1], Axis::uniform(t.0, t.1, t.2)?)
    }

    /// Spatial dimension `n` (one degenerate axis plus `n − 1` tangential axes).
    pub fn n(&self) -> usize {
        self.y.len() + 1
    }

    pub fn s_axis(&self) -> &Axis {
        &self.s
    }

    pub fn y_axes(&self) -> &[Axis] {
        &self.y
    }

    pub fn t_axis(&self) -> &Axis {
        &self.t
    }

    pub fn axis(&self, k: usize) -> &Axis {
        let n = self.n();
        match k {
            0 => &self.s,
            k if k < n => &self.y[k - 1],
            k if k == n => &self.t,
            _ => panic!("axis {k} out of range for n = {n}"),
        }
    }

    pub fn num_axes(&self) -> usize {
        self.n() + 1
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    pub fn dims(&self) -> Vec<usize> {
        (0..self.num_axes()).map(|k| self.axis(k).len()).collect()
    }

    pub fn len(&self) -> usize {
        self.spatial_len * self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial_len(&self) -> usize {
        self.spatial_len
    }

    /// Index of node `idx` along axis `k`.
    pub fn axis_index(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.axis(k).len()
    }

    /// Fills `out` with `[s, y_2, …, y_n, t]` of node `idx`.
    pub fn coords_into(&self, idx: usize, out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate().take(self.num_axes()) {
            *slot = self.axis(k).node(self.axis_index(idx, k));
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_axes()];
        self.coords_into(idx, &mut out);
        out
    }

    /// True when the s axis starts on the degenerate boundary `x = 0`.
    pub fn touches_boundary(&self) -> bool {
        self.s.lo() == 0.0
    }

    /// Below this value of `s` the chain rule to x-derivatives is refused.
    pub fn s_floor(&self) -> f64 {
        if self.touches_boundary() {
            0.5 * self.s.node(1)
        } else {
            0.0
        }
    }

    /// Indices of the nodes lying in the closed cube.
    pub fn nodes_in(&self, cube: &ParabolicCube) -> Vec<usize> {
        let mut buf = vec![0.0; self.num_axes()];
        (0..self.len())
            .filter(|&idx| {
                self.coords_into(idx, &mut buf);
                cube.contains_s(&buf)
            })
            .collect()
    }

    /// Calls `f(cell, midpoint)` for every grid cell; `cell` holds the lower
    /// node index along each axis.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], &[f64])) {
        let na = self.num_axes();
        let counts: Vec<usize> = (0..na).map(|k| self.axis(k).len() - 1).collect();
        let mut cell = vec![0usize; na];
        let mut mid: Vec<f64> = (0..na).map(|k| self.cell_mid(k, 0)).collect();
        loop {
            f(&cell, &mid);
            let mut k = 0;
            loop {
                if k == na {
                    return;
                }
                cell[k] += 1;
                if cell[k] < counts[k] {
                    mid[k] = self.cell_mid(k, cell[k]);
                    break;
                }
                cell[k] = 0;
                mid[k] = self.cell_mid(k, 0);
                k += 1;
            }
        }
    }

    fn cell_mid(&self, k: usize, i: usize) -> f64 {
        let nodes = self.axis(k).nodes();
        0.5 * (nodes[i] + nodes[i + 1])
    }

    /// Flat index of the node with per-axis indices `multi`.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// True when node `idx` sits on the outermost layer along some axis.
    /// The degenerate edge `s = 0` is not counted as an edge.
    pub fn on_nondegenerate_edge(&self, idx: usize, layers: usize) -> bool {
        (0..self.num_axes()).any(|k| {
            let i = self.axis_index(idx, k);
            let m = self.axis(k).len();
            let low_edge = i < layers && !(k == 0 && self.touches_boundary());
            low_edge || i + layers >= m
        })
    }
}

/// Grid-sampled space-time function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match node count {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some((idx, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node: describe_node(&grid, idx), value: v });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let len = grid.len();
        Self { grid, values: vec![c; len] }
    }

    /// Evaluates `f(x, y, t)` at every node, with `x = s²`.
    pub fn sample<F>(grid: Arc<Grid>, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64], f64) -> f64,
    {
        let na = grid.num_axes();
        let mut buf = vec![0.0; na];
        let mut values = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            grid.coords_into(idx, &mut buf);
            let s = buf[0];
            let v = f(s * s, &buf[1..na - 1], buf[na - 1]);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: describe_node(&grid, idx), value: v });
            }
            values.push(v);
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Grid("fields live on different grids".into()));
        }
        Self::from_values(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Values on time slice `it` (spatial layout).
    pub fn slice(&self, it: usize) -> &[f64] {
        let len = self.grid.spatial_len();
        &self.values[it * len..(it + 1) * len]
    }
}

pub(crate) fn describe_node(grid: &Grid, idx: usize) -> String {
    let c = grid.coords(idx);
    let n = grid.n();
    let y: Vec<String> = c[1..n].iter().map(|v| format!("{v}")).collect();
    format!("#{idx} (s={}, y=[{}], t={})", c[0], y.join(", "), c[n])
}
