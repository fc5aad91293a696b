use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{d1, d11, x_derivatives, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{s_distance_s, ParabolicCube, WeightedMeasure};

fn region_nodes(grid: &Grid, cube: &ParabolicCube) -> Result<Vec<usize>> {
    if cube.n() != grid.n() {
        return Err(Error::Domain(format!("cube dimension {} does not match grid dimension {}", cube.n(), grid.n())));
    }
    let nodes = grid.nodes_in(cube);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no grid node inside {:?} cube of radius {}", cube.kind, cube.radius)));
    }
    Ok(nodes)
}

/// `max − min` over the nodes inside the cube.
pub fn osc(field: &ScalarField, cube: &ParabolicCube) -> Result<f64> {
    let nodes = region_nodes(field.grid(), cube)?;
    let (lo, hi) = nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        let v = field.value(i);
        (lo.min(v), hi.max(v))
    });
    Ok(hi - lo)
}

/// `max |u|` over the nodes inside the cube.
pub fn c0_norm(field: &ScalarField, cube: &ParabolicCube) -> Result<f64> {
    let nodes = region_nodes(field.grid(), cube)?;
    Ok(nodes.iter().fold(0.0_f64, |m, &i| m.max(field.value(i).abs())))
}

/// `(∫_cube |u|^p s^{ν−1} ds dy dt)^{1/p}`.
///
/// Cells whose midpoint lies in the cube are integrated with the multilinear
/// interpolant of the nodal values of `|u|^p`; the weight `s^{ν−1}` is
/// integrated exactly against each hat function.
pub fn lp_norm_weighted(field: &ScalarField, p: f64, cube: &ParabolicCube, mu: &WeightedMeasure) -> Result<f64> {
    lp_norm_weighted_masked(field, p, cube, mu, None)
}

/// [`lp_norm_weighted`] with the integrand set to zero at nodes where `mask` is false.
pub fn lp_norm_weighted_masked(
    field: &ScalarField,
    p: f64,
    cube: &ParabolicCube,
    mu: &WeightedMeasure,
    mask: Option<&[bool]>,
) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("p must be finite and >= 1, got {p}")));
    }
    let grid = field.grid();
    if let Some(m) = mask {
        if m.len() != grid.len() {
            return Err(Error::Grid("mask length does not match grid".into()));
        }
    }
    let na = grid.num_axes();
    let weights: Vec<Vec<(f64, f64)>> = (0..na)
        .map(|k| {
            let nodes = grid.axis(k).nodes();
            nodes
                .windows(2)
                .map(|w| if k == 0 { mu.hat_weights(w[0], w[1]) } else { (0.5 * (w[1] - w[0]), 0.5 * (w[1] - w[0])) })
                .collect()
        })
        .collect();
    let powered: Vec<f64> = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| if mask.is_none_or(|m| m[i]) { v.abs().powf(p) } else { 0.0 })
        .collect();
    let mut total = 0.0;
    grid.for_each_cell(|cell, mid| {
        if !cube.contains_s(mid) {
            return;
        }
        let base = grid.flat_index(cell);
        for corner in 0..(1usize << na) {
            let mut w = 1.0;
            let mut idx = base;
            for k in 0..na {
                let (lo, hi) = weights[k][cell[k]];
                if corner >> k & 1 == 1 {
                    w *= hi;
                    idx += grid.stride(k);
                } else {
                    w *= lo;
                }
            }
            total += w * powered[idx];
        }
    });
    Ok(total.powf(1.0 / p))
}

/// How node pairs are chosen for Hölder seminorms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSampling {
    /// Regions with at most this many nodes use every pair.
    pub exhaustive_limit: usize,
    /// Random pairs drawn above the limit, in addition to all axis-adjacent pairs.
    pub random_pairs: usize,
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        Self { exhaustive_limit: 2000, random_pairs: 1_000_000, seed: 0 }
    }
}

fn node_coords(grid: &Grid, nodes: &[usize]) -> Vec<Vec<f64>> {
    nodes.iter().map(|&i| grid.coords(i)).collect()
}

fn pair_quotient(n: usize, a: &[f64], b: &[f64], va: f64, vb: f64, alpha: f64) -> f64 {
    let d = s_distance_s(a[0], &a[1..n], a[n], b[0], &b[1..n], b[n]);
    if d == 0.0 {
        0.0
    } else {
        (va - vb).abs() / d.powf(alpha)
    }
}

/// `max |u(P) − u(Q)| / s_distance(P, Q)^α` over node pairs of the region.
pub fn holder_seminorm(field: &ScalarField, alpha: f64, region: &ParabolicCube) -> Result<f64> {
    let nodes = region_nodes(field.grid(), region)?;
    let values: Vec<f64> = nodes.iter().map(|&i| field.value(i)).collect();
    holder_seminorm_nodes(field.grid(), &nodes, &values, alpha, PairSampling::default())
}

/// Seminorm of `values[j]` attached to grid nodes `nodes[j]`.
pub fn holder_seminorm_nodes(
    grid: &Grid,
    nodes: &[usize],
    values: &[f64],
    alpha: f64,
    sampling: PairSampling,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if nodes.len() < 2 {
        return Err(Error::EmptyRegion("Hölder seminorm needs at least two nodes".into()));
    }
    let n = grid.n();
    let coords = node_coords(grid, nodes);
    let m = nodes.len();
    let mut best = 0.0_f64;
    if m <= sampling.exhaustive_limit {
        for a in 0..m {
            for b in a + 1..m {
                best = best.max(pair_quotient(n, &coords[a], &coords[b], values[a], values[b], alpha));
            }
        }
        return Ok(best);
    }
    let position: std::collections::HashMap<usize, usize> = nodes.iter().enumerate().map(|(j, &i)| (i, j)).collect();
    for a in 0..m {
        for k in 0..grid.num_axes() {
            let i = grid.axis_index(nodes[a], k);
            if i + 1 < grid.axis(k).len() {
                if let Some(&b) = position.get(&(nodes[a] + grid.stride(k))) {
                    best = best.max(pair_quotient(n, &coords[a], &coords[b], values[a], values[b], alpha));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    for _ in 0..sampling.random_pairs {
        let a = rng.gen_range(0..m);
        let b = rng.gen_range(0..m);
        best = best.max(pair_quotient(n, &coords[a], &coords[b], values[a], values[b], alpha));
    }
    Ok(best)
}

/// `‖u‖_{C⁰} + Σ (‖D‖_{C⁰} + [D]_α)` over the derivative fields
/// `u_t, x u_xx, u_{y_i y_j}, u_x, u_{y_i}` on the region.
pub fn cs_norm_2_alpha(field: &ScalarField, alpha: f64, region: &ParabolicCube) -> Result<f64> {
    let grid = field.grid();
    let nodes = region_nodes(grid, region)?;
    if nodes.iter().any(|&i| grid.on_nondegenerate_edge(i, 2)) {
        return Err(Error::Domain("region must stay at least two cells inside the grid's lateral edges".into()));
    }
    let n = grid.n();
    let (ux, uxx) = x_derivatives(field)?;
    let mut derived: Vec<Vec<f64>> = Vec::new();
    let restrict = |f: &ScalarField| nodes.iter().map(|&i| f.value(i)).collect::<Vec<f64>>();
    derived.push(restrict(&d1(field, n)?));
    derived.push(
        nodes
            .iter()
            .map(|&i| {
                let s = grid.s_axis().node(grid.axis_index(i, 0));
                s * s * uxx.value(i)
            })
            .collect(),
    );
    derived.push(restrict(&ux));
    for i in 1..n {
        derived.push(restrict(&d1(field, i)?));
        for j in i..n {
            derived.push(restrict(&d11(field, i, j)?));
        }
    }
    let mut total = nodes.iter().fold(0.0_f64, |m, &i| m.max(field.value(i).abs()));
    for values in &derived {
        total += values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if nodes.len() >= 2 {
            total += holder_seminorm_nodes(grid, &nodes, values, alpha, PairSampling::default())?;
        }
    }
    Ok(total)
}

/// Bundle of the norms of one field on one region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteNorms {
    pub c0: f64,
    /// `c0 + [u]_α`.
    pub holder_alpha: f64,
    pub cs_2_alpha: f64,
    pub lp_weighted: f64,
}

pub fn discrete_norms(
    field: &ScalarField,
    alpha: f64,
    p: f64,
    region: &ParabolicCube,
    mu: &WeightedMeasure,
) -> Result<DiscreteNorms> {
    let c0 = c0_norm(field, region)?;
    Ok(DiscreteNorms {
        c0,
        holder_alpha: c0 + holder_seminorm(field, alpha, region)?,
        cs_2_alpha: cs_norm_2_alpha(field, alpha, region)?,
        lp_weighted: lp_norm_weighted(field, p, region, mu)?,
    })
}
