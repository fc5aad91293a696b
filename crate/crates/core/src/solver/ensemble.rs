use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{is_lateral, solve_ivbp, Forcing, IvbProblem, SolverConfig};
use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::operators::{CoefficientField, StFn};

/// Random trigonometric polynomial in `(x, y, t)`, rescaled affinely so that
/// its values on the grid's parabolic boundary span `[0.1, 1]`.
pub fn positive_boundary_data(seed: u64, grid: &Grid) -> StFn {
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, Vec<f64>, f64)> = (0..4)
        .map(|_| {
            let k: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(-4.0..4.0)).collect();
            (rng.gen_range(0.2..1.0), k, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let raw = move |x: f64, y: &[f64], t: f64| -> f64 {
        modes
            .iter()
            .map(|(amp, k, ph)| {
                let mut arg = k[0] * x + k[n] * t + ph;
                for (ki, yi) in k[1..n].iter().zip(y) {
                    arg += ki * yi;
                }
                amp * arg.sin()
            })
            .sum()
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut c = vec![0.0; grid.num_axes()];
    let spatial = grid.spatial_len();
    for idx in 0..grid.len() {
        let p = idx % spatial;
        if idx >= spatial && !is_lateral(grid, p) {
            continue;
        }
        grid.coords_into(idx, &mut c);
        let v = raw(c[0] * c[0], &c[1..n], c[n]);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let scale = if hi > lo { 0.9 / (hi - lo) } else { 0.0 };
    Arc::new(move |x, y, t| 0.1 + scale * (raw(x, y, t) - lo))
}

/// Solves `count` homogeneous problems with random positive data.
/// Member `i` uses the `i`-th seed drawn from `ChaCha8(seed)`; members run
/// in parallel and are returned in order.
pub fn random_positive_solution_ensemble(
    seed: u64,
    count: usize,
    coeffs: &CoefficientField,
    grid: Arc<Grid>,
    config: &SolverConfig,
) -> Result<Vec<ScalarField>> {
    if count == 0 {
        return Err(Error::Domain("ensemble count must be at least 1".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| master.next_u64()).collect();
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let data = positive_boundary_data(s, &grid);
            let problem = IvbProblem::new(coeffs.clone(), Forcing::Zero, data.clone(), data);
            let field = solve_ivbp(&problem, grid.clone(), config)?.field;
            let min = field.min();
            if min < 0.0 {
                return Err(Error::Internal(format!("ensemble member {i} went negative ({min:e}): maximum principle violated")));
            }
            Ok(field)
        })
        .collect()
}
