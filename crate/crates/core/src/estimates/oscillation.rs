use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fields::{c0_norm, holder_seminorm, lp_norm_weighted, osc, ScalarField};
use crate::geometry::{ParabolicCube, SPoint, WeightedMeasure};

use super::{forcing_term, quotient, require_inside, EstimateReport, Series};

fn distinct_per_axis(u: &ScalarField, cube: &ParabolicCube) -> usize {
    let grid = u.grid();
    let nodes = grid.nodes_in(cube);
    (0..grid.num_axes())
        .map(|k| nodes.iter().map(|&i| grid.axis_index(i, k)).collect::<BTreeSet<_>>().len())
        .min()
        .unwrap_or(0)
}

/// Decay of `osc` over `Q_{ρ/2^j}(s₀, y₀, t₀)`, `j = 0, …, levels − 1`.
///
/// `θ̂_j = (osc_{j+1} − forcing_j)/osc_j` with the forcing term of `g` on the
/// larger cube; the report carries `max_j θ̂_j` and `α̂ = log₂(1/θ̂)`.
pub fn oscillation_decay(
    u: &ScalarField,
    base: &SPoint,
    rho: f64,
    levels: usize,
    g: &ScalarField,
    mu: &WeightedMeasure,
    theta_max: f64,
) -> Result<EstimateReport> {
    if levels < 2 {
        return Err(Error::Domain(format!("levels must be at least 2, got {levels}")));
    }
    if !(theta_max > 0.0 && theta_max < 1.0) {
        return Err(Error::Domain(format!("theta_max must lie in (0, 1), got {theta_max}")));
    }
    if u.grid() != g.grid() {
        return Err(Error::Grid("u and g live on different grids".into()));
    }
    let cubes: Vec<ParabolicCube> = (0..levels)
        .map(|j| ParabolicCube::q_rho(base.s, &base.y, base.t, rho / f64::powi(2.0, j as i32)))
        .collect::<Result<_>>()?;
    require_inside(u.grid(), &cubes[0])?;
    let smallest = distinct_per_axis(u, &cubes[levels - 1]);
    if smallest < 2 {
        return Err(Error::Grid(format!(
            "the smallest cube (radius {}) has {smallest} node(s) along some axis",
            cubes[levels - 1].radius
        )));
    }
    let oscs: Vec<f64> = cubes.iter().map(|c| osc(u, c)).collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(levels - 1);
    let mut theta = 0.0_f64;
    let mut sentinel = false;
    for j in 0..levels - 1 {
        let forcing = forcing_term(g, &cubes[j], mu)?;
        let t = if oscs[j] == 0.0 {
            sentinel = true;
            0.0
        } else {
            (oscs[j + 1] - forcing) / oscs[j]
        };
        theta = theta.max(t);
        points.push((cubes[j].radius, t));
    }
    let alpha = if theta > 0.0 { (1.0 / theta).log2() } else { f64::INFINITY };
    let report = EstimateReport::new("oscillation", theta, vec![("osc_outer".into(), oscs[0])], theta)
        .margin("theta_max", theta_max - theta)
        .detail("alpha_hat", alpha)
        .detail("constant_sentinel", if sentinel { 1.0 } else { 0.0 })
        .series(Series { name: "theta".into(), x_label: "rho".into(), y_label: "theta_hat".into(), points });
    Ok(report)
}

/// `c0 + [u]_α` on `C_r` against `‖u‖_{C⁰(C_1)} + ‖g‖_{L^{n+1}(C_ρ, dμ)}`, with nested
/// cubes `C_r ⊂ C_ρ ⊂ C_1` sharing the base point.
pub fn holder_bound_check(
    u: &ScalarField,
    g: &ScalarField,
    base: &SPoint,
    r: f64,
    rho: f64,
    mu: &WeightedMeasure,
    alpha: f64,
) -> Result<EstimateReport> {
    if !(r > 0.0 && r < rho && rho <= 1.0) {
        return Err(Error::Domain(format!("need 0 < r < rho <= 1, got r = {r}, rho = {rho}")));
    }
    let cube = |radius| ParabolicCube::q_rho(base.s, &base.y, base.t, radius);
    let (c_r, c_rho, c_1) = (cube(r)?, cube(rho)?, cube(1.0)?);
    let n = u.grid().n() as f64;
    let sup_r = c0_norm(u, &c_r)?;
    let semi = holder_seminorm(u, alpha, &c_r)?;
    let sup_1 = c0_norm(u, &c_1)?;
    let g_norm = lp_norm_weighted(g, n + 1.0, &c_rho, mu)?;
    let lhs = sup_r + semi;
    let constant = quotient(lhs, sup_1 + g_norm);
    Ok(EstimateReport::new("holder", lhs, vec![("c0_outer".into(), sup_1), ("g_norm".into(), g_norm)], constant)
        .margin("finite", if constant.is_finite() { 0.0 } else { -1.0 })
        .detail("seminorm", semi)
        .detail("alpha", alpha)
        .detail("rho0_term", rho.powf(-alpha) * c0_norm(u, &c_rho)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::uniform(2, (0.0, 1.0, 33), (-1.0, 1.0, 65), (0.0, 1.0, 257)).unwrap())
    }

    fn mu() -> WeightedMeasure {
        WeightedMeasure::new(0.5).unwrap()
    }

    #[test]
    fn linear_in_y_halves_exactly() {
        let g = grid();
        let zero = ScalarField::constant(g.clone(), 0.0);
        let u = ScalarField::sample(g.clone(), |_, y, _| y[0]).unwrap();
        let base = SPoint::new(0.5, vec![0.0], 1.0).unwrap();
        let r = oscillation_decay(&u, &base, 0.5, 4, &zero, &mu(), 0.95).unwrap();
        for &(_, t) in &r.series[0].points {
            assert_eq!(t, 0.5);
        }
        assert_eq!(r.get_detail("alpha_hat"), Some(1.0));
        assert!(r.pass);
    }

    #[test]
    fn constants_are_sentinel_passes() {
        let g = grid();
        let zero = ScalarField::constant(g.clone(), 0.0);
        let u = ScalarField::constant(g.clone(), 2.0);
        let base = SPoint::new(0.5, vec![0.0], 1.0).unwrap();
        let r = oscillation_decay(&u, &base, 0.5, 3, &zero, &mu(), 0.95).unwrap();
        assert!(r.pass);
        assert_eq!(r.get_detail("constant_sentinel"), Some(1.0));
    }

    #[test]
    fn too_many_levels_is_an_error() {
        let g = grid();
        let zero = ScalarField::constant(g.clone(), 0.0);
        let u = ScalarField::constant(g.clone(), 2.0);
        let base = SPoint::new(0.5, vec![0.0], 1.0).unwrap();
        assert!(oscillation_decay(&u, &base, 0.5, 9, &zero, &mu(), 0.95).is_err());
    }

    #[test]
    fn holder_of_constant_is_one() {
        let g = grid();
        let zero = ScalarField::constant(g.clone(), 0.0);
        let u = ScalarField::constant(g.clone(), 3.0);
        let base = SPoint::new(0.0, vec![0.0], 1.0).unwrap();
        let r = holder_bound_check(&u, &zero, &base, 0.25, 0.5, &mu(), 0.5).unwrap();
        assert_eq!(r.measured_constant, 1.0);
    }

    #[test]
    fn square_root_is_lipschitz_in_the_metric() {
        let g = Arc::new(Grid::uniform(2, (0.0, 1.0, 41), (-1.0, 1.0, 9), (0.0, 1.0, 5)).unwrap());
        let zero = ScalarField::constant(g.clone(), 0.0);
        let u = ScalarField::sample(g.clone(), |x, _, _| x.sqrt()).unwrap();
        let base = SPoint::new(0.0, vec![0.0], 1.0).unwrap();
        let r = holder_bound_check(&u, &zero, &base, 0.5, 0.75, &mu(), 1.0).unwrap();
        assert!((r.get_detail("seminorm").unwrap() - 1.0).abs() < 1e-12);
    }
}
