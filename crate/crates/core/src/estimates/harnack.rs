use crate::error::{Error, Result};
use crate::fields::{lp_norm_weighted, lp_norm_weighted_masked, ScalarField};
use crate::geometry::{ParabolicCube, SPoint, WeightedMeasure};

use super::{forcing_term, quotient, require_inside, EstimateReport};

fn same_grid(u: &ScalarField, g: &ScalarField) -> Result<()> {
    if u.grid() != g.grid() {
        return Err(Error::Grid("u and g live on different grids".into()));
    }
    Ok(())
}

fn extremes(u: &ScalarField, cube: &ParabolicCube) -> Result<(f64, f64)> {
    let nodes = u.grid().nodes_in(cube);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no grid node in the cube of radius {}", cube.radius)));
    }
    Ok(nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        let v = u.value(i);
        (lo.min(v), hi.max(v))
    }))
}

/// `sup` over `Q_{ρ/2}(s₀, y₀, t₀ − 3ρ²/4)` against `inf` over `Q_{ρ/2}(s₀, y₀, t₀)`
/// plus the forcing term of `g` on `Q_ρ(s₀, y₀, t₀)`.
pub fn harnack_quotient(
    u: &ScalarField,
    g: &ScalarField,
    s0: f64,
    y0: &[f64],
    t0: f64,
    rho: f64,
    mu: &WeightedMeasure,
) -> Result<EstimateReport> {
    same_grid(u, g)?;
    let enclosing = ParabolicCube::q_rho(s0, y0, t0, rho)?;
    require_inside(u.grid(), &enclosing)?;
    let (lo, _) = extremes(u, &enclosing)?;
    if lo < 0.0 {
        return Err(Error::Precondition(format!("u takes the negative value {lo:e} on the enclosing cube")));
    }
    let earlier = ParabolicCube::q_rho(s0, y0, t0 - 0.75 * rho * rho, 0.5 * rho)?;
    let later = ParabolicCube::q_rho(s0, y0, t0, 0.5 * rho)?;
    let (_, sup) = extremes(u, &earlier)?;
    let (inf, _) = extremes(u, &later)?;
    let forcing = forcing_term(g, &enclosing, mu)?;
    let constant = quotient(sup, inf + forcing);
    Ok(EstimateReport::new("harnack", sup, vec![("inf_later".into(), inf), ("forcing".into(), forcing)], constant)
        .margin("finite", if constant.is_finite() { 0.0 } else { -1.0 })
        .detail("rho", rho))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthOptions {
    /// Smallness threshold for the forcing term.
    pub eps0: f64,
    /// Required measure fraction of the sublevel set.
    pub k: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self { eps0: 0.1, k: 0.01 }
    }
}

/// μ-measure fraction of `{u ≤ K}` in `Q_ρ(s₀, y₀, t_b + ρ²)`, where `base = (s₀, y₀, t_b)`.
///
/// The hypotheses `inf_{Q²} u ≤ 1` on `Q² = Q_{3ρ/2}(s₀, y₀, t_b + 10ρ²/4)`, `u ≥ 0` and
/// the forcing smallness on `Q_{3√2ρ}(s₀, y₀, t_b + 18ρ²)` are checked; when one fails
/// the report is marked not applicable. The outer cube is clipped to the grid.
pub fn growth_lemma_check(
    u: &ScalarField,
    g: &ScalarField,
    base: &SPoint,
    rho: f64,
    k_level: f64,
    mu: &WeightedMeasure,
    opts: &GrowthOptions,
) -> Result<EstimateReport> {
    same_grid(u, g)?;
    let grid = u.grid();
    let (s0, y0, tb) = (base.s, base.y.as_slice(), base.t);
    let r2 = rho * rho;
    let sub = ParabolicCube::q_rho(s0, y0, tb + r2, rho)?;
    let q2 = ParabolicCube::q_rho(s0, y0, tb + 2.5 * r2, 1.5 * rho)?;
    let outer = ParabolicCube::q_rho(s0, y0, tb + 18.0 * r2, 3.0 * 2f64.sqrt() * rho)?;
    require_inside(grid, &sub)?;
    require_inside(grid, &q2)?;
    let clipped = require_inside(grid, &outer).is_err();

    let (outer_min, _) = extremes(u, &outer)?;
    let (q2_inf, _) = extremes(u, &q2)?;
    let forcing = forcing_term(g, &outer, mu)?;

    let ones = ScalarField::constant(u.grid_arc().clone(), 1.0);
    let mask: Vec<bool> = u.values().iter().map(|&v| v <= k_level).collect();
    let inside = lp_norm_weighted_masked(&ones, 1.0, &sub, mu, Some(&mask))?;
    let total = lp_norm_weighted(&ones, 1.0, &sub, mu)?;
    let fraction = quotient(inside, total);

    let report = EstimateReport::new("growth", fraction, vec![("k".into(), opts.k)], fraction)
        .detail("inf_q2", q2_inf)
        .detail("min_outer", outer_min)
        .detail("forcing", forcing)
        .detail("outer_clipped", if clipped { 1.0 } else { 0.0 });
    let applicable = q2_inf <= 1.0 && outer_min >= 0.0 && forcing <= opts.eps0;
    let report = report.margin("fraction", fraction - opts.k);
    Ok(if applicable { report } else { report.not_applicable() })
}
