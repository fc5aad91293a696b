use crate::error::{Error, Result};
use crate::fields::{lp_norm_weighted_masked, ScalarField};
use crate::geometry::{rho_nu, ParabolicCube, WeightedMeasure};

use super::contact::{contact_sets, ContactSide};
use super::{quotient, EstimateReport};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbpOptions {
    pub c_max: f64,
    pub side: ContactSide,
    /// Slack for `u ≤ 0` on the parabolic boundary, relative to `max |u|`.
    pub boundary_tol: f64,
}

impl Default for AbpOptions {
    fn default() -> Self {
        Self { c_max: 1e3, side: ContactSide::Plus, boundary_tol: 1e-12 }
    }
}

/// `sup u⁺` against `ρ^{n/(n+1)} ρ_ν^{1/(n+1)} ‖g⁻‖_{L^{n+1}(Γ, dμ)}`.
///
/// `g` is the right-hand side of `Lu − u_t = g`.
pub fn abp_check(
    u: &ScalarField,
    g: &ScalarField,
    cube: &ParabolicCube,
    mu: &WeightedMeasure,
    opts: &AbpOptions,
) -> Result<EstimateReport> {
    let grid = u.grid();
    if g.grid() != grid {
        return Err(Error::Grid("u and g live on different grids".into()));
    }
    let nodes = grid.nodes_in(cube);
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("abp cube contains no grid node".into()));
    }
    let slack = opts.boundary_tol * u.max_abs().max(1.0);
    let mut c = vec![0.0; grid.num_axes()];
    let mut boundary_nodes = 0usize;
    for &idx in &nodes {
        grid.coords_into(idx, &mut c);
        if cube.on_parabolic_boundary_s(&c, 1e-9) {
            boundary_nodes += 1;
            if u.value(idx) > slack {
                return Err(Error::Precondition(format!(
                    "u = {:e} > 0 on the parabolic boundary at {c:?}",
                    u.value(idx)
                )));
            }
        }
    }
    let lhs = nodes.iter().fold(0.0_f64, |m, &i| m.max(u.value(i)));
    let contact = contact_sets(u, mu.nu(), cube)?;
    let g_minus = g.map(|v| (-v).max(0.0))?;
    let n = grid.n() as f64;
    let norm = lp_norm_weighted_masked(&g_minus, n + 1.0, cube, mu, Some(contact.mask(opts.side)))?;
    let rho = cube.radius;
    let prefactor = rho.powf(n / (n + 1.0)) * rho_nu(cube.s0(), rho, mu.nu()).powf(1.0 / (n + 1.0));
    let rhs = prefactor * norm;
    let constant = quotient(lhs, rhs);
    let margin = if constant.is_finite() { opts.c_max - constant } else { -1.0 };
    Ok(EstimateReport::new(
        "abp",
        lhs,
        vec![("scale".into(), prefactor), ("g_minus_contact_norm".into(), norm)],
        constant,
    )
    .margin("c_max", margin)
    .detail("contact_nodes", contact.count(opts.side) as f64)
    .detail("excluded_axis_nodes", contact.excluded as f64)
    .detail("boundary_nodes", boundary_nodes as f64))
}
