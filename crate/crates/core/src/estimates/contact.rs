use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{fd_derivatives, ScalarField};
use crate::geometry::ParabolicCube;

const EIG_TOL: f64 = 1e-10;

/// Which contact set an estimate integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum ContactSide {
    /// `E ⪯ 0`, `u_z ≤ 0`, `u_t ≥ 0`.
    #[default]
    Plus,
    /// `E ⪰ 0`, `u_z ≥ 0`, `u_t ≥ 0`.
    Minus,
}

/// Node indicators of the contact sets, indexed like the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactSetResult {
    pub gamma_plus: Vec<bool>,
    pub gamma_minus: Vec<bool>,
    /// `z = s^{2−ν}/(2−ν)` per node; NaN off the cube and on `s = 0`.
    pub z: Vec<f64>,
    /// `u_z` per node, NaN where `z` is.
    pub u_z: Vec<f64>,
    /// Cube nodes on `s = 0`, left out of both sets.
    pub excluded: usize,
    /// Cube nodes with `s > 0`.
    pub evaluated: usize,
}

impl ContactSetResult {
    pub fn mask(&self, side: ContactSide) -> &[bool] {
        match side {
            ContactSide::Plus => &self.gamma_plus,
            ContactSide::Minus => &self.gamma_minus,
        }
    }

    pub fn count(&self, side: ContactSide) -> usize {
        self.mask(side).iter().filter(|&&b| b).count()
    }
}

/// Γ± over the nodes of `cube`, with the matrix
/// `E₁₁ = u_ss + ((ν−1)/s) u_s`, `E₁ᵢ = u_syᵢ`, `Eᵢⱼ = u_yᵢyⱼ`.
pub fn contact_sets(u: &ScalarField, nu: f64, cube: &ParabolicCube) -> Result<ContactSetResult> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Domain(format!("nu must lie in (0, 1), got {nu}")));
    }
    let grid = u.grid();
    for k in 0..grid.num_axes() {
        if grid.axis(k).len() < 5 {
            return Err(Error::Grid(format!("contact sets need at least 5 nodes per axis, axis {k} has {}", grid.axis(k).len())));
        }
    }
    let n = grid.n();
    let d = fd_derivatives(u)?;
    let len = grid.len();
    let mut out = ContactSetResult {
        gamma_plus: vec![false; len],
        gamma_minus: vec![false; len],
        z: vec![f64::NAN; len],
        u_z: vec![f64::NAN; len],
        excluded: 0,
        evaluated: 0,
    };
    let mut e = DMatrix::<f64>::zeros(n, n);
    for idx in grid.nodes_in(cube) {
        let s = grid.s_axis().node(grid.axis_index(idx, 0));
        if s == 0.0 {
            out.excluded += 1;
            continue;
        }
        out.evaluated += 1;
        let u_s = d.u_s.value(idx);
        let u_z = s.powf(nu - 1.0) * u_s;
        let u_t = d.u_t.value(idx);
        out.z[idx] = s.powf(2.0 - nu) / (2.0 - nu);
        out.u_z[idx] = u_z;
        e[(0, 0)] = d.u_ss.value(idx) + (nu - 1.0) / s * u_s;
        for i in 0..n - 1 {
            let sy = d.u_sy[i].value(idx);
            e[(0, i + 1)] = sy;
            e[(i + 1, 0)] = sy;
            for j in 0..n - 1 {
                e[(i + 1, j + 1)] = d.u_yy[i][j].value(idx);
            }
        }
        let scale = 1.0 + e.amax();
        let eig = e.clone().symmetric_eigenvalues();
        let tol = EIG_TOL * scale;
        let lo = eig.min();
        let hi = eig.max();
        let sign_tol = EIG_TOL * (1.0 + u_z.abs().max(u_t.abs()));
        let t_ok = u_t >= -sign_tol;
        out.gamma_minus[idx] = lo >= -tol && u_z >= -sign_tol && t_ok;
        out.gamma_plus[idx] = hi <= tol && u_z <= sign_tol && t_ok;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(Grid::uniform(2, (0.0, 1.0, 11), (-1.0, 1.0, 11), (0.0, 1.0, 6)).unwrap())
    }

    fn whole() -> ParabolicCube {
        ParabolicCube::q_rho(0.5, &[0.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn constants_lie_in_both_sets() {
        let g = grid();
        let u = ScalarField::constant(g.clone(), 3.0);
        let r = contact_sets(&u, 0.5, &whole()).unwrap();
        let s_axis = g.s_axis().len();
        assert_eq!(r.excluded, g.len() / s_axis);
        for idx in 0..g.len() {
            let on_axis = g.axis_index(idx, 0) == 0;
            assert_eq!(r.gamma_plus[idx], !on_axis);
            assert_eq!(r.gamma_minus[idx], !on_axis);
        }
    }

    #[test]
    fn concave_bump_is_in_gamma_plus_beyond_its_peak() {
        let g = grid();
        let (s0, tau) = (0.3, 0.5);
        let u = ScalarField::sample(g.clone(), |x, y, t| -(x.sqrt() - s0).powi(2) - y[0] * y[0] - tau * (1.0 - t)).unwrap();
        let r = contact_sets(&u, 0.5, &whole()).unwrap();
        for idx in 0..g.len() {
            let c = g.coords(idx);
            if c[0] == 0.0 {
                continue;
            }
            // E is negative definite everywhere; u_z ≤ 0 exactly for s ≥ s₀
            let expected = c[0] >= s0 - 1e-12;
            assert_eq!(r.gamma_plus[idx], expected, "at {c:?}");
            assert!(!r.gamma_minus[idx]);
        }
    }

    #[test]
    fn convex_increasing_is_all_gamma_minus() {
        let g = grid();
        // u = s³ + y² + t gives E₁₁ = 4.5 s at ν = 1/2
        let u = ScalarField::sample(g.clone(), |x, y, t| x.powf(1.5) + y[0] * y[0] + t).unwrap();
        let r = contact_sets(&u, 0.5, &whole()).unwrap();
        for idx in 0..g.len() {
            if g.axis_index(idx, 0) > 0 {
                assert!(r.gamma_minus[idx]);
            }
        }
        assert_eq!(r.count(ContactSide::Minus), r.evaluated);
    }

    #[test]
    fn coarse_grid_is_refused() {
        let g = Arc::new(Grid::uniform(2, (0.0, 1.0, 4), (-1.0, 1.0, 11), (0.0, 1.0, 6)).unwrap());
        let u = ScalarField::constant(g, 1.0);
        assert!(contact_sets(&u, 0.5, &whole()).is_err());
    }
}
