//! Implicit-Euler solver for `u_t = Lu + cu + g` on half-space boxes.

mod assemble;
mod ensemble;
pub mod file;
mod linalg;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::operators::{validate_coefficients, CoefficientField, EllipticityParams, StFn, TransportVelocity};

pub use assemble::{assemble_operator, is_lateral, step_system, AssemblyStats, SpatialOperator, StepSystem};
pub use ensemble::{positive_boundary_data, random_positive_solution_ensemble};
pub use linalg::{bicgstab, BandedLu, Csr};

/// Source term of the equation.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Function(StFn),
    /// Sampled on the solution grid; linear in time between slices.
    Field(ScalarField),
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Function(_) => write!(f, "Function(..)"),
            Forcing::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// `u_t = Lu + cu + g` with initial data on the first time slice and
/// Dirichlet data on the lateral boundary. The degenerate line `s = 0`
/// carries no boundary condition.
#[derive(Clone)]
pub struct IvbProblem {
    pub coeffs: CoefficientField,
    pub forcing: Forcing,
    pub initial: StFn,
    pub boundary: StFn,
    pub c: f64,
}

impl std::fmt::Debug for IvbProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IvbProblem")
            .field("coeffs", &self.coeffs.label())
            .field("forcing", &self.forcing)
            .field("c", &self.c)
            .finish_non_exhaustive()
    }
}

impl IvbProblem {
    pub fn new(coeffs: CoefficientField, forcing: Forcing, initial: StFn, boundary: StFn) -> Self {
        Self { coeffs, forcing, initial, boundary, c: 0.0 }
    }

    /// Model operator with `a = I`, `b = (v, 0, …)` and data from one function.
    pub fn model(n: usize, v: TransportVelocity, forcing: Forcing, data: StFn) -> Result<Self> {
        let coeffs = CoefficientField::model(n, v, model_params(v)?)?;
        Ok(Self::new(coeffs, forcing, data.clone(), data))
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

/// Structure constants under which `a = I`, `b = (v, 0, …)` is admissible.
pub fn model_params(v: TransportVelocity) -> Result<EllipticityParams> {
    let v = v.get();
    let lambda = (1.0 / v).min(0.5);
    let nu = (2.0 * v).min(0.5);
    EllipticityParams::new(lambda, nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LinearSolver {
    /// Banded LU for `n = 2`, BiCGSTAB otherwise.
    Auto,
    Banded,
    BiCgStab,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Upper bound on the time step; each output interval is split evenly.
    pub dt: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 0.01, tolerance: 1e-10, max_iterations: 5000, linear_solver: LinearSolver::Auto }
    }
}

impl SolverConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(Error::Domain(format!("tolerance must lie in (0, 1e-4], got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: ScalarField,
    /// `max |(u^{m+1} − u^m)/Δt − (L_h + c)u^{m+1} − g^{m+1}|` per implicit step.
    pub residuals: Vec<f64>,
    pub dt: f64,
    pub stats: AssemblyStats,
}

fn forcing_at(problem: &IvbProblem, grid: &Grid, t: f64, out: &mut [f64]) {
    let n = grid.n();
    match &problem.forcing {
        Forcing::Zero => out.iter_mut().for_each(|v| *v = 0.0),
        Forcing::Function(g) => {
            let mut c = vec![0.0; grid.num_axes()];
            for (p, slot) in out.iter_mut().enumerate() {
                grid.coords_into(p, &mut c);
                *slot = g(c[0] * c[0], &c[1..n], t);
            }
        }
        Forcing::Field(f) => {
            let taxis = grid.t_axis();
            let nodes = taxis.nodes();
            let j = nodes.partition_point(|&tn| tn <= t).clamp(1, nodes.len() - 1);
            let (t0, t1) = (nodes[j - 1], nodes[j]);
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            let (a, b) = (f.slice(j - 1), f.slice(j));
            for (p, slot) in out.iter_mut().enumerate() {
                *slot = (1.0 - w) * a[p] + w * b[p];
            }
        }
    }
}

fn check_compatibility(problem: &IvbProblem, grid: &Grid) -> Result<()> {
    let n = grid.n();
    let t0 = grid.t_axis().lo();
    let mut c = vec![0.0; grid.num_axes()];
    for p in 0..grid.spatial_len() {
        if !is_lateral(grid, p) {
            continue;
        }
        grid.coords_into(p, &mut c);
        let (x, y) = (c[0] * c[0], &c[1..n]);
        let (a, b) = ((problem.initial)(x, y, t0), (problem.boundary)(x, y, t0));
        if (a - b).abs() > 1e-8 {
            return Err(Error::Precondition(format!(
                "initial and lateral data disagree by {:e} at {}",
                (a - b).abs(),
                crate::fields::describe_node(grid, p)
            )));
        }
    }
    Ok(())
}

enum Factored {
    Banded(BandedLu),
    Iterative,
}

fn factor(sys: &StepSystem, config: &SolverConfig, n: usize) -> Result<Factored> {
    let banded = match config.linear_solver {
        LinearSolver::Auto => n == 2,
        LinearSolver::Banded => true,
        LinearSolver::BiCgStab => false,
    };
    Ok(if banded { Factored::Banded(BandedLu::factor(&sys.matrix)?) } else { Factored::Iterative })
}

fn solve_system(sys: &StepSystem, f: &Factored, rhs: &[f64], guess: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    match f {
        Factored::Banded(lu) => Ok(lu.solve(rhs)),
        Factored::Iterative => {
            let mut x = guess.to_vec();
            bicgstab(&sys.matrix, rhs, &mut x, config.tolerance, config.max_iterations)?;
            Ok(x)
        }
    }
}

/// Marches implicit Euler over the grid's time nodes and returns the full
/// space-time field.
pub fn solve_ivbp(problem: &IvbProblem, grid: Arc<Grid>, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let report = validate_coefficients(&problem.coeffs, &grid)?;
    if !report.pass {
        return Err(Error::Coefficients(format!(
            "structure conditions fail: ellipticity {:.3e}, |a| {:.3e}, |b| {:.3e}, transport {:.3e}",
            report.ellipticity_margin, report.a_bound_margin, report.b_bound_margin, report.transport_margin
        )));
    }
    check_compatibility(problem, &grid)?;
    let n = grid.n();
    let len = grid.spatial_len();
    let t_nodes = grid.t_axis().nodes().to_vec();
    let interval = grid.t_axis().step();
    let substeps = ((interval / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = interval / substeps as f64;

    let mut coords = vec![0.0; grid.num_axes()];
    let mut u: Vec<f64> = (0..len)
        .map(|p| {
            grid.coords_into(p, &mut coords);
            (problem.initial)(coords[0] * coords[0], &coords[1..n], t_nodes[0])
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    values.extend_from_slice(&u);

    let time_dependent = problem.coeffs.depends_on_t();
    let mut cached: Option<(SpatialOperator, StepSystem, Factored)> = None;
    let mut stats = AssemblyStats::default();
    let mut residuals = Vec::with_capacity(substeps * (t_nodes.len() - 1));
    let mut g = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    let mut lu_new = vec![0.0; len];
    let mut step = 0;
    for j in 1..t_nodes.len() {
        for m in 1..=substeps {
            step += 1;
            let t_new = if m == substeps { t_nodes[j] } else { t_nodes[j - 1] + m as f64 * dt };
            if cached.is_none() || time_dependent {
                let op = assemble_operator(&problem.coeffs, &grid, t_new, problem.c)?;
                let sys = step_system(&op, dt, problem.c)?;
                stats.upwind_rows = stats.upwind_rows.max(op.upwind_rows);
                stats.m_matrix_violations = stats.m_matrix_violations.max(op.m_matrix_violations);
                stats.dominance_violations = stats.dominance_violations.max(sys.dominance_violations);
                stats.dt_bound = sys.dt_bound;
                let f = factor(&sys, config, n)?;
                cached = Some((op, sys, f));
            }
            let (op, sys, f) = cached.as_ref().expect("assembled above");
            forcing_at(problem, &grid, t_new, &mut g);
            for p in 0..len {
                rhs[p] = if sys.dirichlet[p] {
                    grid.coords_into(p, &mut coords);
                    (problem.boundary)(coords[0] * coords[0], &coords[1..n], t_new)
                } else {
                    u[p] + dt * g[p]
                };
            }
            let u_new = solve_system(sys, f, &rhs, &u, config)?;
            if u_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverNaN { step });
            }
            op.matrix.matvec(&u_new, &mut lu_new);
            let res = (0..len)
                .filter(|&p| !sys.dirichlet[p])
                .map(|p| ((u_new[p] - u[p]) / dt - lu_new[p] - g[p]).abs())
                .fold(0.0, f64::max);
            residuals.push(res);
            u = u_new;
        }
        values.extend_from_slice(&u);
    }
    let field = ScalarField::from_values(grid, values)?;
    Ok(Solution { field, residuals, dt, stats })
}

/// [`solve_ivbp`] for the model operator `a = I`, `b = (v, 0, …)`.
pub fn solve_model(
    v: TransportVelocity,
    g: Forcing,
    f0: StFn,
    boundary: StFn,
    c: f64,
    grid: Arc<Grid>,
    config: &SolverConfig,
) -> Result<Solution> {
    let coeffs = CoefficientField::model(grid.n(), v, model_params(v)?)?;
    let problem = IvbProblem { coeffs, forcing: g, initial: f0, boundary, c };
    solve_ivbp(&problem, grid, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::manufactured_solutions;

    fn grid(ns: usize, nt: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, 0.5, nt)).unwrap())
    }

    fn max_err(field: &ScalarField, exact: &StFn, slice: Option<usize>) -> f64 {
        let g = field.grid();
        let n = g.n();
        let range = match slice {
            Some(it) => it * g.spatial_len()..(it + 1) * g.spatial_len(),
            None => 0..g.len(),
        };
        range
            .map(|i| {
                let c = g.coords(i);
                (field.value(i) - exact(c[0] * c[0], &c[1..n], c[n])).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn constants_are_fixed_points() {
        let one: StFn = Arc::new(|_, _, _| 1.0);
        let v = TransportVelocity::new(2.0).unwrap();
        let sol = solve_model(v, Forcing::Zero, one.clone(), one, 0.0, grid(9, 5), &SolverConfig::with_dt(0.05)).unwrap();
        assert!(sol.field.values().iter().all(|x| (x - 1.0).abs() < 1e-13));
        let zero: StFn = Arc::new(|_, _, _| 0.0);
        let sol = solve_model(v, Forcing::Zero, zero.clone(), zero, 0.0, grid(9, 5), &SolverConfig::with_dt(0.05)).unwrap();
        assert!(sol.field.values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn linear_solution_is_exact() {
        for v in [0.25, 1.0, 4.0] {
            let tv = TransportVelocity::new(v).unwrap();
            let f = manufactured_solutions(tv, 2).unwrap()[0].f_fn();
            let sol = solve_model(tv, Forcing::Zero, f.clone(), f.clone(), 0.0, grid(17, 9), &SolverConfig::with_dt(0.02)).unwrap();
            assert!(max_err(&sol.field, &f, None) < 1e-10, "v={v}");
            assert!(sol.residuals.iter().all(|r| *r < 1e-8));
        }
    }

    #[test]
    fn zeroth_order_term() {
        let tv = TransportVelocity::new(1.0).unwrap();
        let c = 1.0;
        let f: StFn = Arc::new(|x, _, t| x + t);
        let g: StFn = Arc::new(move |x, _, t| -c * (x + t));
        let sol =
            solve_model(tv, Forcing::Function(g), f.clone(), f.clone(), c, grid(17, 9), &SolverConfig::with_dt(0.02)).unwrap();
        assert!(max_err(&sol.field, &f, None) < 1e-10);
    }

    #[test]
    fn incompatible_data_rejected() {
        let tv = TransportVelocity::new(1.0).unwrap();
        let a: StFn = Arc::new(|_, _, _| 0.0);
        let b: StFn = Arc::new(|_, _, _| 1.0);
        let err = solve_model(tv, Forcing::Zero, a, b, 0.0, grid(9, 3), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn three_dimensional_linear_solution() {
        let tv = TransportVelocity::new(1.0).unwrap();
        let g = Arc::new(Grid::uniform(3, (0.0, 1.0, 9), (-1.0, 1.0, 9), (0.0, 0.2, 3)).unwrap());
        let f: StFn = Arc::new(|x, y, t| x + t + y[0] - 2.0 * y[1]);
        let sol = solve_model(tv, Forcing::Zero, f.clone(), f.clone(), 0.0, g, &SolverConfig::with_dt(0.05)).unwrap();
        assert!(max_err(&sol.field, &f, None) < 1e-8);
    }
}
