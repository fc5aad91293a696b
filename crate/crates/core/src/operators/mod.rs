//! The operator `L`, its form in `s = √x`, the model operator `L₀`, the
//! coefficient fields and manufactured solutions.

mod apply;
mod coeffs;
pub mod expr;
mod manufactured;

pub use apply::{apply_l, apply_l0, apply_ls};
pub use coeffs::{
    validate_coefficients, Coef, CoefficientField, EllipticityParams, TransportVelocity, TrigSum, ValidationReport,
};
pub use expr::Expr;
pub use manufactured::{caloric_quadratic, manufactured_solutions, ManufacturedSolution, Poly, StFn};
