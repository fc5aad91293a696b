//! Numerical toolkit for degenerate parabolic equations
//! `u_t = x a₁₁ u_xx + 2√x a₁ⱼ u_xyⱼ + aᵢⱼ u_yᵢyⱼ + b₁ u_x + bⱼ u_yⱼ + g` on the half-space `x ≥ 0`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fields;
pub mod geometry;
pub mod operators;
pub mod regularize;
pub mod barriers;
pub mod estimates;
pub mod solver;

pub use error::{Error, Result};
pub use estimates::{EstimateReport, Series};
pub use fields::{Axis, Grid, ScalarField};
pub use geometry::{CubeKind, ParabolicCube, Point, SPoint, TimeOrientation, WeightedMeasure, YNorm};
