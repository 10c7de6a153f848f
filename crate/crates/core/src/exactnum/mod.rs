//! Exact rational arithmetic, parameter polynomials, rational linear
//! algebra, and exact integration over polygonal cells.

mod linalg;
mod poly;
mod polygon;
mod rat;

pub use linalg::{determinant, is_negative_definite, rat_solve_symmetric, rational_roots, solve_poly};
pub use poly::ParamPoly;
pub use polygon::{poly_integrate_region, Polygon};
pub use rat::{ParseRatError, Rat};

/// Errors from the exact-arithmetic layer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("integration cell has zero area")]
    DegenerateCell,
}
