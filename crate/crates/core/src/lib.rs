//! Numerical toolkit for the Willmore energy of immersed 2-tori and the
//! bending energy of closed curves in a catalog of product and homogeneous
//! Riemannian 3- and 4-manifolds.
//!
//! Pipeline overview:
//!
//! * [`metric`] — coordinate charts with analytic metric components and
//!   first derivatives; Christoffel symbols, the curvature tensor and
//!   sectional curvatures evaluated pointwise.
//! * [`grid`] — doubly periodic immersion grids and closed-curve grids with
//!   spectral (Fourier) differentiation and periodic quadrature.
//! * [`shape`] — pointwise extrinsic and intrinsic surface geometry:
//!   adapted frames, second fundamental form, mean curvature, umbilicity
//!   deficit, Gauss curvature and the ambient sectional curvature of the
//!   tangent plane.
//! * [`energy`] — the Willmore functional in both of its integrand forms,
//!   bending energy of curves, and closed-form reference values.
//! * [`residual`] — the fourth-order variational residual certifying
//!   Willmore surfaces in 3-dimensional ambient spaces.
//! * [`optim`] — gradient descent over truncated Fourier coefficients and
//!   one-parameter family scans.

pub mod energy;
pub mod error;
pub mod grid;
pub mod metric;
pub mod optim;
pub mod residual;
pub mod shape;
pub mod tensor;

pub use error::{Error, Result};
