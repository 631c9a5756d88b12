//! Quantum operators on surfaces embedded in three-dimensional space.
//!
//! The crate builds the differential geometry of a parametrized surface from
//! second-order derivative jets, samples complex wavefunctions on structured
//! grids over the chart, and realizes the Laplace–Beltrami operator, the
//! Hermitian Cartesian momenta `p_i = -iħ(x_i^μ ∂_μ + H n_i)` and several
//! operator-ordered kinetic energies as field-to-field maps. Verification
//! suites compare these operators against each other and against closed
//! forms.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// `!(x < tol)` is deliberate: NaN residuals must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod ode;
pub mod operators;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod surfaces;

pub use error::{Error, Result};
pub use fields::{inner_product, partial, random_test_field, FdOrder, PhysicalParams};
pub use geometry::{frame_at, jet_at, mean_curvature_vector};
pub use report::{Check, Expectation, Report};
pub use scalar::Real;
pub use surfaces::{make_surface, reference_check, SurfaceKind};

pub type Surface = surfaces::Surface<f64>;
pub type Grid = fields::Grid<f64>;
pub type ScalarField = fields::ScalarField<f64>;
pub type GeomFrame = geometry::GeomFrame<f64>;
pub type Jet2 = geometry::Jet2<f64>;

pub type Surface32 = surfaces::Surface<f32>;
pub type Grid32 = fields::Grid<f32>;
pub type ScalarField32 = fields::ScalarField<f32>;
pub type GeomFrame32 = geometry::GeomFrame<f32>;
