//! Free material optimization of two-dimensional thermal conductivity tensors
//! whose antisymmetric part models the thermal Hall (Righi-Leduc) effect.
//!
//! The crate is organized bottom-up:
//!
//! - [`mesh`]: structured quadrilateral meshes with region and boundary tags.
//! - [`material`]: the four-field design parameterization of the effective
//!   conductivity tensor and its analytic derivatives.
//! - [`fem`]: bilinear finite-element assembly, Dirichlet elimination, solves,
//!   flux recovery and the reaction-diffusion update operator.
//! - [`objectives`]: temperature-minimization and heat-path-switching
//!   functionals together with their adjoint loads.
//! - [`sensitivity`]: discrete adjoint gradients with respect to nodal design
//!   fields.
//! - [`optimizer`]: moment-based sensitivities, the reaction-diffusion design
//!   update and the optimization loop.
//! - [`presets`]: the default unit-square geometries and material cases.

pub mod error;
pub mod fem;
pub mod material;
pub mod mesh;
pub mod objectives;
pub mod optimizer;
pub mod presets;
pub mod sensitivity;
pub mod sparse;

pub use error::{Error, Result};
pub use material::{ConductivityTensor, DesignFields, MaterialParams};
pub use mesh::{BoundaryKind, Mesh, Region, RegionSpec, Side};
