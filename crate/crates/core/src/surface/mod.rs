//! Model geometries, isothermal charts, cutoffs, meshes, quadrature and norms.

pub mod chart;
pub mod cutoff;
pub mod mesh;
pub mod model;
pub mod norms;
pub mod quadrature;

pub use chart::{chart_at, Chart};
pub use cutoff::{CutoffKind, CutoffProfile};
pub use mesh::{mesh_model, Mark, Mesh};
pub use model::{Location, ModelKind, SurfaceModel};
pub use norms::{h1_product, integrate, lp_norm, Field, QuadPoint, Quadrature};
