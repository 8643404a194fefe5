//! Singular bubbles, their Neumann projections, kernel elements and the
//! reference integrals of the expansion lemmas.

pub mod profile;
pub mod projected;
pub mod radial;
pub mod suite;

pub use profile::{c_gamma, c_gamma_quadrature, c_gamma_reduced, zj, BubbleProfile, ScaleConstants};
pub use projected::{
    diagonal_expansion, dirichlet, project_bubble, project_z, Bubble, KernelElement, ProjectedBubble, Projection, Workspace,
    ANGULAR_POINTS,
};
pub use suite::{closed_form_suite, SuiteEntry};
