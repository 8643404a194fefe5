//! Linear theory around the ansatz: the operator `𝓛`, the approximate kernel
//! `K_ξ`, coercivity, the Newton corrector and the model kernel count.

pub mod criticality;
pub mod model_kernel;
pub mod newton;
pub mod operator;
mod saddle;

pub use criticality::{criticality_equivalence_check, CriticalityReport, GridNode};
pub use model_kernel::{model_kernel_dimension, KernelDimension};
pub use newton::{newton_correct, Corrected, NewtonOptions, NewtonReport, NewtonTrace};
pub use operator::{coercivity_constant, kernel_space, newton_operator, Coercivity, KernelSpace, LinearizedOperator, Variant};
