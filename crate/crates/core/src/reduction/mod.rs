//! Blow-up configurations, the reduced functional and the ansatz `W`.

pub mod ansatz;
pub mod config;
pub mod critical;
pub mod functional;

pub use ansatz::{assemble_w, j_limit, j_rho, AnsatzState, PartitionRule, SweepRow};
pub use config::{BlowupConfig, Center};
pub use critical::{find_critical, CriticalReport, Objective, SearchStatus, StabilityReport};
pub use functional::{grad_f, grad_f_fd, reduced_f, scaling_d, ReducedObjective};
