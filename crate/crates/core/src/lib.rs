//! Exact Bayesian network structure learning by branch-and-cut over
//! family variables.
//!
//! The pipeline is: score a discrete dataset into a table of candidate
//! parent sets ([`scores`]), build the integer program ([`ip_model`]) and
//! solve it ([`solver`]) with an in-crate simplex engine ([`lp`]), cluster
//! cuts ([`separation`]) and Gomory cuts ([`gomory`]). The [`oracle`]
//! module holds independent exact learners used for verification.

pub mod gomory;
pub mod ip_model;
pub mod lp;
pub mod oracle;
pub mod scores;
pub mod separation;
pub mod solver;

pub use ip_model::{build_model, Digraph, IpModel};
pub use scores::{enumerate_scores, prune, read_dataset, read_score_file, write_score_file, Dataset, LocalScoreTable};
pub use solver::{solve, SolveResult, SolverParams};
