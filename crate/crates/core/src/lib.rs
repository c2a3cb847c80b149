//! Randomized block coordinate descent over networks for separable convex
//! problems `min sum_i f_i(x_i)` subject to `sum_i x_i = 0`.
//!
//! Each iteration samples a path of `tau` vertices in the communication graph
//! and moves only those blocks along a closed-form feasible direction.

pub mod blocks;
pub mod certificates;
pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod graph;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod par;
pub mod probdesign;
pub mod solver;

pub use blocks::BlockVector;
pub use error::{Error, Result};
pub use graph::{enumerate_paths, make_topology, Network, PathSet, Topology};
pub use objective::{NodeFunction, SeparableObjective};
pub use probdesign::{GTau, PathDistribution};
pub use solver::{run, SolveReport, SolverState, StopRule};
