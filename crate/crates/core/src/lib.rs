//! Causal network inference for coupled dynamical systems, based on the
//! correlation-dimension geometric information flow measure (GeoC) and the
//! oGeoC forward/backward discovery algorithms.
//!
//! The pipeline has four stages, each with its own module:
//!
//! * [`dynamics`] simulates networks of coupled logistic maps and generates
//!   benchmark graphs, producing [`dynamics::TimeSeriesPanel`] data.
//! * [`corrdim`] estimates the correlation dimension of a point cloud from
//!   the Grassberger-Procaccia correlation sum, using a kd-tree to count
//!   neighbor pairs over a whole radius grid in one traversal.
//! * [`geoc`] assembles time-aligned joint point clouds from a panel and
//!   differences correlation dimensions into conditional geometric
//!   information flow values.
//! * [`ogeoc`] runs the greedy forward parent discovery and backward
//!   indirect-link pruning, with a permutation shuffle test deciding which
//!   GeoC values count as zero.
//! * [`eval`] scores inferred networks against ground truth and orchestrates
//!   multi-trial experiments and ROC sweeps.
//!
//! All results are deterministic functions of their inputs and seeds,
//! regardless of the number of threads in use.

pub mod corrdim;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod geoc;
pub mod ogeoc;

mod parallel;
pub(crate) mod seed;

pub use error::{Error, Result};
pub use parallel::set_thread_count;
