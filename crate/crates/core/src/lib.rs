//! Computational geometric measure theory for discrete planar measures.
//!
//! The crate evaluates symmetry functionals of odd kernels
//! `K(x) = |x| Omega(x / |x|)`, Jones beta numbers, dyadic cube lattices and
//! multiscale flatness diagnostics on weighted point clouds.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod cubes;
pub mod cutoff;
pub mod error;
pub mod exec;
pub mod flatness;
pub mod geom;
pub mod hull;
pub mod index;
pub mod io;
pub mod kernel;
pub mod measure;
pub mod sum;
pub mod symmetry;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geom::{Line, Point2};
pub use kernel::OmegaMap;
pub use measure::DiscreteMeasure;
