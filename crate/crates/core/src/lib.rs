//! Cartan-Hadamard sliced Wasserstein distances and the gradient flows built
//! on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chsw;
pub mod error;
pub mod exact;
pub mod flows;
pub mod geometry;
pub mod linalg;
pub mod mds;
pub mod ot1d;
pub mod sampling;

pub use chsw::{chsw, chsw_with_directions, gaussian_kernel, gram_matrix, ChswConfig, ChswEstimate, DiscreteMeasure};
pub use error::{Error, Result};
pub use geometry::{Descriptor, Direction, Geometry, Manifold, Projection};
