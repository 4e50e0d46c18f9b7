//! Articulated non-rigid reconstruction from depth sequences.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithmic piece of
//! the reconstruction loop:
//!
//! - [`math`]: rigid transforms, twists, 3x3 SVD and Procrustes alignment.
//! - [`depth`]: depth frames, software depth rendering, filtering, normals and
//!   the exact Euclidean distance transform used for silhouette matching.
//! - [`tsdf`]: the canonical TSDF volume, warped integration with voxel
//!   collision rejection, marching cubes and the dense k-NN node field.
//! - [`warp`]: the deformation node graph and the two-level warp field.
//! - [`registration`]: two-level Gauss-Newton registration with a block PCG solver.
//! - [`segmentation`]: motion-trajectory clustering of the node graph.
//! - [`scenes`]: synthetic articulated scenes with ground truth and evaluation.
//!
//! File formats, configuration and the frame loop driver live in the `artfusion` crate.

#![no_std]
// Modules import `num_traits::Float` for libm-backed float methods. When std is
// linked anywhere in the build its inherent methods win, so those imports are
// marked `allow(unused_imports)`.

// `!(x > 0.0)` is the NaN-rejecting guard throughout; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod depth;
pub mod error;
pub mod math;
pub mod mesh;
pub mod registration;
pub mod scenes;
pub mod segmentation;
pub mod spatial;
pub mod tsdf;
pub mod warp;

pub use error::{Error, Result};
pub use math::{Mat3, RigidTransform, Svd3Result, Twist, Vec3};
pub use mesh::TriangleMesh;
