//! Numerical laboratory for weighted p-Laplacian problems on radially
//! symmetric model manifolds.
//!
//! Everything reduces to one radial variable: a [`geometry::ModelManifold`]
//! fixes the measure `sigma_{m-1} g^{m-1} e^{-f} dr`, a [`mesh::RadialMesh`]
//! discretizes it with P1 elements, and the remaining modules build Hardy
//! weights, Green kernels, fundamental tones, capacities and the monotone
//! solution pipeline on top.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod green;
pub mod hardy;
pub mod linalg;
pub mod mesh;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod spectral;
pub mod verify;
pub mod yamabe;

pub use error::{Error, Result};
