//! Adaptive virtual elements of lowest order on triangular meshes with
//! hanging nodes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: the newest-vertex bisection forest, global indices of hanging
//!   nodes, refinement chains that keep the index bounded, and overlays.
//! - [`vem`]: local projections, element forms and global assembly.
//! - [`solver`] and [`sparse`]: conjugate gradients on CSR matrices.
//! - [`estimator`]: the residual estimator and Dörfler marking.
//! - [`data`]: element averages of the coefficients and their errors, the
//!   data refinement loop and the greedy algorithms.
//! - [`driver`]: the GALERKIN and AVEM loops.
//! - [`problems`] and [`experiment`]: benchmarks and output writers.
//!
//! ```
//! use avem::problems;
//! use avem::driver::{avem, AvemConfig};
//!
//! let spec = problems::square_smooth().unwrap();
//! let config = AvemConfig { eps0: 0.5, tol: 0.25, max_index: 2, ..Default::default() };
//! let out = avem(spec.mesh.clone(), &spec.data, &config).unwrap();
//! assert_eq!(out.trace.passes.len(), 2);
//! assert!(out.mesh.global_index() <= 2);
//! ```

pub mod data;
pub mod driver;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod geometry;
pub mod mesh;
pub mod problems;
pub mod solver;
pub mod sparse;
pub mod vem;

pub use error::{AvemError, Result};
pub use mesh::{ElemId, MeshForest, NodeId};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mesh.md")]
    mod mesh {}
    #[doc = include_str!("../../../book/src/vem.md")]
    mod vem {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/adaptive.md")]
    mod adaptive {}
    #[doc = include_str!("../../../book/src/lshape.md")]
    mod lshape {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
