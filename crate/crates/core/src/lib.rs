//! Variational quantum solver for the pre-cracked plate.
//!
//! The crate discretizes the 2D plane-strain elasticity problem of a plate
//! with an edge crack on a regular Quad4 mesh, expresses the stiffness matrix
//! as a polylogarithmic sum of tensor-product terms, and minimizes the
//! variational cost with a parameterized circuit on a built-in statevector
//! simulator. A classical finite-element path provides the ground truth for
//! every quantum-side quantity, and a quantum-remeshing cascade warm-starts
//! fine meshes from converged coarse solutions.

pub mod ansatz;
pub mod decomp;
pub mod error;
pub mod fem;
pub mod observables;
pub mod optimize;
pub mod problem;
pub mod qsim;
pub mod remesh;
pub mod tensor;

pub use error::{Error, Result};
