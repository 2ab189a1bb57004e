//! Electric field integral equation solver on closed triangulated surfaces,
//! with quasi-Helmholtz loop-star scaling and graph-Laplacian spectral
//! filters as a preconditioner.

pub mod dense;
pub mod em;
pub mod error;
pub mod experiments;
pub mod filters;
pub mod geom;
pub mod krylov;
pub mod mesh;
pub mod mie;
pub mod qh;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};
