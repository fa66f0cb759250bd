//! Face parametrizations of positive semidefinite cones with prescribed
//! zeros.
//!
//! A simplicial complex `Δ` on `{0, .., m-1}` defines a polynomial map
//! `φ_Δ(γ) = Γ(γ)Γ(γ)ᵀ` from face parameters into the cone of PSD matrices
//! that vanish off the underlying graph of `Δ`. This crate evaluates the
//! map, decides membership in its image for chordal graphs and chordless
//! cycles, recovers preimages, forms quotients under Schur complementation,
//! estimates image volumes, and builds the matching Gaussian latent models.
//!
//! Vertices are 0-based throughout the library; [`io`] converts to the
//! 1-based convention used in files.

pub mod chordal;
pub mod complex;
pub mod cycle;
pub mod error;
pub mod factor;
pub mod graph;
pub mod io;
pub mod latent;
pub mod linalg;
pub mod matrix;
pub mod membership;
pub mod param;
pub mod quotient;
pub mod random;
pub mod selftest;
pub mod verdict;
pub mod volume;

pub use complex::{Face, SimplicialComplex, SubComplex, VertexSet};
pub use error::{Error, Result};
pub use factor::{FactorMatrix, FactorParams};
pub use graph::Graph;
pub use matrix::SymmetricMatrix;
pub use verdict::{MembershipVerdict, Violation};
