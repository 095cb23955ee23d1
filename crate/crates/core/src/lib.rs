//! Entangled qudit links through an interacting spin-s chain.
//!
//! Two end spins ("links", spin `s_link`) are weakly coupled to an open chain of
//! spin-`s_bulk` sites. The crate builds the bilinear-biquadratic Hamiltonian
//! of that chain, finds its low-lying spectrum with a block Lanczos solver,
//! and measures the entanglement between the two links, either in the
//! low-temperature thermal state or along a quench from a rotated product
//! state propagated with a Chebyshev expansion.
//!
//! Module map:
//!
//! - [`spin`]: spin-s operators, rotations and the tensor-product site layout.
//! - [`sparse`]: compressed sparse row matrices and the [`LinearOperator`] trait.
//! - [`model`]: chain description and Hamiltonian assembly.
//! - [`eigen`]: block Lanczos, dense oracle and spectral bounds.
//! - [`measures`]: partial trace, partial transpose, negativity, purity.
//! - [`equilibrium`]: thermal link states and entanglement-vs-coupling curves.
//! - [`dynamics`]: quench preparation, Chebyshev propagation, trajectories.
//! - [`sweep`]: configuration files, batch runs and the command-line front-end.
//!
//! ```
//! use qudit_link::{model::ChainSpec, equilibrium::{thermal_link_state, ThermalOptions}};
//!
//! let spec = ChainSpec::new(6, 0.5, 0.5).unwrap().with_lambda(0.2);
//! let (rho, point) = thermal_link_state(&spec, 1e4, &ThermalOptions::default()).unwrap();
//! assert_eq!(rho.d_link(), 2);
//! assert!(point.valid);
//! ```

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod eigen;
pub mod equilibrium;
mod error;
pub mod measures;
pub mod model;
pub mod sparse;
pub mod spin;
pub mod sweep;

pub use error::{Error, Result};
pub use sparse::{CsrMatrix, LinearOperator};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
