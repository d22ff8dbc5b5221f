//! Renormalized energies of unit-valued harmonic maps with prescribed point
//! singularities on bounded, multiply connected planar domains.
//!
//! The crate is `no_std` (it needs `alloc`). Everything is pure numerics:
//!
//! * [`domain`]: smooth closed curves, puncture sets and admissibility checks.
//! * [`boundary_data`]: circle-valued boundary data, degrees and currents.
//! * [`harmonic_solver`]: a Nyström boundary-integral solver for the mixed
//!   Laplace problems (Dirichlet, Neumann, floating constants with prescribed
//!   flux) with explicit logarithmic point sources, plus field evaluation and
//!   phase transport along paths.
//! * [`topology`]: period matrix of harmonic measures, phase offsets, the
//!   lattice selection of the topological coefficients and the Neumann
//!   degree search.
//! * [`renorm`]: closed-form Dirichlet and Neumann renormalized energies and
//!   the canonical singular harmonic maps.
//! * [`oracle`]: direct finite-radius energies on the perforated domain,
//!   monotonicity and Richardson extrapolation.
//!
//! Normal derivatives and fluxes always use the outward normal of the domain
//! on every boundary component (on a hole it points into the hole).
#![no_std]

extern crate alloc;

pub mod boundary_data;
pub mod domain;
mod error;
pub mod geometry;
pub mod harmonic_solver;
pub mod linalg;
pub mod oracle;
pub mod path;
pub mod quadrature;
pub mod renorm;
pub mod topology;

pub use error::{Error, Result};
pub use geometry::Vec2;
