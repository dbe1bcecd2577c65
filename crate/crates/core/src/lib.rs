//! Periodic solutions of N-vortex systems near a critical point of the
//! Robin function.
//!
//! The crate builds relative equilibria of the plane problem, certifies
//! their nondegeneracy through Floquet analysis, and continues them into a
//! family of small periodic orbits in a bounded domain by a blow-up
//! rescaling and a contraction-mapping reduction on a Fourier loop space.

pub mod cli;
pub mod continuation;
pub mod domain;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod loops;
pub mod orbit;
pub mod reduction;
pub mod robin;
pub mod system;

pub use domain::DomainModel;
pub use error::{Error, Result};
pub use system::{Configuration, VortexSystem};
