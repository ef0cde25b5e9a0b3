//! Numerical laboratory for quasi-1D atomic scattering under transverse
//! harmonic confinement.
//!
//! Two independent routes to the transmission coefficient of a particle
//! moving through a waveguide with a short-range scatterer on the axis:
//!
//! * a classical route, in which phase space is complexified so that a
//!   statistical ensemble of complex trajectories can mimic quantum spreading
//!   ([`semiclassics`], [`cdyn`], [`mc`]),
//! * a quantum route, solving the coupled-channel Schroedinger problem on a
//!   Legendre angular grid with a mapped radial mesh ([`quantum`]).
//!
//! Free-space deflection-angle diagnostics ([`freespace`]) connect the two:
//! the confinement-induced minimum of the transmission coefficient appears
//! where classical trajectories start to orbit the scatterer.
//!
//! Units: hbar = mu = 1 throughout; the trap frequency omega is configurable
//! and enters through [`model::UnitSystem`].

pub mod cdyn;
pub mod exec;
pub mod freespace;
pub mod mc;
pub mod model;
pub mod quad;
pub mod quantum;
pub mod semiclassics;

pub use model::{ComplexVec3, PhaseState, PotentialKind, PotentialSpec, ScatterParams, UnitSystem};
