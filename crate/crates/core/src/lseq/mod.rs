//! Lippmann-Schwinger machinery for energy-independent potentials: the
//! Nystrom T-matrix solver, pole location on both sheets, residue-normalized
//! coupling functions `g(k)` and the compositeness integrals whose sum is
//! exactly one for every pole of a pure potential model.

mod potential;
mod quadrature;
mod solver;

pub use potential::{FormFactor, GridPotential, Potential, SeparablePotential, SeparableTerm};
pub use quadrature::{adaptive_simpson, GaussLegendre, MomentumGrid};
pub use solver::{
    BoundState, CouplingFunction, LsSolver, WaveCoupling, WaveX, XBreakdown,
    DEFAULT_QUADRATURE_POINTS,
};
