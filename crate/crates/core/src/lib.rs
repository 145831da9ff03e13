//! Pole searches, residues and compositeness for two-body scattering
//! amplitudes.
//!
//! The crate covers four model families (coupled-channel unitarized kernels,
//! effective-range expansions, CDD-pole amplitudes and Lippmann-Schwinger
//! potential models) and the analyses built on top of them:
//!
//! * [`kinematics`]: channels, complex momenta, Riemann-sheet signatures.
//! * [`loopfn`]: the scalar unitarity loop `G(s)`, both sheets, `dG/ds`.
//! * [`amplitudes`]: `T(s)`, the S matrix and phase shifts per model family.
//! * [`poles`]: Newton/Muller pole searches and residue extraction.
//! * [`compositeness`]: partial compositeness `X_i`, elementariness `Z`,
//!   sum-rule and phase-transformation machinery, ERE and CDD diagnostics.
//! * [`lseq`]: Lippmann-Schwinger solver for energy-independent potentials
//!   and the compositeness integrals for bound, virtual and resonant states.
//! * [`saturation`]: the two-channel width-saturation constraint system.
//! * [`report`]: serializable analysis reports.
//!
//! All quantities are in MeV / MeV^2 unless stated otherwise; lengths given
//! in fm are converted with [`kinematics::HBARC_MEV_FM`].

pub mod amplitudes;
pub mod compositeness;
pub mod error;
pub mod kinematics;
pub mod loopfn;
pub mod lseq;
pub mod poles;
pub mod report;
pub mod saturation;

pub use error::{Error, Result};
pub use kinematics::{Channel, KinematicsMode, Momentum, Sheet, SheetSignature, SheetedPoint};
