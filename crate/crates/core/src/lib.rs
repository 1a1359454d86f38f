//! Numerical engine for refraction billiards: a Keplerian potential inside a
//! smooth closed planar domain, a harmonic potential outside, and Snell's law
//! of refraction on the interface.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds arc-length parametrized boundary curves and detects
//!   central configurations;
//! * [`model`] holds the physical constants and potentials;
//! * [`arcs`] solves the two-point problems for outer (harmonic) and inner
//!   (Kepler, Levi-Civita regularized) arcs;
//! * [`jacobi`] evaluates Jacobi lengths and their endpoint derivatives;
//! * [`words`] encodes the interval alphabet and admissible words;
//! * [`shooting`] realizes words as trajectories by variational shooting;
//! * [`dynamics`] iterates the first-return map and its symbolic coding;
//! * [`analysis`] runs saddle spectra, heteroclinic and threshold scans.

pub mod analysis;
pub mod arcs;
pub mod dynamics;
pub mod export;
pub mod geometry;
pub mod jacobi;
pub mod model;
pub mod numeric;
pub mod shooting;
pub mod words;

pub use geometry::{BoundaryCurve, CentralConfiguration, ConfigKind, CurveSpec, ParamInterval};
pub use model::BilliardParams;
pub use numeric::Vec2;
