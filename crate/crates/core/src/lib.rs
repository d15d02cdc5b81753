//! Regularized relativistic Vlasov-Maxwell dynamics.
//!
//! The crate simulates N charged particles interacting through mollified
//! retarded kernels (units with c = 1), solves the associated mean-field
//! characteristic flow, and measures Monge-Kantorovich-Rubinstein distances
//! between weighted phase-space ensembles.
//!
//! Module map:
//!
//! * [`kernels`]: mollifier profiles, the retarded kernel `Y_eps` and the
//!   initial-layer kernel, tabulated on a `(t, r)` grid.
//! * [`dynamics`]: the delay-differential N-particle system, RK4 stepping
//!   and light-cone windowed force sweeps.
//! * [`meanfield`]: weighted flows and an independent Picard solver.
//! * [`transport`]: exact and entropic MKR distances, Dobrushin constant.
//! * [`fields`]: potentials and fields reconstructed from histories,
//!   pseudo-energy, energy exchange and gauge diagnostics.
//! * [`harness`]: experiment drivers, acceptance manifest and reports.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fields;
pub mod harness;
pub mod kernels;
pub mod meanfield;
pub mod quadrature;
pub mod transport;
pub mod vec3;

pub use error::{Error, Result};
pub use exec::Exec;
pub use vec3::Vec3;
