//! Mollifiers, the mollified retarded kernel and the initial layer.
//!
//! `Y_eps(t, .)` is the forward fundamental solution of the wave operator
//! mollified by `psi_eps = chi_eps * chi_eps`; it lives on the shell
//! `|r - t| < 2 eps`. The initial layer `m2_eps = -d_t grad Y_eps * G`
//! carries the initial Coulomb field outwards and equals the exact Coulomb
//! gradient ahead of the wave.

pub mod closed_form;
pub mod io;
pub mod mollifier;
pub mod tables;

pub use closed_form::{m_derivs, y_derivs, MDerivs, YDerivs};
pub use io::KernelSidecar;
pub use mollifier::{build_mollifier, build_mollifier_named, ChiFamily, MollifierProfile, RadialProfile};
pub use tables::{KernelFamily, KernelSample, RadialKernel, RowSup, Supnorms};

use crate::error::Result;

/// Builds the force kernel (double mollification) with the given spacings.
pub fn build_kernel_tables(
    profile: &MollifierProfile,
    t_max: f64,
    dt: f64,
    dr: f64,
) -> Result<RadialKernel> {
    RadialKernel::build(profile, KernelFamily::Double, t_max, dt, dr)
}

/// Builds the once-mollified kernel used for the tilde fields.
pub fn build_single_kernel_tables(
    profile: &MollifierProfile,
    t_max: f64,
    dt: f64,
    dr: f64,
) -> Result<RadialKernel> {
    RadialKernel::build(profile, KernelFamily::Single, t_max, dt, dr)
}
