//! Contour dynamics for the Muskat problem with jumps in density and
//! viscosity: periodic spectral representation of the interface, the
//! nonlocal operators of the contour equation, time integration, and the
//! numerical experiments that exercise the stability and decay estimates.

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod constants;
pub mod dynamics;
pub mod exec;
pub mod experiments;
pub mod interface_ops;
pub mod spectral;
