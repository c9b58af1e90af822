//! Safety supervision for affine soft actuators.
//!
//! * [`actuator_model`]: the affine actuator map, its augmented linear form
//!   and least-squares calibration.
//! * [`supervisor`]: the saturating cap `u_max` and its composition with an
//!   arbitrary inner controller.
//! * [`polytope`]: H-polyhedra and the maximal positive invariant set used to
//!   verify the cap offline.
//! * [`pose_control`]: PI with anti-windup and boundary-layer sliding mode.
//! * [`limb_sim`]: closed-loop simulator of a two-wire antagonistic limb.
//! * [`config`] and [`harness`]: run configuration and the CLI commands.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator_model;
pub mod config;
pub mod error;
pub mod harness;
pub mod limb_sim;
pub mod polytope;
pub mod pose_control;
pub mod supervisor;

pub use error::{Error, Result};
