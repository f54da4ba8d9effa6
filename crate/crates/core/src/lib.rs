//! Simulation and potential-well analysis for a viscoelastic wave equation
//! with fading memory, nonlinear damping and combined power sources.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN as well

pub mod config;
pub mod error;
pub mod grid;
pub mod model;
pub mod numerics;
pub mod sobolev;
pub mod well;
pub mod diag;
pub mod sim;
