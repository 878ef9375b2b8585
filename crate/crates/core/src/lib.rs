//! Closed magnetic geodesics of a charged particle on the two-torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: metric, magnetic density, Lorentz force, geodesic curvature.
//! * [`flow`]: fixed-step integration of the magnetic geodesic equation and closed-orbit detection.
//! * [`loopspace`]: discrete free-period loops, the action 1-form and its local primitive.
//! * [`gradientflow`]: the normalized descent field and its semi-flow to zeros of the action form.
//! * [`taimanov`]: exact min-cut minimization of the discrete Taimanov functional and seed curves.
//! * [`minimax`]: minimax path classes, transgression, mountain pass and energy scans.
//! * [`config`], [`io`], [`cli`]: experiment configuration, file emitters and the command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod gradientflow;
pub mod io;
pub mod loopspace;
pub mod minimax;
pub mod taimanov;

pub use error::{Error, Result};
