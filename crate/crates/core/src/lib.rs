//! Forced anisotropic capillary flat flows on a half-space, computed by
//! globally optimal minimizing movements, with a planar front-tracking oracle
//! and checks for the qualitative properties of the flow.

pub mod anisotropy;
pub mod config;
pub mod error;
pub mod graphcut;
pub mod oracle2d;
pub mod gridset;
pub mod shapes;
mod numeric;
mod spline;
pub mod stepper;
pub mod verify;

pub use anisotropy::{Anisotropy, AnisotropyKind, DualAnisotropy, Norm};
pub use error::{Error, Result};
