//! Szegedy walks on the magnifier graph `G = Z x M`.

pub mod eigen;
pub mod error;
pub mod graph;
pub mod limitlaw;
pub mod localization;
pub mod rw;
pub mod spectral;
pub mod szegedy;
pub mod verify;

pub use error::{Result, WalkError};
