//! Core of a 12x12 push-rod musical controller.
//!
//! The crate simulates the rod bed ([`surface`]), reads it back through the
//! quadrature sensing chain ([`sensing`]), carries frames over the serial and
//! OSC links ([`protocol`]), maps frames onto synthesis controls
//! ([`mapping`]) and renders audio offline ([`synth`]).
//!
//! Per-rod, per-block and per-grain loops run on rayon when the default
//! `parallel` feature is on; see [`exec`].

pub mod exec;
pub mod frame;
pub mod mapping;
pub mod protocol;
pub mod sensing;
pub mod surface;
pub mod synth;

pub use exec::Exec;
pub use frame::{SurfaceFrame, GRID_SIDE, ROD_COUNT};
