//! Harness around `matrix-core`: session configs, the offline render
//! pipeline, the live WebSocket/OSC server and capture decoding. The `matrix`
//! binary is a thin CLI over these.

pub mod capture;
pub mod config;
pub mod render;
pub mod scriptgen;
pub mod serve;

pub use config::{AdditiveRenderer, SessionConfig, SessionError};
pub use render::{render_session, run_render, RenderError, RenderOutcome, RenderReport};
