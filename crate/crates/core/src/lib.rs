//! Public warning system spoofing testbed.
//!
//! A deterministic simulation of cells broadcasting SIB8 warnings, handsets
//! with device-specific quirks receiving them, and a cross-cell verifier that
//! flags warnings only one cell is broadcasting.
//!
//! - [`codec`]: CBS pagination, SIB8 segmentation and content hashing.
//! - [`content`]: clickable span detection in warning text.
//! - [`radio`]: cells, SIB1 scheduling and paging.
//! - [`ue`]: handset state machine and device profiles.
//! - [`verify`]: cross-cell verification sessions.
//! - [`sim`]: the event loop, commands, scenarios and replay.
//! - [`control`]: subscribers and warning presets.

pub mod codec;
pub mod content;
pub mod control;
pub mod event;
pub mod radio;
pub mod sim;
pub mod ue;
pub mod verify;

pub use event::SimEvent;
pub use sim::{Command, Scenario, Simulation};
