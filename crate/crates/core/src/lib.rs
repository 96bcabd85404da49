//! Core of an interface-synchronization middleware: operator inputs on a
//! local interface are mapped to ordered UI-event sequences, shipped over an
//! encrypted wire format, and replayed on remote interfaces.
//!
//! - [`protocol`]: message layout, AES-128-ECB framing, keepalive timing.
//! - [`mapping`]: key-value store from inputs to event sequences, resolution
//!   adaptation, slider planning.
//! - [`screen`]: deterministic virtual screen used as the replay target.
//! - [`api`]: JSON documents served over HTTP by the agents.

pub mod api;
pub mod mapping;
pub mod protocol;
pub mod screen;
