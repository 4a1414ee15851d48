//! Teleoperation service: a simulated arm driven over a JSON websocket
//! protocol.

pub mod protocol;
pub mod server;
pub mod session;
