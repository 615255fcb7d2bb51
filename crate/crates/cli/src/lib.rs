//! Client-side building blocks for the `laminar` binary: PE source file
//! parsing, the HTTP client, session cache, and the command/route map.

pub mod api;
pub mod commands;
pub mod pefile;
pub mod routes;
pub mod session;
