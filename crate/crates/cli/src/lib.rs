//! Command-line front end and labelling service.

pub mod commands;
pub mod server;
