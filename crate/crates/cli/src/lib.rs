//! Certificate-producing front end for `skorohod-core`.
//!
//! Input documents are read once into self-contained [`input::Inputs`];
//! commands are pure functions of those inputs and their options, so any
//! certificate can be re-checked from its embedded data alone.

pub mod certificate;
pub mod commands;
pub mod input;
pub mod verify;
