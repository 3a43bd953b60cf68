//! File formats, synthetic instances, experiment runs and verification
//! reports on top of `vfsense-core`.

pub mod config;
pub mod experiment;
pub mod instance;
pub mod io;
pub mod verify;
