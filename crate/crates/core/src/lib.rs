//! Planner and discrete-event simulator for fully connected entanglement
//! distribution networks built from one broadband pair source, wavelength
//! demultiplexing/multiplexing and passive splitters, with symmetric
//! dispersive-optics QKD post-processing.

pub mod analysis;
pub mod config;
pub mod doqkd;
pub mod exec;
pub mod photonics;
pub mod plan;
pub mod report;
pub mod sim;
