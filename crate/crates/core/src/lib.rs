//! Time-slotted simulator and optimizer for aerial edge computing in
//! industrial cyber-physical systems.

pub mod error;
pub mod geometry;
pub mod model;
pub mod scenario;
pub mod report;
pub mod sp1;
pub mod sp2;
pub mod sp3;
pub mod orchestrator;
pub mod harness;
