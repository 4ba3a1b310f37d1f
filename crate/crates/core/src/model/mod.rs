//! Physical model: links, delays, energy, and the constraint auditor.

pub mod audit;
pub mod delay;
pub mod energy;
pub mod eval;
pub mod radio;
pub mod types;

pub use audit::{audit_constraints, ConstraintFamily, ConstraintReport, FamilyCheck};
pub use delay::{service_delay, HopRates};
pub use energy::{hover_power, propulsion_power, slot_energy, EnergyBreakdown, Entity};
pub use eval::{evaluate, SlotEvaluation, TaskOutcome};
pub use radio::{channel_gain, link_rate, LinkEnds, LinkKind};
pub use types::*;
