//! Scenario construction, task arrivals, home partition and cache evolution.

mod cache;
mod spec;
mod tasks;

use serde::{Deserialize, Serialize};

pub use cache::{apply_lru, init_cache, init_cache_matrix, CacheState};
pub use spec::{dbm_to_watts, generate_scenario, grid_positions, ScenarioSpec};
pub use tasks::{draw_tasks, task_rng};

use crate::geometry::Point2;
use crate::model::types::{Scenario, Task};

/// Nearest initial UAV position for every ISD, ties to the lower UAV id.
pub fn assign_home(scenario: &Scenario) -> Vec<usize> {
    scenario
        .isds
        .iter()
        .map(|isd| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (u, uav) in scenario.uavs.iter().enumerate() {
                let d = isd.position_m.dist_sq(uav.initial_position_m);
                if d < best_d {
                    best = u;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Cumulative energy drawn by every entity since slot 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub isd_j: Vec<f64>,
    pub uav_j: Vec<f64>,
    pub mbs_j: f64,
}

impl EnergyLedger {
    pub fn zeros(isds: usize, uavs: usize) -> Self {
        Self {
            isd_j: vec![0.0; isds],
            uav_j: vec![0.0; uavs],
            mbs_j: 0.0,
        }
    }
}

/// Mutable state at the start of slot `slot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotState {
    pub slot: usize,
    pub tasks: Vec<Option<Task>>,
    /// Cache contents carried over from the previous slot.
    pub prev_cache: Vec<Vec<bool>>,
    /// UAV positions at the start of the slot.
    pub uav_positions: Vec<Point2>,
    pub ledgers: EnergyLedger,
}

impl SlotState {
    /// State of slot 0 with the given arrivals.
    pub fn initial(scenario: &Scenario, tasks: Vec<Option<Task>>) -> Self {
        Self {
            slot: 0,
            tasks,
            prev_cache: init_cache_matrix(scenario),
            uav_positions: scenario.initial_positions(),
            ledgers: EnergyLedger::zeros(scenario.isd_count(), scenario.uav_count()),
        }
    }

    pub fn task_count(&self) -> usize {
        self.tasks.iter().flatten().count()
    }
}

pub fn snapshot_json(scenario: &Scenario) -> serde_json::Result<String> {
    serde_json::to_string_pretty(scenario)
}
