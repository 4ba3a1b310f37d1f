use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

/// One computation task generated by an ISD in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub size_bits: f64,
    pub service_id: usize,
    /// CPU cycles per bit.
    pub density: f64,
    pub deadline_s: f64,
}

impl Task {
    pub fn cycles(&self) -> f64 {
        self.size_bits * self.density
    }
}

/// IIoT sensor device on the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isd {
    pub id: usize,
    pub position_m: Point2,
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    pub energy_budget_j: f64,
    /// Effective switched capacitance of the local CPU.
    pub capacitance: f64,
}

/// Rotary-wing propulsion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropulsionParams {
    pub theta1_w: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub tip_speed_mps: f64,
}

impl Default for PropulsionParams {
    fn default() -> Self {
        Self {
            theta1_w: 79.86,
            theta2: 21.99,
            theta3: 263.8,
            theta4: 0.009243,
            tip_speed_mps: 120.0,
        }
    }
}

/// Aerial edge server flying at a fixed altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub id: usize,
    pub altitude_m: f64,
    pub cpu_hz: f64,
    pub tx_power_w: f64,
    pub cache_slots: usize,
    pub energy_budget_j: f64,
    pub joules_per_cycle: f64,
    pub initial_position_m: Point2,
    pub propulsion: PropulsionParams,
}

/// Macro base station with its terrestrial edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mbs {
    pub position_m: Point2,
    pub height_m: f64,
    pub cpu_hz: f64,
    pub energy_budget_j: f64,
    pub joules_per_cycle: f64,
}

/// Global radio constants, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Channel power gain at 1 m.
    pub beta0: f64,
    pub noise_w: f64,
    pub bw_access_hz: f64,
    pub bw_inter_uav_hz: f64,
    pub bw_backhaul_hz: f64,
    /// Average MBS-to-UAV rate used for cache fills.
    pub backhaul_avg_bps: f64,
    /// Size of one service content unit.
    pub content_size_bits: f64,
}

impl RadioConfig {
    /// Delay to pull one service unit from the MBS into a UAV cache.
    pub fn cache_fill_delay_s(&self) -> f64 {
        self.content_size_bits / self.backhaul_avg_bps
    }
}

/// Services hosted by the MBS and their request popularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceLibrary {
    pub popularity: Vec<f64>,
}

impl ServiceLibrary {
    /// Zipf popularity over `count` services, rank 1 = service 0.
    pub fn zipf(count: usize, exponent: f64) -> Self {
        let raw: Vec<f64> = (1..=count).map(|r| (r as f64).powf(-exponent)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            popularity: raw.into_iter().map(|p| p / total).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.popularity.len()
    }

    /// Service ids ordered by decreasing popularity, ties to the lower id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.count()).collect();
        ids.sort_by(|&a, &b| {
            self.popularity[b]
                .partial_cmp(&self.popularity[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        ids
    }
}

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

impl UniformRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.lo * factor, self.hi * factor)
    }
}

impl From<[f64; 2]> for UniformRange {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<UniformRange> for [f64; 2] {
    fn from(r: UniformRange) -> Self {
        [r.lo, r.hi]
    }
}

/// Per-slot task arrival model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskDistribution {
    pub arrival_prob: f64,
    pub size_bits: UniformRange,
    pub density: UniformRange,
    pub deadline_s: UniformRange,
}

/// Immutable world description for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub area_m: f64,
    pub slot_count: usize,
    pub slot_len_s: f64,
    pub max_speed_mps: f64,
    pub min_separation_m: f64,
    pub isds: Vec<Isd>,
    pub uavs: Vec<Uav>,
    pub mbs: Mbs,
    pub radio: RadioConfig,
    pub services: ServiceLibrary,
    pub tasks: TaskDistribution,
    /// Home UAV of every ISD.
    pub home: Vec<usize>,
    pub seed: u64,
}

impl Scenario {
    pub fn isd_count(&self) -> usize {
        self.isds.len()
    }

    pub fn uav_count(&self) -> usize {
        self.uavs.len()
    }

    pub fn service_count(&self) -> usize {
        self.services.count()
    }

    pub fn initial_positions(&self) -> Vec<Point2> {
        self.uavs.iter().map(|u| u.initial_position_m).collect()
    }

    /// Radius of the reachable disk within one slot.
    pub fn step_radius_m(&self) -> f64 {
        self.max_speed_mps * self.slot_len_s
    }
}

/// Where a task is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Local,
    HomeUav,
    /// Relayed by the home UAV to the given peer UAV.
    PeerUav(usize),
    Mbs,
}

impl Mode {
    pub fn is_remote(self) -> bool {
        !matches!(self, Mode::Local)
    }

    /// UAV that executes the task, if any.
    pub fn executing_uav(self, home: usize) -> Option<usize> {
        match self {
            Mode::HomeUav => Some(home),
            Mode::PeerUav(v) => Some(v),
            _ => None,
        }
    }
}

/// Bandwidth fractions of the three OFDMA bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    /// Share of the home UAV's access band, per ISD.
    pub access: Vec<f64>,
    /// Share of the inter-UAV band per ordered pair (sender, receiver).
    pub inter_uav: Vec<Vec<f64>>,
    /// Share of the UAV-MBS band per UAV.
    pub backhaul: Vec<f64>,
}

impl Bandwidth {
    pub fn zeros(isds: usize, uavs: usize) -> Self {
        Self {
            access: vec![0.0; isds],
            inter_uav: vec![vec![0.0; uavs]; uavs],
            backhaul: vec![0.0; uavs],
        }
    }
}

/// Full decision tuple for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Execution mode per ISD; `None` when the ISD has no task.
    pub modes: Vec<Option<Mode>>,
    /// UAV x service cache contents during the slot.
    pub cache: Vec<Vec<bool>>,
    pub bandwidth: Bandwidth,
    /// CPU rate granted to each ISD's task by its executing server.
    pub cpu_alloc_hz: Vec<f64>,
    /// UAV positions used during the slot.
    pub positions: Vec<Point2>,
}

impl Decision {
    /// All tasks local, no allocations, UAVs hold their positions.
    pub fn all_local(tasks: &[Option<Task>], cache: Vec<Vec<bool>>, positions: Vec<Point2>) -> Self {
        let uavs = positions.len();
        Self {
            modes: tasks.iter().map(|t| t.map(|_| Mode::Local)).collect(),
            cache,
            bandwidth: Bandwidth::zeros(tasks.len(), uavs),
            cpu_alloc_hz: vec![0.0; tasks.len()],
            positions,
        }
    }
}
