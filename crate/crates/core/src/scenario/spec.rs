use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::Point2;
use crate::model::types::{
    Isd, Mbs, PropulsionParams, RadioConfig, Scenario, ServiceLibrary, TaskDistribution, Uav,
    UniformRange,
};
use crate::scenario::assign_home;

/// Experiment configuration as read from JSON.
///
/// Human units (GHz, Mbit, dBm, MHz) are used where the defaults are quoted
/// that way; everything is converted to SI when the scenario is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub area_m: f64,
    pub isd_count: usize,
    pub uav_count: usize,
    pub slot_count: usize,
    pub slot_len_s: f64,
    pub arrival_prob: f64,

    pub task_size_mbit: UniformRange,
    pub task_density_cpb: UniformRange,
    pub task_deadline_s: UniformRange,
    pub isd_cpu_ghz: UniformRange,
    pub isd_tx_power_dbm: UniformRange,
    pub uav_cpu_ghz: UniformRange,
    pub uav_tx_power_dbm: UniformRange,
    /// Inclusive integer range.
    pub uav_cache_slots: [usize; 2],
    pub mbs_cpu_ghz: f64,

    pub uav_altitude_m: f64,
    pub mbs_height_m: f64,
    pub mbs_position_m: Point2,
    /// Explicit UAV start points; a grid of cell centres when absent.
    pub uav_initial_positions_m: Option<Vec<Point2>>,
    pub max_speed_mps: f64,
    pub min_separation_m: f64,

    pub beta0: f64,
    pub noise_w: f64,
    pub bw_access_mhz: f64,
    pub bw_inter_uav_mhz: f64,
    pub bw_backhaul_mhz: f64,
    pub backhaul_avg_mbps: f64,
    pub content_size_mbit: f64,

    pub service_count: usize,
    pub zipf_exponent: f64,

    pub isd_capacitance: f64,
    pub uav_joules_per_cycle: f64,
    pub mbs_joules_per_cycle: f64,
    pub isd_energy_budget_j: f64,
    pub uav_energy_budget_j: f64,
    pub mbs_energy_budget_j: f64,
    pub propulsion: PropulsionParams,

    pub rng_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            area_m: 1000.0,
            isd_count: 30,
            uav_count: 4,
            slot_count: 50,
            slot_len_s: 1.0,
            arrival_prob: 0.8,
            task_size_mbit: UniformRange::new(0.5, 3.0),
            task_density_cpb: UniformRange::new(300.0, 600.0),
            task_deadline_s: UniformRange::new(0.5, 1.0),
            isd_cpu_ghz: UniformRange::new(0.5, 1.0),
            isd_tx_power_dbm: UniformRange::new(10.0, 20.0),
            uav_cpu_ghz: UniformRange::new(15.0, 20.0),
            uav_tx_power_dbm: UniformRange::new(20.0, 23.0),
            uav_cache_slots: [5, 10],
            mbs_cpu_ghz: 20.0,
            uav_altitude_m: 100.0,
            mbs_height_m: 25.0,
            mbs_position_m: Point2::new(500.0, 500.0),
            uav_initial_positions_m: None,
            max_speed_mps: 50.0,
            min_separation_m: 10.0,
            beta0: 1e-5,
            noise_w: 1e-12,
            bw_access_mhz: 15.0,
            bw_inter_uav_mhz: 10.0,
            bw_backhaul_mhz: 5.0,
            backhaul_avg_mbps: 100.0,
            content_size_mbit: 10.0,
            service_count: 20,
            zipf_exponent: 0.8,
            isd_capacitance: 1e-27,
            uav_joules_per_cycle: 1e-10,
            mbs_joules_per_cycle: 5e-11,
            isd_energy_budget_j: 2.0,
            uav_energy_budget_j: 500.0,
            mbs_energy_budget_j: 10.0,
            propulsion: PropulsionParams::default(),
            rng_seed: 42,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Centres of a near-square grid over the area, row-major from the origin.
pub fn grid_positions(count: usize, area_m: f64) -> Vec<Point2> {
    let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
    let rows = count.div_ceil(cols).max(1);
    let (w, h) = (area_m / cols as f64, area_m / rows as f64);
    (0..count)
        .map(|i| Point2::new((i % cols) as f64 * w + w / 2.0, (i / cols) as f64 * h + h / 2.0))
        .collect()
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidArgument(m));
        if self.isd_count == 0 || self.uav_count == 0 || self.slot_count == 0 {
            return bad("isd_count, uav_count and slot_count must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.arrival_prob) {
            return bad(format!("arrival_prob {} outside [0, 1]", self.arrival_prob));
        }
        let positive_ranges = [
            ("task_size_mbit", self.task_size_mbit),
            ("task_density_cpb", self.task_density_cpb),
            ("task_deadline_s", self.task_deadline_s),
            ("isd_cpu_ghz", self.isd_cpu_ghz),
            ("uav_cpu_ghz", self.uav_cpu_ghz),
        ];
        for (name, r) in positive_ranges {
            if !(r.lo > 0.0 && r.lo <= r.hi && r.hi.is_finite()) {
                return bad(format!("{name} must be a nonempty range with positive bounds"));
            }
        }
        for (name, r) in [
            ("isd_tx_power_dbm", self.isd_tx_power_dbm),
            ("uav_tx_power_dbm", self.uav_tx_power_dbm),
        ] {
            if !(r.lo <= r.hi && r.lo.is_finite() && r.hi.is_finite()) {
                return bad(format!("{name} must be a nonempty finite range"));
            }
        }
        let [c_lo, c_hi] = self.uav_cache_slots;
        if c_lo == 0 || c_lo > c_hi {
            return bad("uav_cache_slots must be a nonempty range with lower bound >= 1".into());
        }
        if self.service_count < c_hi {
            return bad(format!(
                "service_count {} smaller than the largest cache {c_hi}",
                self.service_count
            ));
        }
        let positives = [
            ("area_m", self.area_m),
            ("slot_len_s", self.slot_len_s),
            ("mbs_cpu_ghz", self.mbs_cpu_ghz),
            ("uav_altitude_m", self.uav_altitude_m),
            ("max_speed_mps", self.max_speed_mps),
            ("beta0", self.beta0),
            ("noise_w", self.noise_w),
            ("bw_access_mhz", self.bw_access_mhz),
            ("bw_inter_uav_mhz", self.bw_inter_uav_mhz),
            ("bw_backhaul_mhz", self.bw_backhaul_mhz),
            ("backhaul_avg_mbps", self.backhaul_avg_mbps),
            ("content_size_mbit", self.content_size_mbit),
            ("isd_capacitance", self.isd_capacitance),
            ("uav_joules_per_cycle", self.uav_joules_per_cycle),
            ("mbs_joules_per_cycle", self.mbs_joules_per_cycle),
            ("isd_energy_budget_j", self.isd_energy_budget_j),
            ("uav_energy_budget_j", self.uav_energy_budget_j),
            ("mbs_energy_budget_j", self.mbs_energy_budget_j),
            ("theta1_w", self.propulsion.theta1_w),
            ("theta2", self.propulsion.theta2),
            ("theta3", self.propulsion.theta3),
            ("theta4", self.propulsion.theta4),
            ("tip_speed_mps", self.propulsion.tip_speed_mps),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite"));
            }
        }
        if !(self.mbs_height_m >= 0.0) || !(self.min_separation_m >= 0.0) {
            return bad("mbs_height_m and min_separation_m must be >= 0".into());
        }
        if self.mbs_height_m == self.uav_altitude_m {
            return bad("MBS and UAV heights coincide; backhaul gain may be singular".into());
        }
        if self.service_count == 0 || !(self.zipf_exponent >= 0.0) {
            return bad("service_count must be >= 1 and zipf_exponent >= 0".into());
        }
        if let Some(p) = &self.uav_initial_positions_m {
            if p.len() != self.uav_count {
                return bad(format!("{} initial positions for {} UAVs", p.len(), self.uav_count));
            }
            for (u, a) in p.iter().enumerate() {
                for b in &p[u + 1..] {
                    if a.dist(*b) < self.min_separation_m {
                        return bad("initial UAV positions closer than min_separation_m".into());
                    }
                }
            }
        }
        Ok(())
    }

    pub fn initial_positions(&self) -> Vec<Point2> {
        self.uav_initial_positions_m
            .clone()
            .unwrap_or_else(|| grid_positions(self.uav_count, self.area_m))
    }
}

/// Build a scenario deterministically from `spec.rng_seed`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario, ModelError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let isd_power_w = UniformRange::new(
        dbm_to_watts(spec.isd_tx_power_dbm.lo),
        dbm_to_watts(spec.isd_tx_power_dbm.hi),
    );
    let uav_power_w = UniformRange::new(
        dbm_to_watts(spec.uav_tx_power_dbm.lo),
        dbm_to_watts(spec.uav_tx_power_dbm.hi),
    );
    let area = UniformRange::new(0.0, spec.area_m);

    let isds: Vec<Isd> = (0..spec.isd_count)
        .map(|id| Isd {
            id,
            position_m: Point2::new(uniform(&mut rng, area), uniform(&mut rng, area)),
            cpu_hz: uniform(&mut rng, spec.isd_cpu_ghz) * 1e9,
            tx_power_w: uniform(&mut rng, isd_power_w),
            energy_budget_j: spec.isd_energy_budget_j,
            capacitance: spec.isd_capacitance,
        })
        .collect();

    let starts = spec.initial_positions();
    let mut uavs = Vec::with_capacity(spec.uav_count);
    for (id, start) in starts.into_iter().enumerate() {
        let cpu_hz = uniform(&mut rng, spec.uav_cpu_ghz) * 1e9;
        let tx_power_w = uniform(&mut rng, uav_power_w);
        let [c_lo, c_hi] = spec.uav_cache_slots;
        let cache_slots = rng.gen_range(c_lo..=c_hi);
        uavs.push(Uav {
            id,
            altitude_m: spec.uav_altitude_m,
            cpu_hz,
            tx_power_w,
            cache_slots,
            energy_budget_j: spec.uav_energy_budget_j,
            joules_per_cycle: spec.uav_joules_per_cycle,
            initial_position_m: start,
            propulsion: spec.propulsion,
        });
    }

    let mut scenario = Scenario {
        area_m: spec.area_m,
        slot_count: spec.slot_count,
        slot_len_s: spec.slot_len_s,
        max_speed_mps: spec.max_speed_mps,
        min_separation_m: spec.min_separation_m,
        isds,
        uavs,
        mbs: Mbs {
            position_m: spec.mbs_position_m,
            height_m: spec.mbs_height_m,
            cpu_hz: spec.mbs_cpu_ghz * 1e9,
            energy_budget_j: spec.mbs_energy_budget_j,
            joules_per_cycle: spec.mbs_joules_per_cycle,
        },
        radio: RadioConfig {
            beta0: spec.beta0,
            noise_w: spec.noise_w,
            bw_access_hz: spec.bw_access_mhz * 1e6,
            bw_inter_uav_hz: spec.bw_inter_uav_mhz * 1e6,
            bw_backhaul_hz: spec.bw_backhaul_mhz * 1e6,
            backhaul_avg_bps: spec.backhaul_avg_mbps * 1e6,
            content_size_bits: spec.content_size_mbit * 1e6,
        },
        services: ServiceLibrary::zipf(spec.service_count, spec.zipf_exponent),
        tasks: TaskDistribution {
            arrival_prob: spec.arrival_prob,
            size_bits: spec.task_size_mbit.scaled(1e6),
            density: spec.task_density_cpb,
            deadline_s: spec.task_deadline_s,
        },
        home: Vec::new(),
        seed: spec.rng_seed,
    };
    scenario.home = assign_home(&scenario);
    Ok(scenario)
}

pub(crate) fn uniform<R: Rng>(rng: &mut R, r: UniformRange) -> f64 {
    rng.gen_range(r.lo..=r.hi)
}
