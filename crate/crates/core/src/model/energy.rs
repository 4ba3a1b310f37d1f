use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::delay::{transfer_time, HopRates};
use crate::model::types::{Decision, Mode, PropulsionParams, Scenario, Task};

/// Rotary-wing propulsion power at horizontal speed `speed_mps`.
pub fn propulsion_power(speed_mps: f64, p: &PropulsionParams) -> Result<f64, ModelError> {
    if !(speed_mps >= 0.0) || !speed_mps.is_finite() {
        return Err(ModelError::InvalidArgument(format!("speed {speed_mps} must be finite and >= 0")));
    }
    let v2 = speed_mps * speed_mps;
    let blade = p.theta1_w * (1.0 + 3.0 * v2 / (p.tip_speed_mps * p.tip_speed_mps));
    // sqrt(a) - b with a ~ b^2 at high speed; rewrite as theta3 / (sqrt(a) + b)
    // so the induced term keeps full precision.
    let root = (p.theta3 + v2 * v2 / 4.0).sqrt();
    let induced = p.theta2 * (p.theta3 / (root + v2 / 2.0)).sqrt();
    let parasite = p.theta4 * v2 * speed_mps;
    Ok(blade + induced + parasite)
}

/// Power at zero speed.
pub fn hover_power(p: &PropulsionParams) -> f64 {
    p.theta1_w + p.theta2 * p.theta3.powf(0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entity {
    Isd(usize),
    Uav(usize),
    Mbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub compute_j: f64,
    pub transmit_j: f64,
    pub propulsion_j: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.compute_j + self.transmit_j + self.propulsion_j
    }
}

/// Energy drawn by `entity` during one slot.
///
/// `rates[k]` holds the hop rates of ISD k's task and `speeds_mps[u]` the
/// flight speed of UAV u. Tasks that traverse a dead link cost infinite
/// transmit energy.
pub fn slot_energy(
    scenario: &Scenario,
    entity: Entity,
    decision: &Decision,
    tasks: &[Option<Task>],
    rates: &[HopRates],
    speeds_mps: &[f64],
) -> Result<EnergyBreakdown, ModelError> {
    let k_count = scenario.isd_count();
    if tasks.len() != k_count || rates.len() != k_count || decision.modes.len() != k_count {
        return Err(ModelError::DimensionMismatch("per-ISD vectors".into()));
    }
    if speeds_mps.len() != scenario.uav_count() {
        return Err(ModelError::DimensionMismatch("per-UAV speeds".into()));
    }
    let tasks_with_modes = || {
        tasks
            .iter()
            .zip(&decision.modes)
            .enumerate()
            .filter_map(|(k, (t, m))| Some((k, (*t)?, (*m)?)))
    };
    let mut e = EnergyBreakdown::default();
    match entity {
        Entity::Isd(k) => {
            let isd = scenario
                .isds
                .get(k)
                .ok_or_else(|| ModelError::InvalidArgument(format!("no ISD {k}")))?;
            if let (Some(task), Some(mode)) = (tasks[k], decision.modes[k]) {
                match mode {
                    Mode::Local => {
                        e.compute_j = isd.capacitance * isd.cpu_hz * isd.cpu_hz * task.cycles();
                    }
                    _ => {
                        e.transmit_j =
                            isd.tx_power_w * transfer_time(task.size_bits, rates[k].access_bps);
                    }
                }
            }
        }
        Entity::Uav(u) => {
            let uav = scenario
                .uavs
                .get(u)
                .ok_or_else(|| ModelError::InvalidArgument(format!("no UAV {u}")))?;
            for (k, task, mode) in tasks_with_modes() {
                let home = scenario.home[k];
                if mode.executing_uav(home) == Some(u) {
                    e.compute_j += uav.joules_per_cycle * task.cycles();
                }
                if home == u && matches!(mode, Mode::PeerUav(_) | Mode::Mbs) {
                    e.transmit_j +=
                        uav.tx_power_w * transfer_time(task.size_bits, rates[k].relay_bps);
                }
            }
            e.propulsion_j = propulsion_power(speeds_mps[u], &uav.propulsion)? * scenario.slot_len_s;
        }
        Entity::Mbs => {
            for (_, task, mode) in tasks_with_modes() {
                if mode == Mode::Mbs {
                    e.compute_j += scenario.mbs.joules_per_cycle * task.cycles();
                }
            }
        }
    }
    Ok(e)
}

/// Largest speed whose propulsion energy over one slot stays within
/// `budget_j`, capped at `v_max`. Zero when even hovering exceeds the budget.
pub fn max_affordable_speed(budget_j: f64, slot_len_s: f64, v_max: f64, p: &PropulsionParams) -> f64 {
    let cost = |v: f64| propulsion_power(v, p).map(|w| w * slot_len_s).unwrap_or(f64::INFINITY);
    if cost(v_max) <= budget_j {
        return v_max;
    }
    // Power is U-shaped in v, so with hover affordable the affordable set is
    // an interval [0, v*] and bisection finds its right end.
    if cost(0.0) > budget_j {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, v_max);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cost(mid) <= budget_j {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
