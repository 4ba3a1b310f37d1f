//! Full evaluation of one slot's decision: per-task delays and per-entity energy.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::Point2;
use crate::model::delay::{service_delay, HopRates};
use crate::model::energy::{slot_energy, EnergyBreakdown, Entity};
use crate::model::radio::{link_rate, LinkEnds, LinkKind};
use crate::model::types::{Bandwidth, Decision, Mode, Scenario, Task};
use crate::scenario::SlotState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub mode: Mode,
    pub rates: HopRates,
    pub cpu_hz: f64,
    pub cache_new: bool,
    pub delay_s: f64,
    pub deadline_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEvaluation {
    pub outcomes: Vec<Option<TaskOutcome>>,
    /// Sum of task delays; infinite if any task rides a dead link.
    pub total_delay_s: f64,
    pub speeds_mps: Vec<f64>,
    pub isd_energy: Vec<EnergyBreakdown>,
    pub uav_energy: Vec<EnergyBreakdown>,
    pub mbs_energy: EnergyBreakdown,
}

impl SlotEvaluation {
    pub fn deadline_misses(&self) -> Vec<usize> {
        self.outcomes
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.filter(|o| !o.deadline_met).map(|_| k))
            .collect()
    }
}

/// ISD-to-home-UAV rate for ISD `k` on access share `theta`.
pub fn access_rate(
    scenario: &Scenario,
    k: usize,
    positions: &[Point2],
    theta: f64,
) -> Result<f64, ModelError> {
    let isd = &scenario.isds[k];
    let h = scenario.home[k];
    let ends = LinkEnds::new(isd.position_m, positions[h], 0.0, scenario.uavs[h].altitude_m);
    link_rate(LinkKind::IsdToUav, &ends, theta, &scenario.radio, isd.tx_power_w)
}

/// UAV `u` to UAV `v` rate on inter-UAV share `theta`.
pub fn inter_uav_rate(
    scenario: &Scenario,
    u: usize,
    v: usize,
    positions: &[Point2],
    theta: f64,
) -> Result<f64, ModelError> {
    let ends = LinkEnds::new(
        positions[u],
        positions[v],
        scenario.uavs[u].altitude_m,
        scenario.uavs[v].altitude_m,
    );
    link_rate(LinkKind::UavToUav, &ends, theta, &scenario.radio, scenario.uavs[u].tx_power_w)
}

/// UAV `u` to MBS rate on backhaul share `theta`.
pub fn backhaul_rate(
    scenario: &Scenario,
    u: usize,
    positions: &[Point2],
    theta: f64,
) -> Result<f64, ModelError> {
    let ends = LinkEnds::new(
        positions[u],
        scenario.mbs.position_m,
        scenario.uavs[u].altitude_m,
        scenario.mbs.height_m,
    );
    link_rate(LinkKind::UavToMbs, &ends, theta, &scenario.radio, scenario.uavs[u].tx_power_w)
}

/// Hop rates seen by ISD `k`'s task under `mode`.
pub fn hop_rates(
    scenario: &Scenario,
    k: usize,
    mode: Mode,
    bw: &Bandwidth,
    positions: &[Point2],
) -> Result<HopRates, ModelError> {
    let h = scenario.home[k];
    let mut r = HopRates::default();
    if mode.is_remote() {
        r.access_bps = access_rate(scenario, k, positions, bw.access[k])?;
    }
    match mode {
        Mode::PeerUav(v) => {
            r.relay_bps = inter_uav_rate(scenario, h, v, positions, bw.inter_uav[h][v])?;
        }
        Mode::Mbs => r.relay_bps = backhaul_rate(scenario, h, positions, bw.backhaul[h])?,
        _ => {}
    }
    Ok(r)
}

/// Whether serving `task` at UAV `w` needs a cache fill from the MBS.
pub fn needs_fill(prev_cache: &[Vec<bool>], w: usize, task: &Task) -> bool {
    !prev_cache[w][task.service_id]
}

/// Delay of one task given its mode and the decision's allocations.
pub fn task_outcome(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
    k: usize,
    task: &Task,
    mode: Mode,
) -> Result<TaskOutcome, ModelError> {
    let h = scenario.home[k];
    let rates = hop_rates(scenario, k, mode, &decision.bandwidth, &decision.positions)?;
    let cpu_hz = match mode {
        Mode::Local => scenario.isds[k].cpu_hz,
        _ => decision.cpu_alloc_hz[k],
    };
    let cache_new = mode
        .executing_uav(h)
        .is_some_and(|w| needs_fill(&state.prev_cache, w, task));
    let delay_s = service_delay(task, mode, rates, cpu_hz, cache_new, &scenario.radio);
    Ok(TaskOutcome {
        mode,
        rates,
        cpu_hz,
        cache_new,
        delay_s,
        deadline_met: delay_s <= task.deadline_s,
    })
}

/// Horizontal speed of each UAV implied by moving from `from` to `to` in one slot.
pub fn speeds(from: &[Point2], to: &[Point2], slot_len_s: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a.dist(*b) / slot_len_s).collect()
}

pub fn evaluate(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
) -> Result<SlotEvaluation, ModelError> {
    let k_count = scenario.isd_count();
    let u_count = scenario.uav_count();
    check_dims(scenario, state, decision)?;

    let mut outcomes = Vec::with_capacity(k_count);
    let mut rates = vec![HopRates::default(); k_count];
    let mut total = 0.0;
    for k in 0..k_count {
        let o = match (state.tasks[k], decision.modes[k]) {
            (Some(task), Some(mode)) => {
                let o = task_outcome(scenario, state, decision, k, &task, mode)?;
                rates[k] = o.rates;
                total += o.delay_s;
                Some(o)
            }
            _ => None,
        };
        outcomes.push(o);
    }
    let speeds_mps = speeds(&state.uav_positions, &decision.positions, scenario.slot_len_s);
    let energy = |e| slot_energy(scenario, e, decision, &state.tasks, &rates, &speeds_mps);
    let isd_energy = (0..k_count).map(|k| energy(Entity::Isd(k))).collect::<Result<_, _>>()?;
    let uav_energy = (0..u_count).map(|u| energy(Entity::Uav(u))).collect::<Result<_, _>>()?;
    let mbs_energy = energy(Entity::Mbs)?;
    Ok(SlotEvaluation {
        outcomes,
        total_delay_s: total,
        speeds_mps,
        isd_energy,
        uav_energy,
        mbs_energy,
    })
}

pub(crate) fn check_dims(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
) -> Result<(), ModelError> {
    let k = scenario.isd_count();
    let u = scenario.uav_count();
    let s = scenario.service_count();
    let bad = |what: &str| Err(ModelError::DimensionMismatch(what.to_string()));
    if state.tasks.len() != k || decision.modes.len() != k || decision.cpu_alloc_hz.len() != k {
        return bad("per-ISD vectors");
    }
    if decision.bandwidth.access.len() != k {
        return bad("access shares");
    }
    if decision.positions.len() != u || state.uav_positions.len() != u {
        return bad("UAV positions");
    }
    if decision.bandwidth.backhaul.len() != u
        || decision.bandwidth.inter_uav.len() != u
        || decision.bandwidth.inter_uav.iter().any(|r| r.len() != u)
    {
        return bad("UAV shares");
    }
    let cache_ok = |c: &[Vec<bool>]| c.len() == u && c.iter().all(|r| r.len() == s);
    if !cache_ok(&decision.cache) || !cache_ok(&state.prev_cache) {
        return bad("cache matrix");
    }
    if state.tasks.iter().flatten().any(|t| t.service_id >= s) {
        return bad("service id");
    }
    Ok(())
}
