#![allow(dead_code)]

use amo::model::types::{Decision, Mode, Scenario};
use amo::scenario::{draw_tasks, generate_scenario, init_cache_matrix, task_rng, ScenarioSpec, SlotState};
use amo::sp2::build_layout;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario(seed: u64, isds: usize, uavs: usize) -> Scenario {
    let spec = ScenarioSpec { isd_count: isds, uav_count: uavs, rng_seed: seed, ..ScenarioSpec::default() };
    generate_scenario(&spec).unwrap()
}

/// Slot 0 of `sc` with its task draw and the initial cache.
pub fn first_slot(sc: &Scenario) -> SlotState {
    let mut state = SlotState::initial(sc, draw_tasks(sc, 0, &mut task_rng(sc)));
    state.prev_cache = init_cache_matrix(sc);
    state
}

/// Random modes that only use cached services, with equal-split
/// allocations and UAVs left where they are.
pub fn random_decision(sc: &Scenario, state: &SlotState, seed: u64) -> Decision {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sc.uav_count();
    let modes: Vec<Option<Mode>> = state
        .tasks
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let t = (*t)?;
            let h = sc.home[k];
            let mut options = vec![Mode::Local, Mode::Mbs];
            for v in 0..u {
                if state.prev_cache[v][t.service_id] {
                    options.push(if v == h { Mode::HomeUav } else { Mode::PeerUav(v) });
                }
            }
            Some(options[rng.gen_range(0..options.len())])
        })
        .collect();
    let layout = build_layout(sc, &state.tasks, &state.prev_cache, &modes, &state.uav_positions).unwrap();
    let (bandwidth, cpu_alloc_hz) = layout.to_allocation(&layout.equal_split(), sc.isd_count(), u);
    Decision {
        modes,
        cache: state.prev_cache.clone(),
        bandwidth,
        cpu_alloc_hz,
        positions: state.uav_positions.clone(),
    }
}
