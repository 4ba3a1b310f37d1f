//! Constraint auditor for the per-slot problem.
//!
//! Every family reports its worst violation (zero when satisfied) and the
//! worst signed margin `g` in the `g <= 0` reading of the constraint.
//! Capacity rows for CPU are normalized by the server's capacity so that a
//! rounding slip of a few Hz does not dominate the report.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::eval::{check_dims, evaluate, SlotEvaluation};
use crate::model::types::{Decision, Mode, Scenario};
use crate::scenario::SlotState;

pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintFamily {
    AccessBandwidth,
    InterUavBandwidth,
    BackhaulBandwidth,
    UavCpu,
    MbsCpu,
    CacheCapacity,
    ModeUniqueness,
    IsdEnergy,
    UavEnergy,
    MbsEnergy,
    Deadline,
    Velocity,
    Separation,
    InitialPosition,
    CacheImplication,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 15] = [
        ConstraintFamily::AccessBandwidth,
        ConstraintFamily::InterUavBandwidth,
        ConstraintFamily::BackhaulBandwidth,
        ConstraintFamily::UavCpu,
        ConstraintFamily::MbsCpu,
        ConstraintFamily::CacheCapacity,
        ConstraintFamily::ModeUniqueness,
        ConstraintFamily::IsdEnergy,
        ConstraintFamily::UavEnergy,
        ConstraintFamily::MbsEnergy,
        ConstraintFamily::Deadline,
        ConstraintFamily::Velocity,
        ConstraintFamily::Separation,
        ConstraintFamily::InitialPosition,
        ConstraintFamily::CacheImplication,
    ];

    /// Families every emitted decision must satisfy regardless of load.
    pub const STRUCTURAL: [ConstraintFamily; 3] = [
        ConstraintFamily::CacheImplication,
        ConstraintFamily::CacheCapacity,
        ConstraintFamily::ModeUniqueness,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: ConstraintFamily,
    /// `max(0, g)` over the family's rows.
    pub violation: f64,
    /// Largest `g` over the rows; `None` for a family with no rows.
    pub worst_margin: Option<f64>,
}

impl FamilyCheck {
    pub fn passes(&self) -> bool {
        self.violation <= AUDIT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub checks: Vec<FamilyCheck>,
}

impl ConstraintReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(FamilyCheck::passes)
    }

    pub fn get(&self, family: ConstraintFamily) -> &FamilyCheck {
        self.checks
            .iter()
            .find(|c| c.family == family)
            .expect("report covers every family")
    }

    pub fn violation(&self, family: ConstraintFamily) -> f64 {
        self.get(family).violation
    }

    pub fn structural_ok(&self) -> bool {
        ConstraintFamily::STRUCTURAL.iter().all(|&f| self.get(f).passes())
    }

    pub fn failing(&self) -> Vec<ConstraintFamily> {
        self.checks.iter().filter(|c| !c.passes()).map(|c| c.family).collect()
    }
}

#[derive(Default)]
struct Acc(Option<f64>);

impl Acc {
    fn push(&mut self, g: f64) {
        let g = if g.is_nan() { f64::INFINITY } else { g };
        self.0 = Some(self.0.map_or(g, |m: f64| m.max(g)));
    }

    fn finish(self, family: ConstraintFamily) -> FamilyCheck {
        FamilyCheck {
            family,
            violation: self.0.map_or(0.0, |g| g.max(0.0)),
            worst_margin: self.0,
        }
    }
}

/// Bounds check for a share in `[0, 1]`, folded into its family.
fn push_unit(acc: &mut Acc, share: f64) {
    acc.push(-share);
    acc.push(share - 1.0);
}

pub fn audit_constraints(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
) -> Result<ConstraintReport, ModelError> {
    let eval = evaluate(scenario, state, decision)?;
    audit_with_eval(scenario, state, decision, &eval)
}

/// Audit reusing an evaluation already computed for the same decision.
pub fn audit_with_eval(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
    eval: &SlotEvaluation,
) -> Result<ConstraintReport, ModelError> {
    use ConstraintFamily as F;
    check_dims(scenario, state, decision)?;
    let k_count = scenario.isd_count();
    let u_count = scenario.uav_count();
    let bw = &decision.bandwidth;
    let task_modes = || {
        (0..k_count).filter_map(|k| match (state.tasks[k], decision.modes[k]) {
            (Some(t), Some(m)) => Some((k, t, m)),
            _ => None,
        })
    };

    let mut access = Acc::default();
    let mut access_sum = vec![0.0; u_count];
    for k in 0..k_count {
        push_unit(&mut access, bw.access[k]);
        if decision.modes[k].is_some_and(Mode::is_remote) {
            access_sum[scenario.home[k]] += bw.access[k];
        }
    }
    for s in access_sum {
        access.push(s - 1.0);
    }

    let mut inter = Acc::default();
    let mut inter_sum = 0.0;
    for u in 0..u_count {
        for v in 0..u_count {
            push_unit(&mut inter, bw.inter_uav[u][v]);
            if u != v {
                inter_sum += bw.inter_uav[u][v];
            }
        }
    }
    inter.push(inter_sum - 1.0);

    let mut backhaul = Acc::default();
    for &b in &bw.backhaul {
        push_unit(&mut backhaul, b);
    }
    backhaul.push(bw.backhaul.iter().sum::<f64>() - 1.0);

    let mut uav_cpu = Acc::default();
    let mut mbs_cpu = Acc::default();
    let mut uav_load = vec![0.0; u_count];
    let mut mbs_load = 0.0;
    for (k, _, m) in task_modes() {
        let f = decision.cpu_alloc_hz[k];
        if let Some(w) = m.executing_uav(scenario.home[k]) {
            if w < u_count {
                uav_cpu.push(-f / scenario.uavs[w].cpu_hz);
                uav_load[w] += f;
            }
        } else if m == Mode::Mbs {
            mbs_cpu.push(-f / scenario.mbs.cpu_hz);
            mbs_load += f;
        }
    }
    for (u, load) in uav_load.iter().enumerate() {
        uav_cpu.push(load / scenario.uavs[u].cpu_hz - 1.0);
    }
    mbs_cpu.push(mbs_load / scenario.mbs.cpu_hz - 1.0);

    let mut cache_cap = Acc::default();
    for (u, row) in decision.cache.iter().enumerate() {
        let n = row.iter().filter(|&&b| b).count() as f64;
        cache_cap.push(n - scenario.uavs[u].cache_slots as f64);
    }

    let mut unique = Acc::default();
    for k in 0..k_count {
        let h = scenario.home[k];
        let g = match (state.tasks[k], decision.modes[k]) {
            (Some(_), None) | (None, Some(_)) => 1.0,
            (Some(_), Some(Mode::PeerUav(v))) if v == h || v >= u_count => 1.0,
            _ => 0.0,
        };
        unique.push(g);
    }

    let mut implication = Acc::default();
    for (k, t, m) in task_modes() {
        if let Some(w) = m.executing_uav(scenario.home[k]) {
            let cached = decision.cache.get(w).is_some_and(|r| r[t.service_id]);
            implication.push(if cached { 0.0 } else { 1.0 });
        }
    }

    let mut isd_e = Acc::default();
    for (k, e) in eval.isd_energy.iter().enumerate() {
        isd_e.push(e.total() - scenario.isds[k].energy_budget_j);
    }
    let mut uav_e = Acc::default();
    for (u, e) in eval.uav_energy.iter().enumerate() {
        uav_e.push(e.total() - scenario.uavs[u].energy_budget_j);
    }
    let mut mbs_e = Acc::default();
    mbs_e.push(eval.mbs_energy.total() - scenario.mbs.energy_budget_j);

    let mut deadline = Acc::default();
    for (k, t, _) in task_modes() {
        let o = eval.outcomes[k].expect("evaluated task");
        deadline.push(o.delay_s - t.deadline_s);
    }

    let mut velocity = Acc::default();
    let reach = scenario.step_radius_m();
    for u in 0..u_count {
        velocity.push(decision.positions[u].dist(state.uav_positions[u]) - reach);
    }

    let mut separation = Acc::default();
    let d2 = scenario.min_separation_m * scenario.min_separation_m;
    for u in 0..u_count {
        for v in (u + 1)..u_count {
            separation.push(d2 - decision.positions[u].dist_sq(decision.positions[v]));
        }
    }

    let mut initial = Acc::default();
    if state.slot == 0 {
        for (u, uav) in scenario.uavs.iter().enumerate() {
            initial.push(state.uav_positions[u].dist(uav.initial_position_m));
        }
    }

    Ok(ConstraintReport {
        checks: vec![
            access.finish(F::AccessBandwidth),
            inter.finish(F::InterUavBandwidth),
            backhaul.finish(F::BackhaulBandwidth),
            uav_cpu.finish(F::UavCpu),
            mbs_cpu.finish(F::MbsCpu),
            cache_cap.finish(F::CacheCapacity),
            unique.finish(F::ModeUniqueness),
            isd_e.finish(F::IsdEnergy),
            uav_e.finish(F::UavEnergy),
            mbs_e.finish(F::MbsEnergy),
            deadline.finish(F::Deadline),
            velocity.finish(F::Velocity),
            separation.finish(F::Separation),
            initial.finish(F::InitialPosition),
            implication.finish(F::CacheImplication),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::scenario::{generate_scenario, ScenarioSpec};

    fn quiet(uavs: usize) -> (Scenario, SlotState, Decision) {
        let spec = ScenarioSpec { isd_count: 4, uav_count: uavs, ..ScenarioSpec::default() };
        let sc = generate_scenario(&spec).unwrap();
        let state = SlotState::initial(&sc, vec![None; 4]);
        let d = Decision::all_local(&state.tasks, state.prev_cache.clone(), state.uav_positions.clone());
        (sc, state, d)
    }

    #[test]
    fn idle_slot_passes_everything() {
        let (sc, state, d) = quiet(3);
        let r = audit_constraints(&sc, &state, &d).unwrap();
        assert!(r.passes(), "failing: {:?}", r.failing());
        assert!(r.checks.iter().all(|c| c.violation == 0.0));
    }

    #[test]
    fn close_pair_violates_separation_by_squared_gap() {
        let (mut sc, mut state, mut d) = quiet(2);
        sc.min_separation_m = 10.0;
        sc.uavs[0].initial_position_m = Point2::new(100.0, 100.0);
        sc.uavs[1].initial_position_m = Point2::new(105.0, 100.0);
        state.uav_positions = sc.initial_positions();
        d.positions = state.uav_positions.clone();
        let r = audit_constraints(&sc, &state, &d).unwrap();
        assert!((r.violation(ConstraintFamily::Separation) - 75.0).abs() < 1e-9);
        assert_eq!(r.failing(), vec![ConstraintFamily::Separation]);
    }

    #[test]
    fn one_extra_cache_entry() {
        let (mut sc, state, mut d) = quiet(1);
        sc.uavs[0].cache_slots = 5;
        d.cache[0] = (0..sc.service_count()).map(|s| s < 6).collect();
        let r = audit_constraints(&sc, &state, &d).unwrap();
        assert_eq!(r.violation(ConstraintFamily::CacheCapacity), 1.0);
        assert!(!r.passes());
    }

    #[test]
    fn missing_mode_breaks_uniqueness() {
        let (sc, mut state, d) = quiet(1);
        state.tasks[2] = Some(crate::model::types::Task {
            size_bits: 1e6,
            service_id: 0,
            density: 500.0,
            deadline_s: 1.0,
        });
        let r = audit_constraints(&sc, &state, &d).unwrap();
        assert_eq!(r.violation(ConstraintFamily::ModeUniqueness), 1.0);
    }
}
