//! Per-slot alternation of the three subproblems, the baselines, and the
//! multi-slot horizon with cache, position and energy carryover.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::audit::{audit_with_eval, ConstraintReport};
use crate::model::energy::Entity;
use crate::model::eval::{evaluate, SlotEvaluation};
use crate::model::types::{Bandwidth, Decision, Mode, Scenario};
use crate::report::{SolverReport, SolverStatus, TraceRecord};
use crate::scenario::{apply_lru, draw_tasks, init_cache, task_rng, EnergyLedger, SlotState};
use crate::sp1::{build_sp1, candidates, choices_to_modes, solve_sp1, Choice, Incumbent, Sp1Params};
use crate::sp2::{build_layout, solve_sp2, Sp2Params};
use crate::sp3::{solve_sp3, Sp3Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ApproachId {
    Jc5a,
    /// Everything computed on the ISDs.
    Lc,
    /// Everything offloaded; local execution is not an option.
    Ao,
    /// UAVs stay at their initial positions.
    Su,
    /// Bandwidth and CPU split evenly among the tasks that use them.
    Ebcc,
}

impl ApproachId {
    pub const ALL: [ApproachId; 5] = [
        ApproachId::Jc5a,
        ApproachId::Lc,
        ApproachId::Ao,
        ApproachId::Su,
        ApproachId::Ebcc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ApproachId::Jc5a => "JC5A",
            ApproachId::Lc => "LC",
            ApproachId::Ao => "AO",
            ApproachId::Su => "SU",
            ApproachId::Ebcc => "EBCC",
        }
    }

    fn allows_local(self) -> bool {
        self != ApproachId::Ao
    }

    fn moves(self) -> bool {
        self != ApproachId::Su
    }
}

impl fmt::Display for ApproachId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ApproachId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ApproachId::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown approach {s:?}; expected one of JC5A, LC, AO, SU, EBCC"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrchestratorParams {
    pub sp1: Sp1Params,
    pub sp2: Sp2Params,
    pub sp3: Sp3Params,
    pub outer: OuterParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuterParams {
    pub max_iters: usize,
    pub eps: f64,
}

impl Default for OuterParams {
    fn default() -> Self {
        Self { max_iters: 20, eps: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReports {
    /// Total delay of the incumbent after every outer iteration, iterate 0 first.
    pub outer: SolverReport,
    pub sp1: Vec<SolverReport>,
    pub sp2: Vec<SolverReport>,
    pub sp3: Vec<SolverReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSolution {
    pub decision: Decision,
    pub objective_s: f64,
    pub evaluation: SlotEvaluation,
    pub reports: SlotReports,
    pub audit: ConstraintReport,
    /// ISDs whose task misses its deadline.
    pub deadline_failures: Vec<usize>,
    /// Entities over their per-slot energy budget.
    pub energy_overruns: Vec<Entity>,
    /// The outer loop stopped on its tolerance rather than the cap.
    pub converged: bool,
}

fn choices_of(scenario: &Scenario, state: &SlotState, d: &Decision) -> Vec<Choice> {
    let u = scenario.uav_count();
    (0..scenario.isd_count())
        .filter(|&k| state.tasks[k].is_some())
        .map(|k| d.modes[k].map_or(Choice::Local, |m| Choice::from_mode(m, scenario.home[k], u)))
        .collect()
}

/// Bandwidth and CPU for fixed modes: the allocation subproblem, or an even
/// split for EBCC.
fn allocate(
    approach: ApproachId,
    scenario: &Scenario,
    state: &SlotState,
    modes: &[Option<Mode>],
    positions: &[crate::geometry::Point2],
    params: &Sp2Params,
) -> Result<(Bandwidth, Vec<f64>, SolverReport), ModelError> {
    if approach == ApproachId::Ebcc {
        let layout = build_layout(scenario, &state.tasks, &state.prev_cache, modes, positions)?;
        let frac = layout.equal_split();
        let (bw, cpu) = layout.to_allocation(&frac, scenario.isd_count(), scenario.uav_count());
        return Ok((bw, cpu, SolverReport::skipped()));
    }
    let (_, sol) = solve_sp2(scenario, &state.tasks, &state.prev_cache, modes, positions, params)?;
    Ok((sol.bandwidth, sol.cpu_alloc_hz, sol.report))
}

fn finish(
    scenario: &Scenario,
    state: &SlotState,
    decision: Decision,
    evaluation: SlotEvaluation,
    reports: SlotReports,
    converged: bool,
) -> Result<SlotSolution, ModelError> {
    let audit = audit_with_eval(scenario, state, &decision, &evaluation)?;
    let deadline_failures = evaluation.deadline_misses();
    let mut energy_overruns = Vec::new();
    for (k, e) in evaluation.isd_energy.iter().enumerate() {
        if e.total() > scenario.isds[k].energy_budget_j {
            energy_overruns.push(Entity::Isd(k));
        }
    }
    for (u, e) in evaluation.uav_energy.iter().enumerate() {
        if e.total() > scenario.uavs[u].energy_budget_j {
            energy_overruns.push(Entity::Uav(u));
        }
    }
    if evaluation.mbs_energy.total() > scenario.mbs.energy_budget_j {
        energy_overruns.push(Entity::Mbs);
    }
    Ok(SlotSolution {
        objective_s: evaluation.total_delay_s,
        decision,
        evaluation,
        reports,
        audit,
        deadline_failures,
        energy_overruns,
        converged,
    })
}

/// Iterate 0 of the outer loop: local execution with the carried cache, or
/// for AO everything sent to the MBS, which needs no cache.
fn initial_decision(
    approach: ApproachId,
    scenario: &Scenario,
    state: &SlotState,
    params: &OrchestratorParams,
) -> Result<Decision, ModelError> {
    let mut d = Decision::all_local(&state.tasks, state.prev_cache.clone(), state.uav_positions.clone());
    if approach == ApproachId::Ao {
        for (m, t) in d.modes.iter_mut().zip(&state.tasks) {
            if t.is_some() {
                *m = Some(Mode::Mbs);
            }
        }
        let (bw, cpu, _) = allocate(approach, scenario, state, &d.modes, &d.positions, &params.sp2)?;
        d.bandwidth = bw;
        d.cpu_alloc_hz = cpu;
    }
    Ok(d)
}

pub fn solve_slot(
    scenario: &Scenario,
    state: &SlotState,
    approach: ApproachId,
    params: &OrchestratorParams,
) -> Result<SlotSolution, ModelError> {
    let mut reports = SlotReports {
        outer: SolverReport::new(SolverStatus::Stalled),
        sp1: Vec::new(),
        sp2: Vec::new(),
        sp3: Vec::new(),
    };
    let mut cur = initial_decision(approach, scenario, state, params)?;
    let mut cur_eval = evaluate(scenario, state, &cur)?;
    reports.outer.trace.push(TraceRecord::objective(0, cur_eval.total_delay_s));
    if approach == ApproachId::Lc {
        reports.outer.status = SolverStatus::Skipped;
        return finish(scenario, state, cur, cur_eval, reports, true);
    }

    let mut converged = false;
    for r in 1..=params.outer.max_iters {
        let step = || -> Result<(Decision, SolverReport, SolverReport, SolverReport), ModelError> {
            let incumbent = Incumbent {
                decision: &cur,
                allocated: r > 1 || approach == ApproachId::Ao,
                equal_split: approach == ApproachId::Ebcc,
            };
            let problem = candidates(scenario, state, incumbent, approach.allows_local())?;
            let inst = build_sp1(problem);
            let start = inst.encode(&choices_of(scenario, state, &cur), &cur.cache);
            let s1 = solve_sp1(&inst, &params.sp1, Some(&start), false)?;
            let modes = choices_to_modes(scenario, &inst.problem, &s1.choices);
            let (bw, cpu, rep2) = allocate(approach, scenario, state, &modes, &cur.positions, &params.sp2)?;
            let mut next = Decision {
                modes,
                cache: s1.cache,
                bandwidth: bw,
                cpu_alloc_hz: cpu,
                positions: cur.positions.clone(),
            };
            let rep3 = if approach.moves() {
                let s3 = solve_sp3(scenario, state, &next, &params.sp3)?;
                next.positions = s3.positions;
                s3.report
            } else {
                SolverReport::skipped()
            };
            Ok((next, s1.report, rep2, rep3))
        };
        let (next, rep1, rep2, rep3) = match step() {
            Ok(x) => x,
            Err(_) => {
                reports.outer.status = SolverStatus::NumericalFailure;
                break;
            }
        };
        reports.sp1.push(rep1);
        reports.sp2.push(rep2);
        reports.sp3.push(rep3);
        let next_eval = evaluate(scenario, state, &next)?;
        let audit = audit_with_eval(scenario, state, &next, &next_eval)?;
        let t_prev = cur_eval.total_delay_s;
        let t = next_eval.total_delay_s;
        // The candidate replaces the incumbent only if it does not raise the
        // total delay. A rejected candidate would be regenerated unchanged,
        // so the loop has reached its fixed point.
        if !(t <= t_prev) || !audit.structural_ok() {
            reports.outer.trace.push(TraceRecord::objective(r, t_prev));
            reports.outer.iterations = r;
            reports.outer.status = SolverStatus::Converged;
            converged = true;
            break;
        }
        cur = next;
        cur_eval = next_eval;
        reports.outer.trace.push(TraceRecord::objective(r, t));
        reports.outer.iterations = r;
        if t_prev - t < params.outer.eps {
            reports.outer.status = SolverStatus::Converged;
            converged = true;
            break;
        }
    }

    if approach.allows_local() {
        let misses = cur_eval.deadline_misses();
        let mut demoted = cur.clone();
        let mut any = false;
        for k in misses {
            let task = state.tasks[k].expect("missed task exists");
            if task.cycles() / scenario.isds[k].cpu_hz <= task.deadline_s && demoted.modes[k] != Some(Mode::Local) {
                demoted.modes[k] = Some(Mode::Local);
                any = true;
            }
        }
        if any {
            let (bw, cpu, rep2) =
                allocate(approach, scenario, state, &demoted.modes, &demoted.positions, &params.sp2)?;
            demoted.bandwidth = bw;
            demoted.cpu_alloc_hz = cpu;
            reports.sp2.push(rep2);
            cur_eval = evaluate(scenario, state, &demoted)?;
            cur = demoted;
        }
    }
    finish(scenario, state, cur, cur_eval, reports, converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub isd: usize,
    pub mode: Mode,
    pub delay_s: f64,
    pub deadline_s: f64,
    pub cycles: f64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub tasks: Vec<TaskRecord>,
    /// Tasks executed on their home UAV.
    pub home_hits: usize,
    pub objective_s: f64,
    pub outer_trace: Vec<f64>,
    pub converged: bool,
    /// Energy charged in this slot.
    pub energy: EnergyLedger,
    pub structural_ok: bool,
    pub energy_overruns: usize,
    pub solve_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub approach: ApproachId,
    pub seed: u64,
    pub slots: Vec<SlotRecord>,
    /// Cumulative energy since slot 0.
    pub ledgers: EnergyLedger,
    pub total_cache_slots: usize,
    pub isd_count: usize,
}

/// Simulate every slot of `scenario` under `approach`.
pub fn run_horizon(
    scenario: &Scenario,
    approach: ApproachId,
    params: &OrchestratorParams,
) -> Result<HorizonResult, ModelError> {
    let mut rng = task_rng(scenario);
    let mut cache = init_cache(scenario);
    let mut state = SlotState::initial(scenario, vec![None; scenario.isd_count()]);
    let mut ledgers = EnergyLedger::zeros(scenario.isd_count(), scenario.uav_count());
    let mut slots = Vec::with_capacity(scenario.slot_count);
    for n in 0..scenario.slot_count {
        state.slot = n;
        state.tasks = draw_tasks(scenario, n, &mut rng);
        state.prev_cache = cache.matrix();
        let started = Instant::now();
        let sol = solve_slot(scenario, &state, approach, params)?;
        let solve_ms = started.elapsed().as_secs_f64() * 1e3;

        let mut served = Vec::new();
        let mut tasks = Vec::new();
        let mut home_hits = 0;
        for (k, o) in sol.evaluation.outcomes.iter().enumerate() {
            let (Some(o), Some(task)) = (o, state.tasks[k]) else { continue };
            if let Some(w) = o.mode.executing_uav(scenario.home[k]) {
                served.push((w, task.service_id));
            }
            if o.mode == Mode::HomeUav {
                home_hits += 1;
            }
            tasks.push(TaskRecord {
                isd: k,
                mode: o.mode,
                delay_s: o.delay_s,
                deadline_s: task.deadline_s,
                cycles: task.cycles(),
                completed: o.deadline_met,
            });
        }
        cache = apply_lru(&cache, &served)?;

        let ev = &sol.evaluation;
        let energy = EnergyLedger {
            isd_j: ev.isd_energy.iter().map(|e| e.total()).collect(),
            uav_j: ev.uav_energy.iter().map(|e| e.total()).collect(),
            mbs_j: ev.mbs_energy.total(),
        };
        for (a, b) in ledgers.isd_j.iter_mut().zip(&energy.isd_j) {
            *a += b;
        }
        for (a, b) in ledgers.uav_j.iter_mut().zip(&energy.uav_j) {
            *a += b;
        }
        ledgers.mbs_j += energy.mbs_j;
        state.uav_positions = sol.decision.positions.clone();
        state.ledgers = ledgers.clone();

        slots.push(SlotRecord {
            slot: n,
            tasks,
            home_hits,
            objective_s: sol.objective_s,
            outer_trace: sol.reports.outer.objectives(),
            converged: sol.converged,
            energy,
            structural_ok: sol.audit.structural_ok(),
            energy_overruns: sol.energy_overruns.len(),
            solve_ms,
        });
    }
    Ok(HorizonResult {
        approach,
        seed: scenario.seed,
        slots,
        ledgers,
        total_cache_slots: scenario.uavs.iter().map(|u| u.cache_slots).sum(),
        isd_count: scenario.isd_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, init_cache_matrix, ScenarioSpec};

    fn small() -> (Scenario, SlotState) {
        let spec = ScenarioSpec { isd_count: 8, uav_count: 2, slot_count: 3, arrival_prob: 1.0, ..ScenarioSpec::default() };
        let sc = generate_scenario(&spec).unwrap();
        let mut state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut task_rng(&sc)));
        state.prev_cache = init_cache_matrix(&sc);
        (sc, state)
    }

    #[test]
    fn approach_names() {
        for a in ApproachId::ALL {
            assert_eq!(a.as_str().parse::<ApproachId>().unwrap(), a);
            assert_eq!(a.to_string().to_lowercase().parse::<ApproachId>().unwrap(), a);
        }
        assert!("JCA".parse::<ApproachId>().is_err());
        assert_eq!(format!("{:<5}|", ApproachId::Lc), "LC   |");
    }

    #[test]
    fn lc_keeps_everything_local() {
        let (sc, state) = small();
        let sol = solve_slot(&sc, &state, ApproachId::Lc, &OrchestratorParams::default()).unwrap();
        assert!(sol.decision.modes.iter().flatten().all(|&m| m == Mode::Local));
        assert_eq!(sol.reports.outer.objectives().len(), 1);
        assert_eq!(sol.decision.positions, state.uav_positions);
    }

    #[test]
    fn ao_never_runs_locally() {
        let (sc, state) = small();
        let sol = solve_slot(&sc, &state, ApproachId::Ao, &OrchestratorParams::default()).unwrap();
        assert!(sol.decision.modes.iter().flatten().all(|&m| m != Mode::Local));
        assert!(sol.audit.structural_ok());
    }

    #[test]
    fn su_stays_put() {
        let (sc, state) = small();
        let sol = solve_slot(&sc, &state, ApproachId::Su, &OrchestratorParams::default()).unwrap();
        assert_eq!(sol.decision.positions, state.uav_positions);
    }

    #[test]
    fn jc5a_trace_never_rises() {
        let (sc, state) = small();
        let sol = solve_slot(&sc, &state, ApproachId::Jc5a, &OrchestratorParams::default()).unwrap();
        let trace = sol.reports.outer.objectives();
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{trace:?}");
        assert!(sol.objective_s <= trace[0] + 1e-9);
        assert!(sol.audit.structural_ok());
    }

    #[test]
    fn horizon_is_deterministic() {
        let (sc, _) = small();
        let p = OrchestratorParams::default();
        let mut a = run_horizon(&sc, ApproachId::Jc5a, &p).unwrap();
        let mut b = run_horizon(&sc, ApproachId::Jc5a, &p).unwrap();
        for s in a.slots.iter_mut().chain(b.slots.iter_mut()) {
            s.solve_ms = 0.0;
        }
        assert_eq!(a, b);
        assert_eq!(a.slots.len(), 3);
        assert_eq!(a.total_cache_slots, sc.uavs.iter().map(|u| u.cache_slots).sum::<usize>());
    }
}
