//! Every approach on the same slot: outer-loop trace, audit and misses.

use amo::orchestrator::{solve_slot, ApproachId, OrchestratorParams};
use amo::scenario::{draw_tasks, generate_scenario, task_rng, ScenarioSpec, SlotState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = generate_scenario(&ScenarioSpec::default())?;
    let mut rng = task_rng(&sc);
    let state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut rng));
    println!("slot 0: {} tasks", state.task_count());

    for approach in ApproachId::ALL {
        let t0 = std::time::Instant::now();
        let sol = solve_slot(&sc, &state, approach, &OrchestratorParams::default())?;
        let trace: Vec<String> = sol.reports.outer.objectives().iter().map(|t| format!("{t:.3}")).collect();
        println!(
            "{approach:<5} delay {:>7.3} s  misses {:>2}  audit {}  {:>5.0} ms  trace [{}]",
            sol.objective_s,
            sol.deadline_failures.len(),
            if sol.audit.structural_ok() { "ok" } else { "FAIL" },
            t0.elapsed().as_secs_f64() * 1e3,
            trace.join(", ")
        );
    }
    Ok(())
}
