//! One offloading/caching solve: relax, run the block method of
//! multipliers, round, and report the integrality gap.

use amo::model::types::Decision;
use amo::scenario::{draw_tasks, generate_scenario, task_rng, ScenarioSpec, SlotState};
use amo::sp1::{build_sp1, candidates, choices_to_modes, solve_sp1, Incumbent, Sp1Params};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = generate_scenario(&ScenarioSpec::default())?;
    let mut rng = task_rng(&sc);
    let state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut rng));
    let start = Decision::all_local(&state.tasks, state.prev_cache.clone(), state.uav_positions.clone());

    let problem = candidates(
        &sc,
        &state,
        Incumbent { decision: &start, allocated: false, equal_split: false },
        true,
    )?;
    let inst = build_sp1(problem);
    println!(
        "{} tasks, {} variables, {} equalities, {} inequalities",
        inst.task_count(),
        inst.n_vars,
        inst.eq_rows.len(),
        inst.ineq_rows.len()
    );

    let sol = solve_sp1(&inst, &Sp1Params::default(), None, false)?;
    println!("status {:?} after {} iterations", sol.report.status, sol.report.iterations);
    for r in sol.report.trace.iter().filter(|r| r.iteration % 25 == 1) {
        println!(
            "  iter {:>3}  L {:>9.4}  omega1 {:.2e}  omega2 {:.2e}",
            r.iteration,
            r.objective,
            r.omega1.unwrap_or(f64::NAN),
            r.omega2.unwrap_or(f64::NAN)
        );
    }
    let local: f64 = inst.problem.tasks.iter().map(|t| t.local_delay_s).sum();
    println!("estimated delay {:.3} s (all local: {local:.3} s)", sol.objective(&inst));
    println!("gap {:?}", sol.gap);

    let modes = choices_to_modes(&sc, &inst.problem, &sol.choices);
    let mut tally = std::collections::BTreeMap::new();
    for m in modes.iter().flatten() {
        *tally.entry(format!("{m:?}")).or_insert(0) += 1;
    }
    println!("modes {tally:?}");
    for (u, row) in sol.cache.iter().enumerate() {
        let held: Vec<usize> = (0..row.len()).filter(|&s| row[s]).collect();
        println!("UAV {u} caches {held:?}");
    }
    Ok(())
}
