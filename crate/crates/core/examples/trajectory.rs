//! Successive convex approximation of the UAV positions for a decision
//! produced with the trajectory held fixed.

use amo::orchestrator::{solve_slot, ApproachId, OrchestratorParams};
use amo::scenario::{draw_tasks, generate_scenario, task_rng, ScenarioSpec, SlotState};
use amo::sp3::{solve_sp3, Sp3Params};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = generate_scenario(&ScenarioSpec::default())?;
    let mut rng = task_rng(&sc);
    let state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut rng));

    // SU fixes everything except the trajectory, which stays where it is.
    let fixed = solve_slot(&sc, &state, ApproachId::Su, &OrchestratorParams::default())?;
    let sol = solve_sp3(&sc, &state, &fixed.decision, &Sp3Params::default())?;

    println!("status {:?} after {} SCA rounds", sol.report.status, sol.report.iterations);
    for r in &sol.report.trace {
        println!("  round {:>2}  delay {:.5} s", r.iteration, r.objective);
    }
    println!("delay at start positions {:.5} s -> {:.5} s", fixed.objective_s, sol.objective_s);
    for (u, (a, b)) in state.uav_positions.iter().zip(&sol.positions).enumerate() {
        let moved = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
        println!(
            "UAV {u}: ({:.1}, {:.1}) -> ({:.1}, {:.1}), {moved:.2} m",
            a.x, a.y, b.x, b.y
        );
    }
    Ok(())
}
