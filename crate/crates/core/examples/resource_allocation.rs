//! Bandwidth and CPU allocation for a fixed offloading decision, compared
//! with an even split of every resource.

use amo::model::types::Mode;
use amo::scenario::{draw_tasks, generate_scenario, task_rng, ScenarioSpec, SlotState};
use amo::sp2::{solve_sp2, sqrt_alloc, AllocGroup, Sp2Params};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Square-root rule on a toy group: minimizing sum(w/x) under sum(x) = C
    // gives x proportional to sqrt(w), so w/x^2 is the same for everyone.
    let g = AllocGroup { capacity: 10.0, weights: vec![1.0, 4.0, 9.0] };
    let x = sqrt_alloc(&g);
    println!("toy allocation {x:?}");
    let ratios: Vec<f64> = g.weights.iter().zip(&x).map(|(w, x)| w / (x * x)).collect();
    println!("w/x^2 {ratios:?}\n");

    let sc = generate_scenario(&ScenarioSpec::default())?;
    let mut rng = task_rng(&sc);
    let state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut rng));
    // Home UAV when it already caches the service, MBS otherwise.
    let modes: Vec<Option<Mode>> = state
        .tasks
        .iter()
        .enumerate()
        .map(|(k, t)| {
            t.map(|t| {
                if state.prev_cache[sc.home[k]][t.service_id] {
                    Mode::HomeUav
                } else {
                    Mode::Mbs
                }
            })
        })
        .collect();

    let (layout, sol) = solve_sp2(
        &sc,
        &state.tasks,
        &state.prev_cache,
        &modes,
        &state.uav_positions,
        &Sp2Params::default(),
    )?;
    let even = layout.objective(&layout.equal_split());
    println!("{} resource groups", layout.groups.len());
    for (grp, frac) in layout.groups.iter().zip(&sol.fractions) {
        let shares: Vec<String> = frac.iter().map(|f| format!("{f:.3}")).collect();
        println!("  {:<12} {}", format!("{:?}", grp.kind), shares.join(" "));
    }
    println!("total delay: optimized {:.4} s, even split {even:.4} s", sol.objective_s);
    println!("status {:?}, fallback used: {}", sol.report.status, sol.used_fallback);
    if !sol.flagged.is_empty() {
        println!("deadline missed even at best allocation: ISDs {:?}", sol.flagged);
    }
    Ok(())
}
