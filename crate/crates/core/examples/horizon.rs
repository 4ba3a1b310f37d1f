//! Short horizons for every approach with the headline metrics.
//!
//! `cargo run --release --example horizon -- 3` averages over seeds 0..3.

use amo::harness::run_one;
use amo::orchestrator::{ApproachId, OrchestratorParams};
use amo::scenario::ScenarioSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let spec = ScenarioSpec { slot_count: 20, ..ScenarioSpec::default() };
    let params = OrchestratorParams::default();

    println!("{:<5} {:>8} {:>12} {:>7} {:>7} {:>9}", "", "ACD_s", "APR_cps", "ASCHR", "fail", "ms/slot");
    for approach in ApproachId::ALL {
        let mut sums = [0.0; 5];
        for seed in 0..seeds {
            let (h, m) = run_one(&spec, seed, approach, &params)?;
            assert_eq!(h.slots.len(), spec.slot_count);
            for (s, v) in sums.iter_mut().zip([
                m.acd_s.unwrap_or(f64::NAN),
                m.apr_cps.unwrap_or(f64::NAN),
                m.aschr,
                m.fail_rate,
                m.slot_ms,
            ]) {
                *s += v / seeds as f64;
            }
        }
        println!(
            "{approach:<5} {:>8.4} {:>12.4e} {:>7.4} {:>7.3} {:>9.1}",
            sums[0], sums[1], sums[2], sums[3], sums[4]
        );
    }
    Ok(())
}
