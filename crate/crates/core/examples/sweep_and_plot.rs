//! A small ISD-count sweep written as CSV and charted as SVG.

use std::fs::File;

use amo::harness::{emit_plot, run_sweep, write_records, SweepParam, SweepPlan};
use amo::orchestrator::{ApproachId, OrchestratorParams};
use amo::scenario::ScenarioSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = SweepPlan {
        base: ScenarioSpec { slot_count: 5, ..ScenarioSpec::default() },
        solver: OrchestratorParams::default(),
        param: SweepParam::IsdCount,
        values: vec![10.0, 20.0, 30.0],
        approaches: vec![ApproachId::Jc5a, ApproachId::Lc, ApproachId::Ebcc],
        seeds: vec![0, 1],
        timing: false,
    };
    let rows = run_sweep(&plan)?;

    let dir = std::env::temp_dir().join("amo-sweep-example");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("isd_count.csv");
    write_records(File::create(&csv)?, &rows)?;
    for metric in ["acd", "apr", "aschr"] {
        emit_plot(&csv, metric, &dir.join(format!("{metric}.svg")))?;
    }
    for r in rows.iter().filter(|r| r.seed == amo::harness::SeedField::Agg) {
        println!(
            "{:<5} K={:<3} ACD {:.4} s  APR {:.3e}",
            r.approach,
            r.sweep_value.unwrap_or(f64::NAN),
            r.acd_s.unwrap_or(f64::NAN),
            r.apr_cps.unwrap_or(f64::NAN)
        );
    }
    println!("wrote {} and three charts", csv.display());
    Ok(())
}
