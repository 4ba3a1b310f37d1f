//! Horizon-level evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::model::types::Mode;
use crate::orchestrator::HorizonResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Summed task delay per slot, normalized by the ISD count. Tasks past
    /// their deadline count with their actual delay. `None` when no task
    /// arrived.
    pub acd_s: Option<f64>,
    /// Cycles of arrived tasks per second of their summed delay.
    pub apr_cps: Option<f64>,
    /// Home-UAV executions per slot relative to the total cache capacity.
    pub aschr: f64,
    /// Share of arrived tasks that missed their deadline.
    pub fail_rate: f64,
    pub slot_ms: f64,
}

pub fn compute_metrics(h: &HorizonResult) -> Metrics {
    let n = h.slots.len().max(1) as f64;
    let k = h.isd_count.max(1) as f64;
    let mut delay_sum = 0.0;
    let mut cycles = 0.0;
    let mut missed = 0usize;
    let mut arrived = 0usize;
    let mut hits = 0usize;
    for t in h.slots.iter().flat_map(|s| &s.tasks) {
        arrived += 1;
        delay_sum += t.delay_s;
        cycles += t.cycles;
        if t.mode == Mode::HomeUav {
            hits += 1;
        }
        if !t.completed {
            missed += 1;
        }
    }
    let cap = h.total_cache_slots.max(1) as f64;
    Metrics {
        acd_s: (arrived > 0).then(|| delay_sum / k / n),
        apr_cps: (delay_sum > 0.0).then(|| cycles / delay_sum),
        aschr: hits as f64 / cap / n,
        fail_rate: if arrived == 0 { 0.0 } else { missed as f64 / arrived as f64 },
        slot_ms: h.slots.iter().map(|s| s.solve_ms).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::{ApproachId, SlotRecord, TaskRecord};
    use crate::scenario::EnergyLedger;

    fn task(mode: Mode, delay_s: f64, completed: bool) -> TaskRecord {
        TaskRecord { isd: 0, mode, delay_s, deadline_s: 1.0, cycles: 1e6 * 500.0, completed }
    }

    fn horizon(slots: Vec<Vec<TaskRecord>>, isd_count: usize) -> HorizonResult {
        HorizonResult {
            approach: ApproachId::Jc5a,
            seed: 0,
            slots: slots
                .into_iter()
                .enumerate()
                .map(|(slot, tasks)| SlotRecord {
                    slot,
                    home_hits: tasks.iter().filter(|t| t.mode == Mode::HomeUav).count(),
                    tasks,
                    objective_s: 0.0,
                    outer_trace: vec![0.0],
                    converged: true,
                    energy: EnergyLedger::zeros(isd_count, 1),
                    structural_ok: true,
                    energy_overruns: 0,
                    solve_ms: 4.0,
                })
                .collect(),
            ledgers: EnergyLedger::zeros(isd_count, 1),
            total_cache_slots: 5,
            isd_count,
        }
    }

    #[test]
    fn single_task() {
        let m = compute_metrics(&horizon(vec![vec![task(Mode::Local, 0.5, true)]], 1));
        assert_eq!(m.acd_s, Some(0.5));
        assert_eq!(m.apr_cps, Some(1e9));
        assert_eq!(m.aschr, 0.0);
        assert_eq!(m.fail_rate, 0.0);
        assert_eq!(m.slot_ms, 4.0);
    }

    #[test]
    fn normalizes_by_isds_and_slots() {
        let h = horizon(
            vec![
                vec![task(Mode::HomeUav, 0.2, true), task(Mode::Mbs, 0.6, true)],
                vec![task(Mode::HomeUav, 1.4, false)],
            ],
            4,
        );
        let m = compute_metrics(&h);
        assert!((m.acd_s.unwrap() - 2.2 / 4.0 / 2.0).abs() < 1e-15);
        assert!((m.apr_cps.unwrap() - 3.0 * 5e8 / 2.2).abs() < 1e-3);
        assert!((m.aschr - 2.0 / 5.0 / 2.0).abs() < 1e-15);
        assert!((m.fail_rate - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_arrivals() {
        let m = compute_metrics(&horizon(vec![vec![], vec![]], 3));
        assert_eq!((m.acd_s, m.apr_cps), (None, None));
        assert_eq!((m.aschr, m.fail_rate), (0.0, 0.0));
    }
}
