use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::types::{Scenario, Task};
use crate::scenario::spec::uniform;

/// Independent task stream for a scenario. Seeded apart from the scenario
/// RNG so every approach sees the same arrivals.
pub fn task_rng(scenario: &Scenario) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x7a5c_c0de_0000_0001)
}

/// One optional task per ISD for `slot`.
pub fn draw_tasks<R: Rng>(scenario: &Scenario, slot: usize, rng: &mut R) -> Vec<Option<Task>> {
    debug_assert!(slot < scenario.slot_count);
    let dist = &scenario.tasks;
    let services = WeightedIndex::new(&scenario.services.popularity)
        .expect("popularity vector has positive mass");
    (0..scenario.isd_count())
        .map(|_| {
            if !rng.gen_bool(dist.arrival_prob) {
                return None;
            }
            Some(Task {
                size_bits: uniform(rng, dist.size_bits),
                density: uniform(rng, dist.density),
                deadline_s: uniform(rng, dist.deadline_s),
                service_id: services.sample(rng),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioSpec};

    fn always_arriving() -> Scenario {
        generate_scenario(&ScenarioSpec { arrival_prob: 1.0, ..ScenarioSpec::default() }).unwrap()
    }

    #[test]
    fn service_frequencies_follow_zipf() {
        let sc = always_arriving();
        let mut rng = task_rng(&sc);
        let mut counts = vec![0usize; sc.service_count()];
        let mut n = 0usize;
        while n < 100_000 {
            for t in draw_tasks(&sc, 0, &mut rng).into_iter().flatten() {
                counts[t.service_id] += 1;
                n += 1;
            }
        }
        let total: f64 = sc.services.popularity.iter().sum();
        let chi2: f64 = counts
            .iter()
            .zip(&sc.services.popularity)
            .map(|(&c, &p)| {
                let e = n as f64 * p / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 19 degrees of freedom, upper 0.1% point
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }

    #[test]
    fn fields_stay_in_range() {
        let sc = always_arriving();
        let d = &sc.tasks;
        let mut rng = task_rng(&sc);
        for slot in 0..sc.slot_count {
            for t in draw_tasks(&sc, slot, &mut rng).into_iter().flatten() {
                assert!(d.size_bits.contains(t.size_bits));
                assert!(d.density.contains(t.density));
                assert!(d.deadline_s.contains(t.deadline_s));
                assert!(t.service_id < sc.service_count());
            }
        }
    }

    #[test]
    fn stream_depends_only_on_seed() {
        let sc = always_arriving();
        let a: Vec<_> = (0..5).map(|n| draw_tasks(&sc, n, &mut task_rng(&sc))).collect();
        let b: Vec<_> = (0..5).map(|n| draw_tasks(&sc, n, &mut task_rng(&sc))).collect();
        assert_eq!(a, b);
    }
}
