use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::types::Scenario;

/// Per-UAV cache contents with LRU recency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    /// Cached services per UAV, least recently used first.
    pub recency: Vec<Vec<usize>>,
    pub capacity: Vec<usize>,
    pub service_count: usize,
}

impl CacheState {
    /// U x S presence matrix.
    pub fn matrix(&self) -> Vec<Vec<bool>> {
        self.recency
            .iter()
            .map(|row| {
                let mut m = vec![false; self.service_count];
                for &s in row {
                    m[s] = true;
                }
                m
            })
            .collect()
    }

    pub fn contains(&self, uav: usize, service: usize) -> bool {
        self.recency[uav].contains(&service)
    }
}

/// Each UAV starts with its `cache_slots` most popular services. The most
/// popular one is treated as most recently used.
pub fn init_cache(scenario: &Scenario) -> CacheState {
    let ranking = scenario.services.ranking();
    let recency = scenario
        .uavs
        .iter()
        .map(|u| {
            let mut row: Vec<usize> = ranking.iter().take(u.cache_slots).copied().collect();
            row.reverse();
            row
        })
        .collect();
    CacheState {
        recency,
        capacity: scenario.uavs.iter().map(|u| u.cache_slots).collect(),
        service_count: scenario.service_count(),
    }
}

pub fn init_cache_matrix(scenario: &Scenario) -> Vec<Vec<bool>> {
    init_cache(scenario).matrix()
}

/// Replay this slot's service requests `(uav, service)` in order through
/// LRU replacement.
///
/// Fails when one UAV is asked for more distinct services in a single slot
/// than it can hold, since a later insertion would evict a service still in
/// use.
pub fn apply_lru(prev: &CacheState, served: &[(usize, usize)]) -> Result<CacheState, ModelError> {
    let uavs = prev.recency.len();
    let mut demanded: Vec<Vec<usize>> = vec![Vec::new(); uavs];
    for &(u, s) in served {
        if u >= uavs || s >= prev.service_count {
            return Err(ModelError::InvalidArgument(format!("request ({u}, {s}) out of range")));
        }
        if !demanded[u].contains(&s) {
            demanded[u].push(s);
        }
    }
    for (u, d) in demanded.iter().enumerate() {
        if d.len() > prev.capacity[u] {
            return Err(ModelError::CacheOverflow {
                uav: u,
                demanded: d.len(),
                capacity: prev.capacity[u],
            });
        }
    }
    let mut next = prev.clone();
    for &(u, s) in served {
        let row = &mut next.recency[u];
        if let Some(pos) = row.iter().position(|&x| x == s) {
            row.remove(pos);
        } else if row.len() >= next.capacity[u] {
            row.remove(0);
        }
        row.push(s);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rows: Vec<Vec<usize>>, cap: usize, s: usize) -> CacheState {
        let n = rows.len();
        CacheState {
            recency: rows,
            capacity: vec![cap; n],
            service_count: s,
        }
    }

    #[test]
    fn textbook_eviction() {
        // A = 0, B = 1, D = 3; A was used after B.
        let prev = state(vec![vec![1, 0]], 2, 4);
        let next = apply_lru(&prev, &[(0, 0), (0, 3)]).unwrap();
        let m = next.matrix();
        assert_eq!(m[0], vec![true, false, false, true]);
    }

    #[test]
    fn no_requests_is_identity() {
        let prev = state(vec![vec![2, 1], vec![0]], 2, 3);
        assert_eq!(apply_lru(&prev, &[]).unwrap(), prev);
    }

    #[test]
    fn too_many_distinct_services_overflow() {
        let prev = state(vec![vec![0]], 1, 3);
        let err = apply_lru(&prev, &[(0, 1), (0, 2)]).unwrap_err();
        assert!(matches!(err, ModelError::CacheOverflow { uav: 0, demanded: 2, capacity: 1 }));
    }
}
