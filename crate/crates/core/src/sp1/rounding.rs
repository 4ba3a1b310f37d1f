//! Threshold rounding, integrality gap and the repair loop.

use serde::{Deserialize, Serialize};

use crate::sp1::instance::{Choice, Sp1Instance};
use crate::sp1::lagrangian::Sp1Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Worst cache-capacity excess.
    pub delta1: f64,
    /// Worst deadline excess in seconds.
    pub delta2: f64,
    /// Worst serve-without-cache excess.
    pub delta3: f64,
    pub xi: f64,
}

impl GapReport {
    pub fn delta(&self) -> f64 {
        self.delta1 + self.delta2 + self.delta3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounded {
    pub choices: Vec<Choice>,
    pub cache: Vec<Vec<bool>>,
    pub gap: GapReport,
}

/// `L / (L + xi * delta)`, equal to one exactly when nothing is violated.
pub fn integrality_gap(lagrangian: f64, delta: f64, xi: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if lagrangian <= 0.0 {
        0.0
    } else {
        lagrangian / (lagrangian + xi * delta)
    }
}

pub fn measure_gap(inst: &Sp1Instance, choices: &[Choice], cache: &[Vec<bool>], lagrangian: f64, xi: f64) -> GapReport {
    let p = &inst.problem;
    let mut delta1: f64 = 0.0;
    for (u, row) in cache.iter().enumerate() {
        let n = row.iter().filter(|&&b| b).count() as f64;
        delta1 = delta1.max(n - p.cache_slots[u] as f64);
    }
    let mut delta2: f64 = 0.0;
    let mut delta3: f64 = 0.0;
    for (&c, task) in choices.iter().zip(&p.tasks) {
        let d = task.delay(c);
        let target = task.deadline_target(p);
        delta2 = delta2.max(if d.is_finite() { d - target } else { f64::INFINITY });
        if let Some(w) = c.cache_uav(p.uav_count) {
            if !cache[w][task.service] {
                delta3 = 1.0;
            }
        }
    }
    let delta1 = delta1.max(0.0);
    let delta2 = delta2.max(0.0);
    let mut gap = GapReport {
        delta1,
        delta2,
        delta3,
        xi: 1.0,
    };
    gap.xi = integrality_gap(lagrangian, gap.delta(), xi);
    gap
}

/// Remote destinations a task may use, in tie-break order: lower delay,
/// then the home UAV, then lower index.
fn remote_order(inst: &Sp1Instance, t: usize) -> Vec<usize> {
    let task = &inst.problem.tasks[t];
    let mut js: Vec<usize> = (0..inst.dest_count()).filter(|&j| inst.upper[inst.y(t, j)] > 0.0).collect();
    js.sort_by(|&a, &b| {
        task.remote_delay_s[a]
            .total_cmp(&task.remote_delay_s[b])
            .then((b == task.home).cmp(&(a == task.home)))
            .then(a.cmp(&b))
    });
    js
}

fn round_task(inst: &Sp1Instance, v: &[f64], t: usize, delta: f64) -> Choice {
    let allow_local = inst.problem.allow_local;
    let x = v[inst.x(t)];
    let on: Vec<usize> = (0..inst.dest_count()).filter(|&j| v[inst.y(t, j)] >= delta).collect();
    if x < delta && allow_local && on.is_empty() {
        return Choice::Local;
    }
    if x >= delta && on.len() == 1 {
        return Choice::Remote(on[0]);
    }
    // Inconsistent threshold pattern: fall back to the heaviest mode.
    let mut best = if allow_local { Some((Choice::Local, 1.0 - x)) } else { None };
    for j in remote_order(inst, t) {
        let w = v[inst.y(t, j)];
        if best.map_or(true, |(_, bw)| w > bw) {
            best = Some((Choice::Remote(j), w));
        }
    }
    best.map_or(Choice::Remote(inst.problem.uav_count), |(c, _)| c)
}

pub fn round_and_gap(inst: &Sp1Instance, relaxed: &[f64], lagrangian: f64, params: &Sp1Params) -> Rounded {
    let delta = params.round_delta;
    let choices: Vec<Choice> = (0..inst.task_count()).map(|t| round_task(inst, relaxed, t, delta)).collect();
    let p = &inst.problem;
    let cache: Vec<Vec<bool>> = (0..p.uav_count)
        .map(|u| (0..p.service_count).map(|s| relaxed[inst.z(u, s)] >= delta).collect())
        .collect();
    let gap = measure_gap(inst, &choices, &cache, lagrangian, params.gap_weight);
    Rounded { choices, cache, gap }
}

/// Chain position used when demoting: peer, MBS, home, local.
fn stage(c: Choice, home: usize, uavs: usize) -> usize {
    match c {
        Choice::Remote(j) if j == uavs => 1,
        Choice::Remote(j) if j == home => 2,
        Choice::Remote(_) => 0,
        Choice::Local => 3,
    }
}

struct Repair<'a> {
    inst: &'a Sp1Instance,
    choices: Vec<Choice>,
    cache: Vec<Vec<bool>>,
}

impl Repair<'_> {
    fn uavs(&self) -> usize {
        self.inst.problem.uav_count
    }

    fn needed(&self, u: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .choices
            .iter()
            .zip(&self.inst.problem.tasks)
            .filter(|(c, _)| c.cache_uav(self.uavs()) == Some(u))
            .map(|(_, t)| t.service)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn count(&self, u: usize) -> usize {
        self.cache[u].iter().filter(|&&b| b).count()
    }

    /// Cached services at `u` that no routed task needs, least popular first
    /// and higher id first among equals.
    fn evictable(&self, u: usize) -> Vec<usize> {
        let needed = self.needed(u);
        let pop = &self.inst.problem.popularity;
        let mut s: Vec<usize> = (0..self.cache[u].len())
            .filter(|&s| self.cache[u][s] && !needed.contains(&s))
            .collect();
        s.sort_by(|&a, &b| pop[a].total_cmp(&pop[b]).then(b.cmp(&a)));
        s
    }

    /// Make room for `service` at `u` if possible, evicting unneeded entries.
    fn reserve(&mut self, u: usize, service: usize) -> bool {
        if self.cache[u][service] {
            return true;
        }
        let cap = self.inst.problem.cache_slots[u];
        if self.count(u) < cap {
            self.cache[u][service] = true;
            return true;
        }
        if let Some(&victim) = self.evictable(u).first() {
            self.cache[u][victim] = false;
            self.cache[u][service] = true;
            return true;
        }
        false
    }

    fn can_reserve(&self, u: usize, service: usize) -> bool {
        self.cache[u][service]
            || self.count(u) < self.inst.problem.cache_slots[u]
            || !self.evictable(u).is_empty()
    }

    fn cache_feasible(&self, t: usize, c: Choice) -> bool {
        match c.cache_uav(self.uavs()) {
            Some(w) => self.can_reserve(w, self.inst.problem.tasks[t].service),
            None => true,
        }
    }

    fn legal(&self, t: usize, c: Choice) -> bool {
        match c {
            Choice::Local => self.inst.problem.allow_local,
            Choice::Remote(j) => self.inst.upper[self.inst.y(t, j)] > 0.0,
        }
    }

    fn assign(&mut self, t: usize, c: Choice) {
        self.choices[t] = c;
        if let Some(w) = c.cache_uav(self.uavs()) {
            let s = self.inst.problem.tasks[t].service;
            let ok = self.reserve(w, s);
            debug_assert!(ok);
        }
    }

    /// Next legal mode down the chain that leaves UAV `u`, for a task whose
    /// service must be dropped there.
    fn demote_off(&self, t: usize) -> Choice {
        let task = &self.inst.problem.tasks[t];
        let uavs = self.uavs();
        let here = stage(self.choices[t], task.home, uavs);
        for c in [Choice::Remote(uavs), Choice::Local] {
            if stage(c, task.home, uavs) > here && self.legal(t, c) {
                return c;
            }
        }
        Choice::Remote(uavs)
    }

    fn fix_serve_without_cache(&mut self) {
        for t in 0..self.choices.len() {
            if let Some(w) = self.choices[t].cache_uav(self.uavs()) {
                self.cache[w][self.inst.problem.tasks[t].service] = true;
            }
        }
    }

    fn fix_capacity(&mut self) {
        let pop = self.inst.problem.popularity.clone();
        for u in 0..self.uavs() {
            let cap = self.inst.problem.cache_slots[u];
            while self.count(u) > cap {
                if let Some(&victim) = self.evictable(u).first() {
                    self.cache[u][victim] = false;
                    continue;
                }
                // Every cached entry is in use: drop the service with the
                // fewest requesters here, least popular among equals.
                let needed = self.needed(u);
                let requesters = |s: usize| {
                    self.choices
                        .iter()
                        .zip(&self.inst.problem.tasks)
                        .filter(|(c, tk)| c.cache_uav(self.uavs()) == Some(u) && tk.service == s)
                        .count()
                };
                let drop = *needed
                    .iter()
                    .min_by(|&&a, &&b| {
                        requesters(a)
                            .cmp(&requesters(b))
                            .then(pop[a].total_cmp(&pop[b]))
                            .then(b.cmp(&a))
                    })
                    .expect("over capacity implies a needed service");
                for t in 0..self.choices.len() {
                    let task = &self.inst.problem.tasks[t];
                    if task.service == drop && self.choices[t].cache_uav(self.uavs()) == Some(u) {
                        self.choices[t] = self.demote_off(t);
                    }
                }
                self.cache[u][drop] = false;
            }
        }
    }

    /// Move late tasks down the chain; when no mode meets the deadline, keep
    /// the fastest cache-feasible one and report the task.
    fn fix_deadlines(&mut self) -> Vec<usize> {
        let mut flagged = Vec::new();
        let uavs = self.uavs();
        for t in 0..self.choices.len() {
            let task = self.inst.problem.tasks[t].clone();
            let current = self.choices[t];
            let target = task.deadline_target(&self.inst.problem);
            if task.delay(current) <= target {
                continue;
            }
            let mut modes: Vec<Choice> = vec![Choice::Local];
            modes.extend((0..=uavs).map(Choice::Remote));
            modes.retain(|&c| self.legal(t, c) && (c == current || self.cache_feasible(t, c)));
            let here = stage(current, task.home, uavs);
            let meets = |c: &Choice| task.delay(*c) <= target;
            let mut down: Vec<Choice> = modes
                .iter()
                .copied()
                .filter(|c| stage(*c, task.home, uavs) > here && meets(c))
                .collect();
            down.sort_by_key(|c| stage(*c, task.home, uavs));
            let pick = down.first().copied().or_else(|| {
                modes
                    .iter()
                    .copied()
                    .filter(meets)
                    .min_by(|a, b| task.delay(*a).total_cmp(&task.delay(*b)))
            });
            let pick = match pick {
                Some(c) => c,
                None => {
                    flagged.push(t);
                    modes
                        .iter()
                        .copied()
                        .min_by(|a, b| task.delay(*a).total_cmp(&task.delay(*b)))
                        .unwrap_or(current)
                }
            };
            if pick != current {
                self.assign(t, pick);
            }
        }
        flagged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub choices: Vec<Choice>,
    pub cache: Vec<Vec<bool>>,
    /// Tasks that cannot meet their deadline under any cache-feasible mode.
    pub flagged: Vec<usize>,
}

/// Restore cache implication and capacity, then chase deadline violations.
pub fn repair(inst: &Sp1Instance, rounded: &Rounded) -> Repaired {
    let mut r = Repair {
        inst,
        choices: rounded.choices.clone(),
        cache: rounded.cache.clone(),
    };
    r.fix_serve_without_cache();
    r.fix_capacity();
    let flagged = r.fix_deadlines();
    Repaired {
        choices: r.choices,
        cache: r.cache,
        flagged,
    }
}

fn rows_hold(inst: &Sp1Instance, choices: &[Choice], cache: &[Vec<bool>]) -> bool {
    let v = inst.encode(choices, cache);
    inst.eq_values(&v).iter().all(|h| h.abs() <= 1e-9) && inst.ineq_values(&v).iter().all(|&g| g <= 1e-9)
}

/// Cache that serves `choices`: every UAV keeps what it holds, gains the
/// services its tasks need and sheds the least popular unneeded entries.
/// Fails when some UAV needs more services than it can hold.
fn fit_cache(inst: &Sp1Instance, choices: &[Choice], cache: &[Vec<bool>]) -> Option<Vec<Vec<bool>>> {
    let p = &inst.problem;
    let mut out = cache.to_vec();
    for (u, row) in out.iter_mut().enumerate() {
        let mut needed = vec![false; p.service_count];
        for (&c, t) in choices.iter().zip(&p.tasks) {
            if c.cache_uav(p.uav_count) == Some(u) {
                needed[t.service] = true;
            }
        }
        if needed.iter().filter(|&&b| b).count() > p.cache_slots[u] {
            return None;
        }
        for (r, &n) in row.iter_mut().zip(&needed) {
            *r |= n;
        }
        while row.iter().filter(|&&b| b).count() > p.cache_slots[u] {
            let victim = (0..p.service_count)
                .filter(|&s| row[s] && !needed[s])
                .min_by(|&a, &b| p.popularity[a].total_cmp(&p.popularity[b]))?;
            row[victim] = false;
        }
    }
    Some(out)
}

/// Best-improvement descent over moves of one task, or of two tasks when
/// the first is blocked by a full cache whose entries the second relies
/// on. Starts from and keeps to points that satisfy every row.
///
/// Delay estimates price a mode at the share a single newcomer would get,
/// so each destination and each home access band admits at most one
/// newcomer per call.
pub fn polish(inst: &Sp1Instance, choices: &mut Vec<Choice>, cache: &mut Vec<Vec<bool>>) {
    let p = &inst.problem;
    if !rows_hold(inst, choices, cache) {
        return;
    }
    let mut options: Vec<Choice> = (0..=p.uav_count).map(Choice::Remote).collect();
    if p.allow_local {
        options.push(Choice::Local);
    }
    let delay = |t: usize, c: Choice| p.tasks[t].delay(c);
    let original = choices.clone();
    let mut dest_taken = vec![false; p.uav_count + 1];
    let mut access_taken = vec![false; p.uav_count];
    // Whether moving task `t` to `c` would add a second newcomer somewhere.
    let crowds = |t: usize, c: Choice, dest_taken: &[bool], access_taken: &[bool]| match c {
        Choice::Remote(j) if c != original[t] => {
            dest_taken[j] || (original[t] == Choice::Local && access_taken[p.tasks[t].home])
        }
        _ => false,
    };
    loop {
        let mut best: Option<(f64, Vec<Choice>, Vec<Vec<bool>>)> = None;
        let consider = |gain: f64, trial: &[Choice], best: &mut Option<(f64, Vec<Choice>, Vec<Vec<bool>>)>| {
            if !(gain > 1e-12) || best.as_ref().is_some_and(|b| gain <= b.0) {
                return;
            }
            if let Some(c) = fit_cache(inst, trial, cache) {
                if rows_hold(inst, trial, &c) {
                    *best = Some((gain, trial.to_vec(), c));
                }
            }
        };
        for t in 0..p.tasks.len() {
            for &o in &options {
                let gain = delay(t, choices[t]) - delay(t, o);
                if o == choices[t] || !(gain > 1e-12) || crowds(t, o, &dest_taken, &access_taken) {
                    continue;
                }
                let mut trial = choices.clone();
                trial[t] = o;
                if fit_cache(inst, &trial, cache).is_some() {
                    consider(gain, &trial, &mut best);
                    continue;
                }
                let Some(u) = o.cache_uav(p.uav_count) else { continue };
                for t2 in 0..p.tasks.len() {
                    if t2 == t || choices[t2].cache_uav(p.uav_count) != Some(u) {
                        continue;
                    }
                    for &o2 in &options {
                        let clash = o2 == o && o2 != original[t2];
                        if o2 != choices[t2] && !clash && !crowds(t2, o2, &dest_taken, &access_taken) {
                            let mut pair = trial.clone();
                            pair[t2] = o2;
                            consider(gain + delay(t2, choices[t2]) - delay(t2, o2), &pair, &mut best);
                        }
                    }
                }
            }
        }
        let Some((_, c, k)) = best else { return };
        for t in 0..c.len() {
            if let (Choice::Remote(j), true) = (c[t], c[t] != original[t]) {
                dest_taken[j] = true;
                if original[t] == Choice::Local {
                    access_taken[p.tasks[t].home] = true;
                }
            }
        }
        *choices = c;
        *cache = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp1::instance::{build_sp1, Sp1Problem, TaskCandidates};

    fn problem(cache_slots: usize) -> Sp1Problem {
        let task = |service| TaskCandidates {
            isd: 0,
            home: 0,
            service,
            deadline_s: 1.0,
            local_delay_s: 0.9,
            remote_delay_s: vec![0.3, 0.6],
            access_footprint: 0.5,
            relay_footprint: vec![0.0, 0.5],
            cpu_footprint: vec![0.5, 0.5],
        };
        Sp1Problem {
            tasks: vec![task(0), task(1)],
            uav_count: 1,
            service_count: 3,
            cache_slots: vec![cache_slots],
            prev_cache: vec![vec![true, false, false]],
            popularity: vec![0.5, 0.3, 0.2],
            allow_local: true,
        }
    }

    #[test]
    fn threshold() {
        let inst = build_sp1(problem(2));
        let mut v = vec![0.0; inst.n_vars];
        v[inst.x(0)] = 0.6;
        v[inst.y(0, 0)] = 0.6;
        v[inst.z(0, 0)] = 0.7;
        let r = round_and_gap(&inst, &v, 1.0, &Sp1Params::default());
        assert_eq!(r.choices, vec![Choice::Remote(0), Choice::Local]);
        assert_eq!(r.cache[0], vec![true, false, false]);
        assert_eq!(r.gap.xi, 1.0);
    }

    #[test]
    fn over_capacity_gap_is_one_half() {
        let inst = build_sp1(problem(1));
        let choices = vec![Choice::Remote(0), Choice::Local];
        let cache = vec![vec![true, true, false]];
        let g = measure_gap(&inst, &choices, &cache, 1.0, 1.0);
        assert_eq!(g.delta1, 1.0);
        assert_eq!(g.delta(), 1.0);
        assert!((g.xi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn repair_restores_cache_rules() {
        let inst = build_sp1(problem(1));
        let rounded = Rounded {
            choices: vec![Choice::Remote(0), Choice::Remote(0)],
            cache: vec![vec![false, false, true]],
            gap: GapReport { delta1: 0.0, delta2: 0.0, delta3: 1.0, xi: 0.5 },
        };
        let fixed = repair(&inst, &rounded);
        let g = measure_gap(&inst, &fixed.choices, &fixed.cache, 1.0, 1.0);
        assert_eq!(g.delta1, 0.0);
        assert_eq!(g.delta3, 0.0);
        assert_eq!(g.xi, 1.0);
        assert!(fixed.flagged.is_empty());
    }

    #[test]
    fn polish_pulls_in_a_missing_service() {
        // Task 0 is cheapest on the UAV, whose single slot holds service 0
        // that nobody uses.
        let mut p = problem(1);
        p.tasks.truncate(1);
        p.tasks[0].service = 2;
        p.tasks[0].remote_delay_s = vec![0.3, 0.6];
        let inst = build_sp1(p);
        let mut choices = vec![Choice::Remote(1)];
        let mut cache = vec![vec![true, false, false]];
        polish(&inst, &mut choices, &mut cache);
        assert_eq!(choices, vec![Choice::Remote(0)]);
        assert_eq!(cache[0], vec![false, false, true]);
    }

    #[test]
    fn polish_trades_a_cache_slot_between_tasks() {
        // The UAV's only slot serves task 0, but task 1 saves more there.
        let mut p = problem(1);
        p.tasks[0].remote_delay_s = vec![0.3, 0.5];
        let inst = build_sp1(p);
        let mut choices = vec![Choice::Remote(0), Choice::Local];
        let mut cache = vec![vec![true, false, false]];
        polish(&inst, &mut choices, &mut cache);
        assert_eq!(choices, vec![Choice::Remote(1), Choice::Remote(0)]);
        assert_eq!(cache[0], vec![false, true, false]);
    }
}
