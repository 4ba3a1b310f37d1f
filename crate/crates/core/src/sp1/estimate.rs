//! Per-candidate delay estimates feeding the offloading/caching instance.
//!
//! A candidate mode's delay depends on the bandwidth and CPU shares it
//! would receive, which SP2 only fixes afterwards. Incumbent modes keep
//! their current shares; other modes are priced at the share they would get
//! by joining the incumbent groups.

use crate::error::ModelError;
use crate::model::eval::{access_rate, backhaul_rate, inter_uav_rate, needs_fill};
use crate::model::types::{Decision, Mode, Scenario};
use crate::scenario::SlotState;
use crate::sp1::instance::{Choice, Sp1Problem, TaskCandidates};
use crate::sp2::{build_layout, GroupKind, Member, Sp2Layout};

/// Current iterate the estimates are taken around.
#[derive(Debug, Clone, Copy)]
pub struct Incumbent<'a> {
    pub decision: &'a Decision,
    /// The decision's allocations come from an allocation pass. When false,
    /// shares are split evenly among potential claimants.
    pub allocated: bool,
    /// Price joins at `1/(n+1)` instead of the square-root share.
    pub equal_split: bool,
}

struct Shares<'a> {
    layout: Sp2Layout,
    inc: Incumbent<'a>,
}

impl Shares<'_> {
    fn group(&self, kind: GroupKind) -> Option<(usize, &crate::sp2::Group)> {
        self.layout.groups.iter().enumerate().find(|(_, g)| g.kind == kind)
    }

    /// Fraction of group `kind` a new member with weight `w` would receive.
    fn join(&self, kind: GroupKind, w: f64) -> f64 {
        let Some((_, g)) = self.group(kind) else { return 1.0 };
        if self.inc.equal_split {
            return 1.0 / (g.members.len() + 1) as f64;
        }
        let others: f64 = g.weights.iter().map(|x| x.sqrt()).sum();
        let own = w.sqrt();
        if own + others <= 0.0 {
            return 1.0 / (g.members.len() + 1) as f64;
        }
        own / (own + others)
    }

    fn has(&self, kind: GroupKind, m: Member) -> bool {
        self.group(kind).is_some_and(|(_, g)| g.members.contains(&m))
    }
}

/// Build the offloading/caching instance for the tasks of `state`, priced
/// at the incumbent's positions.
pub fn candidates(
    scenario: &Scenario,
    state: &SlotState,
    incumbent: Incumbent<'_>,
    allow_local: bool,
) -> Result<Sp1Problem, ModelError> {
    let u_count = scenario.uav_count();
    let dec = incumbent.decision;
    let q = &dec.positions;
    let present: Vec<usize> = (0..scenario.isd_count()).filter(|&k| state.tasks[k].is_some()).collect();
    let t_count = present.len();
    let mut n_home = vec![0usize; u_count];
    for &k in &present {
        n_home[scenario.home[k]] += 1;
    }
    let shares = Shares {
        layout: build_layout(scenario, &state.tasks, &state.prev_cache, &dec.modes, q)?,
        inc: incumbent,
    };
    let fill_s = scenario.radio.cache_fill_delay_s();

    let mut tasks = Vec::with_capacity(t_count);
    for &k in &present {
        let task = state.tasks[k].expect("present");
        let h = scenario.home[k];
        let d = task.size_bits;
        let cycles = task.cycles();
        let inc_mode = dec.modes[k].filter(|m| m.is_remote());
        let local_delay_s = cycles / scenario.isds[k].cpu_hz;

        let access_full = access_rate(scenario, k, q, 1.0)?;
        let access_share = if !incumbent.allocated {
            1.0 / n_home[h] as f64
        } else if inc_mode.is_some() {
            dec.bandwidth.access[k]
        } else {
            shares.join(GroupKind::Access(h), d / access_full)
        };
        let up_s = d / (access_share * access_full);

        let mut remote = vec![f64::INFINITY; u_count + 1];
        let mut relay_fp = vec![0.0; u_count + 1];
        let cpu_fp = vec![1.0 / t_count as f64; u_count + 1];
        for (j, slot) in remote.iter_mut().enumerate() {
            let mode = Choice::Remote(j).to_mode(h, u_count);
            let incumbent_here = inc_mode == Some(mode);

            let relay_s = match mode {
                Mode::PeerUav(v) => {
                    relay_fp[j] = 1.0 / t_count as f64;
                    let full = inter_uav_rate(scenario, h, v, q, 1.0)?;
                    let share = if !incumbent.allocated {
                        1.0 / (u_count * (u_count - 1)) as f64
                    } else if shares.has(GroupKind::InterUav, Member::Pair(h, v)) {
                        dec.bandwidth.inter_uav[h][v]
                    } else {
                        shares.join(GroupKind::InterUav, d / full)
                    };
                    d / (share * full)
                }
                Mode::Mbs => {
                    relay_fp[j] = 1.0 / t_count as f64;
                    let full = backhaul_rate(scenario, h, q, 1.0)?;
                    let share = if !incumbent.allocated {
                        1.0 / u_count as f64
                    } else if shares.has(GroupKind::Backhaul, Member::Uav(h)) {
                        dec.bandwidth.backhaul[h]
                    } else {
                        shares.join(GroupKind::Backhaul, d / full)
                    };
                    d / (share * full)
                }
                _ => 0.0,
            };

            let (kind, capacity) = match mode.executing_uav(h) {
                Some(w) => (GroupKind::UavCpu(w), scenario.uavs[w].cpu_hz),
                None => (GroupKind::MbsCpu, scenario.mbs.cpu_hz),
            };
            let cpu_hz = if !incumbent.allocated {
                match mode {
                    Mode::HomeUav => capacity / n_home[h] as f64,
                    Mode::PeerUav(v) => capacity / (n_home[v] + 1) as f64,
                    _ => capacity / t_count as f64,
                }
            } else if incumbent_here {
                dec.cpu_alloc_hz[k]
            } else {
                capacity * shares.join(kind, cycles)
            };
            let exec_s = cycles / cpu_hz;
            let fill = match mode.executing_uav(h) {
                Some(w) if needs_fill(&state.prev_cache, w, &task) => fill_s,
                _ => 0.0,
            };
            let total = up_s + relay_s + exec_s + fill;
            *slot = if total.is_finite() && total > 0.0 { total } else { f64::INFINITY };
        }
        tasks.push(TaskCandidates {
            isd: k,
            home: h,
            service: task.service_id,
            deadline_s: task.deadline_s,
            local_delay_s,
            remote_delay_s: remote,
            access_footprint: 1.0 / n_home[h] as f64,
            relay_footprint: relay_fp,
            cpu_footprint: cpu_fp,
        });
    }
    Ok(Sp1Problem {
        tasks,
        uav_count: u_count,
        service_count: scenario.service_count(),
        cache_slots: scenario.uavs.iter().map(|u| u.cache_slots).collect(),
        prev_cache: state.prev_cache.clone(),
        popularity: scenario.services.popularity.clone(),
        allow_local,
    })
}

/// Decision modes for the given per-task choices.
pub fn choices_to_modes(scenario: &Scenario, problem: &Sp1Problem, choices: &[Choice]) -> Vec<Option<Mode>> {
    let mut modes = vec![None; scenario.isd_count()];
    for (t, c) in problem.tasks.iter().zip(choices) {
        modes[t.isd] = Some(c.to_mode(t.home, problem.uav_count));
    }
    modes
}
