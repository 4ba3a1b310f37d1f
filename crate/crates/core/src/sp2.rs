//! Bandwidth and CPU allocation with offloading, caching and positions fixed.
//!
//! Every allocation variable sits in exactly one capacity group and one
//! `w / x` objective term, so each group has the closed form
//! `x_i = C sqrt(w_i) / sum_j sqrt(w_j)`. Deadlines couple groups; when the
//! closed form misses one, a penalized projected-gradient solve takes over.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::Point2;
use crate::model::eval::{access_rate, backhaul_rate, inter_uav_rate, needs_fill};
use crate::model::types::{Bandwidth, Mode, Scenario, Task};
use crate::report::{SolverReport, SolverStatus, TraceRecord};

/// Capacity and objective numerators of one resource group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocGroup {
    pub capacity: f64,
    pub weights: Vec<f64>,
}

/// Minimizer of `sum w_i / x_i` subject to `sum x_i <= capacity`.
pub fn sqrt_alloc(group: &AllocGroup) -> Vec<f64> {
    let roots: Vec<f64> = group.weights.iter().map(|w| w.sqrt()).collect();
    let total: f64 = roots.iter().sum();
    if total <= 0.0 {
        let n = group.weights.len() as f64;
        return vec![group.capacity / n; group.weights.len()];
    }
    roots.iter().map(|r| group.capacity * r / total).collect()
}

/// `capacity / n` for each of the `n` members.
pub fn equal_alloc(group: &AllocGroup) -> Vec<f64> {
    let n = group.weights.len() as f64;
    vec![group.capacity / n; group.weights.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Access(usize),
    InterUav,
    Backhaul,
    UavCpu(usize),
    MbsCpu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Member {
    Task(usize),
    Pair(usize, usize),
    Uav(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub kind: GroupKind,
    pub capacity: f64,
    pub members: Vec<Member>,
    pub weights: Vec<f64>,
}

impl Group {
    pub fn alloc_group(&self) -> AllocGroup {
        AllocGroup {
            capacity: self.capacity,
            weights: self.weights.clone(),
        }
    }

    fn position(&self, m: Member) -> Option<usize> {
        self.members.iter().position(|&x| x == m)
    }
}

/// Task `k`'s share of a member's objective term: its delay is
/// `coef / (capacity * fraction)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskTerm {
    pub group: usize,
    pub member: usize,
    pub coef: f64,
}

/// Groups and per-task delay structure of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp2Layout {
    pub groups: Vec<Group>,
    /// Per ISD: delay terms, fixed cache-fill delay, deadline. Empty terms
    /// for ISDs without an offloaded task.
    pub terms: Vec<Vec<TaskTerm>>,
    pub fixed_s: Vec<f64>,
    pub deadline_s: Vec<f64>,
    pub offloaded: Vec<bool>,
    pub uav_count: usize,
}

pub fn build_layout(
    scenario: &Scenario,
    tasks: &[Option<Task>],
    prev_cache: &[Vec<bool>],
    modes: &[Option<Mode>],
    positions: &[Point2],
) -> Result<Sp2Layout, ModelError> {
    let k_count = scenario.isd_count();
    let u_count = scenario.uav_count();
    if tasks.len() != k_count || modes.len() != k_count || positions.len() != u_count {
        return Err(ModelError::DimensionMismatch("SP2 inputs".into()));
    }
    let mut groups: Vec<Group> = Vec::new();
    let index = |groups: &mut Vec<Group>, kind: GroupKind, capacity: f64| -> usize {
        if let Some(i) = groups.iter().position(|g| g.kind == kind) {
            i
        } else {
            groups.push(Group {
                kind,
                capacity,
                members: Vec::new(),
                weights: Vec::new(),
            });
            groups.len() - 1
        }
    };
    let mut terms: Vec<Vec<TaskTerm>> = vec![Vec::new(); k_count];
    let mut fixed_s = vec![0.0; k_count];
    let mut deadline_s = vec![f64::INFINITY; k_count];
    let mut offloaded = vec![false; k_count];

    let add = |groups: &mut Vec<Group>, terms: &mut Vec<TaskTerm>, g: usize, m: Member, coef: f64| {
        let grp = &mut groups[g];
        let i = match grp.position(m) {
            Some(i) => i,
            None => {
                grp.members.push(m);
                grp.weights.push(0.0);
                grp.members.len() - 1
            }
        };
        grp.weights[i] += coef;
        terms.push(TaskTerm { group: g, member: i, coef });
    };

    for k in 0..k_count {
        let (Some(task), Some(mode)) = (tasks[k], modes[k]) else { continue };
        deadline_s[k] = task.deadline_s;
        if !mode.is_remote() {
            continue;
        }
        offloaded[k] = true;
        let h = scenario.home[k];
        let d = task.size_bits;
        let full = access_rate(scenario, k, positions, 1.0)?;
        let g = index(&mut groups, GroupKind::Access(h), 1.0);
        add(&mut groups, &mut terms[k], g, Member::Task(k), d / full);
        match mode {
            Mode::PeerUav(v) => {
                let full = inter_uav_rate(scenario, h, v, positions, 1.0)?;
                let g = index(&mut groups, GroupKind::InterUav, 1.0);
                add(&mut groups, &mut terms[k], g, Member::Pair(h, v), d / full);
            }
            Mode::Mbs => {
                let full = backhaul_rate(scenario, h, positions, 1.0)?;
                let g = index(&mut groups, GroupKind::Backhaul, 1.0);
                add(&mut groups, &mut terms[k], g, Member::Uav(h), d / full);
            }
            _ => {}
        }
        let g = match mode.executing_uav(h) {
            Some(w) => index(&mut groups, GroupKind::UavCpu(w), scenario.uavs[w].cpu_hz),
            None => index(&mut groups, GroupKind::MbsCpu, scenario.mbs.cpu_hz),
        };
        add(&mut groups, &mut terms[k], g, Member::Task(k), task.cycles());
        if let Some(w) = mode.executing_uav(h) {
            if needs_fill(prev_cache, w, &task) {
                fixed_s[k] = scenario.radio.cache_fill_delay_s();
            }
        }
    }
    Ok(Sp2Layout {
        groups,
        terms,
        fixed_s,
        deadline_s,
        offloaded,
        uav_count: u_count,
    })
}

impl Sp2Layout {
    /// Delay of every ISD's offloaded task under group fractions `frac`.
    pub fn task_delays(&self, frac: &[Vec<f64>]) -> Vec<f64> {
        self.terms
            .iter()
            .zip(&self.fixed_s)
            .map(|(ts, &fixed)| {
                ts.iter()
                    .map(|t| t.coef / (self.groups[t.group].capacity * frac[t.group][t.member]))
                    .sum::<f64>()
                    + fixed
            })
            .collect()
    }

    /// Sum of offloaded delays.
    pub fn objective(&self, frac: &[Vec<f64>]) -> f64 {
        self.task_delays(frac)
            .iter()
            .zip(&self.offloaded)
            .filter(|(_, &o)| o)
            .map(|(d, _)| d)
            .sum()
    }

    fn closed_form(&self) -> Vec<Vec<f64>> {
        self.groups
            .iter()
            .map(|g| sqrt_alloc(&g.alloc_group()).iter().map(|x| x / g.capacity).collect())
            .collect()
    }

    pub fn equal_split(&self) -> Vec<Vec<f64>> {
        self.groups
            .iter()
            .map(|g| vec![1.0 / g.members.len() as f64; g.members.len()])
            .collect()
    }

    /// Scatter group fractions into the decision's allocation arrays.
    pub fn to_allocation(&self, frac: &[Vec<f64>], isds: usize, uavs: usize) -> (Bandwidth, Vec<f64>) {
        let mut bw = Bandwidth::zeros(isds, uavs);
        let mut cpu = vec![0.0; isds];
        for (g, grp) in self.groups.iter().enumerate() {
            for (i, &m) in grp.members.iter().enumerate() {
                let x = frac[g][i];
                match (grp.kind, m) {
                    (GroupKind::Access(_), Member::Task(k)) => bw.access[k] = x,
                    (GroupKind::InterUav, Member::Pair(u, v)) => bw.inter_uav[u][v] = x,
                    (GroupKind::Backhaul, Member::Uav(u)) => bw.backhaul[u] = x,
                    (GroupKind::UavCpu(_) | GroupKind::MbsCpu, Member::Task(k)) => {
                        cpu[k] = x * grp.capacity
                    }
                    _ => unreachable!("member kind matches group kind"),
                }
            }
        }
        (bw, cpu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sp2Params {
    pub penalty_start: f64,
    pub penalty_escalations: usize,
    /// Stopping threshold on the change of the outer objective.
    pub eps: f64,
    pub max_steps: usize,
    /// Skip the closed form and always run the iterative path.
    pub force_fallback: bool,
}

impl Default for Sp2Params {
    fn default() -> Self {
        Self {
            penalty_start: 10.0,
            penalty_escalations: 5,
            eps: 1e-3,
            max_steps: 20_000,
            force_fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp2Solution {
    pub bandwidth: Bandwidth,
    pub cpu_alloc_hz: Vec<f64>,
    /// Group fractions aligned with `layout.groups`.
    pub fractions: Vec<Vec<f64>>,
    pub objective_s: f64,
    /// ISDs whose offloaded task misses its deadline at the returned point.
    pub flagged: Vec<usize>,
    pub used_fallback: bool,
    pub report: SolverReport,
}

const MIN_FRACTION: f64 = 1e-9;

/// Euclidean projection onto `{x >= lo, sum x <= 1}`.
fn project_capped(x: &mut [f64], lo: f64) {
    for v in x.iter_mut() {
        *v = v.max(lo);
    }
    if x.iter().sum::<f64>() <= 1.0 {
        return;
    }
    // Project onto the face sum x = 1 with x >= lo by the sort-based rule.
    let mut u: Vec<f64> = x.iter().map(|v| v - lo).collect();
    let budget = 1.0 - lo * x.len() as f64;
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - budget) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    for v in x.iter_mut() {
        *v = lo + (*v - lo - tau).max(0.0);
    }
}

struct Penalized<'a> {
    layout: &'a Sp2Layout,
    /// Tasks whose deadline enters the penalty.
    guarded: &'a [bool],
    rho: f64,
}

impl Penalized<'_> {
    fn value(&self, f: &[Vec<f64>]) -> f64 {
        let delays = self.layout.task_delays(f);
        let mut v = 0.0;
        for (k, &d) in delays.iter().enumerate() {
            if self.layout.offloaded[k] {
                let over = if self.guarded[k] { (d - self.layout.deadline_s[k]).max(0.0) } else { 0.0 };
                v += d + self.rho * over * over;
            }
        }
        v
    }

    fn gradient(&self, f: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let delays = self.layout.task_delays(f);
        let mut g: Vec<Vec<f64>> = f.iter().map(|r| vec![0.0; r.len()]).collect();
        for (k, ts) in self.layout.terms.iter().enumerate() {
            if !self.layout.offloaded[k] {
                continue;
            }
            let over = if self.guarded[k] { (delays[k] - self.layout.deadline_s[k]).max(0.0) } else { 0.0 };
            let scale = 1.0 + 2.0 * self.rho * over;
            for t in ts {
                let c = self.layout.groups[t.group].capacity;
                let x = f[t.group][t.member];
                g[t.group][t.member] -= scale * t.coef / (c * x * x);
            }
        }
        g
    }
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}

/// Projected gradient with Barzilai-Borwein steps and Armijo backtracking.
/// Returns the final point and the merit value after each accepted step.
fn pgd(
    layout: &Sp2Layout,
    guarded: &[bool],
    rho: f64,
    start: Vec<Vec<f64>>,
    max_steps: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let p = Penalized { layout, guarded, rho };
    let mut x = start;
    for row in x.iter_mut() {
        project_capped(row, MIN_FRACTION);
    }
    let mut fx = p.value(&x);
    let mut trace = vec![fx];
    let mut g = p.gradient(&x);
    let mut alpha = 1e-6;
    for _ in 0..max_steps {
        let mut accepted = false;
        let mut trial = x.clone();
        for _ in 0..80 {
            for (r, row) in trial.iter_mut().enumerate() {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = x[r][i] - alpha * g[r][i];
                }
                project_capped(row, MIN_FRACTION);
            }
            let ft = p.value(&trial);
            let step: Vec<Vec<f64>> = trial
                .iter()
                .zip(&x)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect())
                .collect();
            if ft <= fx + 1e-4 * dot(&g, &step) {
                let g_new = p.gradient(&trial);
                let dg: Vec<Vec<f64>> = g_new
                    .iter()
                    .zip(&g)
                    .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect())
                    .collect();
                let ss = dot(&step, &step);
                let sy = dot(&step, &dg);
                alpha = if sy > 0.0 { (ss / sy).clamp(1e-16, 1e6) } else { alpha * 2.0 };
                let rel = (fx - ft).abs() / fx.abs().max(1e-12);
                x = trial;
                fx = ft;
                g = g_new;
                trace.push(fx);
                accepted = true;
                if rel < 1e-13 || ss.sqrt() < 1e-15 {
                    return (x, trace);
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, trace)
}

pub fn solve_sp2_layout(layout: &Sp2Layout, params: &Sp2Params) -> Sp2Solution {
    let closed = layout.closed_form();
    let misses = |f: &[Vec<f64>]| -> Vec<usize> {
        layout
            .task_delays(f)
            .iter()
            .enumerate()
            .filter(|&(k, &d)| layout.offloaded[k] && d > layout.deadline_s[k])
            .map(|(k, _)| k)
            .collect()
    };
    // A task that misses even with every group to itself cannot be helped;
    // it is flagged and kept out of the penalty.
    let whole: Vec<Vec<f64>> = layout.groups.iter().map(|g| vec![1.0; g.members.len()]).collect();
    let guarded: Vec<bool> = layout
        .task_delays(&whole)
        .iter()
        .enumerate()
        .map(|(k, &d)| layout.offloaded[k] && d <= layout.deadline_s[k])
        .collect();
    let fixable = |f: &[Vec<f64>]| misses(f).into_iter().any(|k| guarded[k]);
    let k_count = layout.offloaded.len();
    let u_count = layout.uav_count;
    let finish = |frac: Vec<Vec<f64>>, fallback: bool, report: SolverReport| {
        let flagged = misses(&frac);
        let (bandwidth, cpu_alloc_hz) = layout.to_allocation(&frac, k_count, u_count);
        let mut report = report;
        if !flagged.is_empty() {
            report.status = SolverStatus::InfeasibleDeadline;
        }
        Sp2Solution {
            bandwidth,
            cpu_alloc_hz,
            objective_s: layout.objective(&frac),
            fractions: frac,
            flagged,
            used_fallback: fallback,
            report,
        }
    };

    let mut report = SolverReport::new(SolverStatus::Converged);
    if !params.force_fallback && !fixable(&closed) {
        report.iterations = 1;
        report.trace.push(TraceRecord::objective(1, layout.objective(&closed)));
        return finish(closed, false, report);
    }
    let mut rho = params.penalty_start;
    let mut x = closed;
    let mut trace = Vec::new();
    for level in 0..=params.penalty_escalations {
        let (nx, t) = pgd(layout, &guarded, rho, x, params.max_steps);
        x = nx;
        trace = t;
        if !fixable(&x) || level == params.penalty_escalations {
            break;
        }
        rho *= 2.0;
    }
    report.iterations = trace.len();
    report.trace = trace
        .into_iter()
        .enumerate()
        .map(|(i, g)| TraceRecord::objective(i + 1, g))
        .collect();
    finish(x, true, report)
}

pub fn solve_sp2(
    scenario: &Scenario,
    tasks: &[Option<Task>],
    prev_cache: &[Vec<bool>],
    modes: &[Option<Mode>],
    positions: &[Point2],
    params: &Sp2Params,
) -> Result<(Sp2Layout, Sp2Solution), ModelError> {
    let layout = build_layout(scenario, tasks, prev_cache, modes, positions)?;
    let sol = solve_sp2_layout(&layout, params);
    Ok((layout, sol))
}
