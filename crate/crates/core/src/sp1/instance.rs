//! Relaxed offloading/caching instance: variable layout, linear objective
//! and constraint rows.

use crate::model::types::Mode;

/// Per-task data the instance is built from. Destinations are indexed
/// `0..U` for UAVs and `U` for the MBS.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCandidates {
    pub isd: usize,
    pub home: usize,
    pub service: usize,
    pub deadline_s: f64,
    pub local_delay_s: f64,
    /// Estimated delay per destination; infinite when unusable.
    pub remote_delay_s: Vec<f64>,
    /// Share of the home access band this task would occupy.
    pub access_footprint: f64,
    /// Share of the relay band (inter-UAV or backhaul) per destination.
    pub relay_footprint: Vec<f64>,
    /// Fraction of the executing server's CPU per destination.
    pub cpu_footprint: Vec<f64>,
}

impl TaskCandidates {
    /// Deadline the instance enforces: the real one, or the best delay
    /// reachable without changing any cache when no such option meets it.
    /// Those options can be taken by all tasks at once, which keeps the
    /// relaxation feasible.
    pub fn deadline_target(&self, problem: &Sp1Problem) -> f64 {
        let u_count = problem.uav_count;
        let local = if problem.allow_local { self.local_delay_s } else { f64::INFINITY };
        let best = self
            .remote_delay_s
            .iter()
            .enumerate()
            .filter(|&(j, _)| j == u_count || problem.prev_cache[j][self.service])
            .map(|(_, &d)| d)
            .fold(local, f64::min);
        if best.is_finite() {
            self.deadline_s.max(best)
        } else {
            self.deadline_s
        }
    }

    pub fn delay(&self, choice: Choice) -> f64 {
        match choice {
            Choice::Local => self.local_delay_s,
            Choice::Remote(j) => self.remote_delay_s[j],
        }
    }
}

/// Inputs to the offloading/caching subproblem with allocations and
/// trajectory held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Problem {
    pub tasks: Vec<TaskCandidates>,
    pub uav_count: usize,
    pub service_count: usize,
    pub cache_slots: Vec<usize>,
    pub prev_cache: Vec<Vec<bool>>,
    pub popularity: Vec<f64>,
    pub allow_local: bool,
}

/// Execution choice of one task: local, or destination index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Local,
    Remote(usize),
}

impl Choice {
    pub fn to_mode(self, home: usize, uav_count: usize) -> Mode {
        match self {
            Choice::Local => Mode::Local,
            Choice::Remote(j) if j == uav_count => Mode::Mbs,
            Choice::Remote(j) if j == home => Mode::HomeUav,
            Choice::Remote(j) => Mode::PeerUav(j),
        }
    }

    pub fn from_mode(mode: Mode, home: usize, uav_count: usize) -> Self {
        match mode {
            Mode::Local => Choice::Local,
            Mode::HomeUav => Choice::Remote(home),
            Mode::PeerUav(v) => Choice::Remote(v),
            Mode::Mbs => Choice::Remote(uav_count),
        }
    }

    /// UAV that must cache the task's service.
    pub fn cache_uav(self, uav_count: usize) -> Option<usize> {
        match self {
            Choice::Remote(j) if j < uav_count => Some(j),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    /// `sum(coef * v[idx]) + constant`.
    Linear { terms: Vec<(usize, f64)>, constant: f64 },
    /// `v[x] - max(v[ys])`.
    XMinusMax { x: usize, ys: Vec<usize> },
}

impl Row {
    pub fn value(&self, v: &[f64]) -> f64 {
        match self {
            Row::Linear { terms, constant } => {
                terms.iter().map(|&(i, c)| c * v[i]).sum::<f64>() + constant
            }
            Row::XMinusMax { x, ys } => {
                v[*x] - ys.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Add `scale * d(row)/dv` into `grad`; the max picks its first argmax.
    pub fn add_gradient(&self, v: &[f64], scale: f64, grad: &mut [f64]) {
        match self {
            Row::Linear { terms, .. } => {
                for &(i, c) in terms {
                    grad[i] += scale * c;
                }
            }
            Row::XMinusMax { x, ys } => {
                grad[*x] += scale;
                let mut best = ys[0];
                for &i in &ys[1..] {
                    if v[i] > v[best] {
                        best = i;
                    }
                }
                grad[best] -= scale;
            }
        }
    }

    pub fn vars(&self) -> Vec<usize> {
        match self {
            Row::Linear { terms, .. } => terms.iter().map(|&(i, _)| i).collect(),
            Row::XMinusMax { x, ys } => std::iter::once(*x).chain(ys.iter().copied()).collect(),
        }
    }
}

/// Constraint families in the order their rows appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFamily {
    OffloadCoversModes,
    OffloadNeedsMode,
    ServeNeedsCache,
    CacheCapacity,
    Deadline,
    AccessCapacity,
    InterUavCapacity,
    BackhaulCapacity,
    UavCpuCapacity,
    MbsCpuCapacity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub vars: Vec<usize>,
    /// Equality and inequality rows that read any variable in the block.
    pub eq_rows: Vec<usize>,
    pub ineq_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Instance {
    pub problem: Sp1Problem,
    pub n_vars: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub cost_constant: f64,
    pub eq_rows: Vec<Row>,
    pub ineq_rows: Vec<Row>,
    pub ineq_family: Vec<RowFamily>,
    pub blocks: Vec<Block>,
}

impl Sp1Instance {
    pub fn task_count(&self) -> usize {
        self.problem.tasks.len()
    }

    pub fn dest_count(&self) -> usize {
        self.problem.uav_count + 1
    }

    pub fn x(&self, t: usize) -> usize {
        t
    }

    pub fn y(&self, t: usize, j: usize) -> usize {
        self.task_count() + t * self.dest_count() + j
    }

    pub fn z(&self, u: usize, s: usize) -> usize {
        self.task_count() * (1 + self.dest_count()) + u * self.problem.service_count + s
    }

    /// Linear objective: estimated total delay of the relaxed point.
    pub fn objective(&self, v: &[f64]) -> f64 {
        self.cost.iter().zip(v).map(|(c, x)| c * x).sum::<f64>() + self.cost_constant
    }

    pub fn eq_values(&self, v: &[f64]) -> Vec<f64> {
        self.eq_rows.iter().map(|r| r.value(v)).collect()
    }

    pub fn ineq_values(&self, v: &[f64]) -> Vec<f64> {
        self.ineq_rows.iter().map(|r| r.value(v)).collect()
    }

    /// Point encoding the given discrete choices and cache.
    pub fn encode(&self, choices: &[Choice], cache: &[Vec<bool>]) -> Vec<f64> {
        let mut v = vec![0.0f64; self.n_vars];
        for (t, c) in choices.iter().enumerate() {
            if let Choice::Remote(j) = c {
                v[self.x(t)] = 1.0;
                v[self.y(t, *j)] = 1.0;
            }
        }
        for (u, row) in cache.iter().enumerate() {
            for (s, &b) in row.iter().enumerate() {
                if b {
                    v[self.z(u, s)] = 1.0;
                }
            }
        }
        for i in 0..self.n_vars {
            v[i] = v[i].clamp(self.lower[i], self.upper[i]);
        }
        v
    }
}

/// Closed-form row count for `t` tasks and `u` UAVs: equalities, inequalities.
pub fn row_tally(t: usize, u: usize) -> (usize, usize) {
    (t, 3 * t + t * u + 3 * u + 3)
}

pub fn build_sp1(problem: Sp1Problem) -> Sp1Instance {
    let t_count = problem.tasks.len();
    let u_count = problem.uav_count;
    let s_count = problem.service_count;
    let dests = u_count + 1;
    let n_vars = t_count * (1 + dests) + u_count * s_count;
    let mut inst = Sp1Instance {
        problem,
        n_vars,
        lower: vec![0.0; n_vars],
        upper: vec![1.0; n_vars],
        cost: vec![0.0; n_vars],
        cost_constant: 0.0,
        eq_rows: Vec::new(),
        ineq_rows: Vec::new(),
        ineq_family: Vec::new(),
        blocks: Vec::new(),
    };
    let p = inst.problem.clone();

    for (t, task) in p.tasks.iter().enumerate() {
        let x = inst.x(t);
        if p.allow_local {
            inst.cost[x] = -task.local_delay_s;
            inst.cost_constant += task.local_delay_s;
        } else {
            inst.lower[x] = 1.0;
        }
        for j in 0..dests {
            let y = inst.y(t, j);
            let d = task.remote_delay_s[j];
            if d.is_finite() {
                inst.cost[y] = d;
            } else {
                inst.upper[y] = 0.0;
            }
        }
    }

    let ineq = |inst: &mut Sp1Instance, fam: RowFamily, row: Row| {
        inst.ineq_rows.push(row);
        inst.ineq_family.push(fam);
    };

    for t in 0..t_count {
        let mut terms = vec![(inst.x(t), 1.0)];
        terms.extend((0..dests).map(|j| (inst.y(t, j), -1.0)));
        inst.eq_rows.push(Row::Linear { terms, constant: 0.0 });
    }
    for t in 0..t_count {
        let mut terms = vec![(inst.x(t), -1.0)];
        terms.extend((0..dests).map(|j| (inst.y(t, j), 1.0)));
        ineq(&mut inst, RowFamily::OffloadCoversModes, Row::Linear { terms, constant: 0.0 });
    }
    for t in 0..t_count {
        let ys = (0..dests).map(|j| inst.y(t, j)).collect();
        let x = inst.x(t);
        ineq(&mut inst, RowFamily::OffloadNeedsMode, Row::XMinusMax { x, ys });
    }
    for (t, task) in p.tasks.iter().enumerate() {
        for w in 0..u_count {
            let terms = vec![(inst.y(t, w), 1.0), (inst.z(w, task.service), -1.0)];
            ineq(&mut inst, RowFamily::ServeNeedsCache, Row::Linear { terms, constant: 0.0 });
        }
    }
    for u in 0..u_count {
        let terms = (0..s_count).map(|s| (inst.z(u, s), 1.0)).collect();
        let constant = -(p.cache_slots[u] as f64);
        ineq(&mut inst, RowFamily::CacheCapacity, Row::Linear { terms, constant });
    }
    for (t, task) in p.tasks.iter().enumerate() {
        let mut terms = Vec::new();
        let mut constant = -task.deadline_target(&p);
        if p.allow_local {
            terms.push((inst.x(t), -task.local_delay_s));
            constant += task.local_delay_s;
        }
        for j in 0..dests {
            let d = task.remote_delay_s[j];
            if d.is_finite() {
                terms.push((inst.y(t, j), d));
            }
        }
        ineq(&mut inst, RowFamily::Deadline, Row::Linear { terms, constant });
    }
    for u in 0..u_count {
        let terms = p
            .tasks
            .iter()
            .enumerate()
            .filter(|(_, task)| task.home == u)
            .map(|(t, task)| (inst.x(t), task.access_footprint))
            .collect();
        ineq(&mut inst, RowFamily::AccessCapacity, Row::Linear { terms, constant: -1.0 });
    }
    let relay_row = |inst: &Sp1Instance, pick: &dyn Fn(usize, usize) -> bool| {
        let mut terms = Vec::new();
        for (t, task) in p.tasks.iter().enumerate() {
            for j in 0..dests {
                if pick(task.home, j) {
                    terms.push((inst.y(t, j), task.relay_footprint[j]));
                }
            }
        }
        Row::Linear { terms, constant: -1.0 }
    };
    let r = relay_row(&inst, &|h, j| j < u_count && j != h);
    ineq(&mut inst, RowFamily::InterUavCapacity, r);
    let r = relay_row(&inst, &|_, j| j == u_count);
    ineq(&mut inst, RowFamily::BackhaulCapacity, r);
    for w in 0..u_count {
        let terms = p
            .tasks
            .iter()
            .enumerate()
            .map(|(t, task)| (inst.y(t, w), task.cpu_footprint[w]))
            .collect();
        ineq(&mut inst, RowFamily::UavCpuCapacity, Row::Linear { terms, constant: -1.0 });
    }
    let terms = p
        .tasks
        .iter()
        .enumerate()
        .map(|(t, task)| (inst.y(t, u_count), task.cpu_footprint[u_count]))
        .collect();
    ineq(&mut inst, RowFamily::MbsCpuCapacity, Row::Linear { terms, constant: -1.0 });

    let mut block_vars: Vec<Vec<usize>> = Vec::new();
    for u in 0..u_count {
        let xs: Vec<usize> = (0..t_count).filter(|&t| p.tasks[t].home == u).map(|t| inst.x(t)).collect();
        if !xs.is_empty() {
            block_vars.push(xs);
        }
    }
    for t in 0..t_count {
        block_vars.push((0..dests).map(|j| inst.y(t, j)).collect());
    }
    for u in 0..u_count {
        block_vars.push((0..s_count).map(|s| inst.z(u, s)).collect());
    }
    let mut owner = vec![usize::MAX; n_vars];
    for (b, vars) in block_vars.iter().enumerate() {
        for &i in vars {
            owner[i] = b;
        }
    }
    let touching = |rows: &[Row]| {
        let mut per_block: Vec<Vec<usize>> = vec![Vec::new(); block_vars.len()];
        for (r, row) in rows.iter().enumerate() {
            let mut seen: Vec<usize> = row.vars().into_iter().map(|i| owner[i]).collect();
            seen.sort_unstable();
            seen.dedup();
            for b in seen {
                per_block[b].push(r);
            }
        }
        per_block
    };
    let eq_touch = touching(&inst.eq_rows);
    let ineq_touch = touching(&inst.ineq_rows);
    inst.blocks = block_vars
        .into_iter()
        .zip(eq_touch.into_iter().zip(ineq_touch))
        .map(|(vars, (eq_rows, ineq_rows))| Block {
            vars,
            eq_rows,
            ineq_rows,
        })
        .collect();
    inst
}
