//! UAV positioning by successive convex approximation.
//!
//! Each rate is convex in the squared distance of its link, so its tangent
//! in that variable is a global lower bound. Replacing rates by these bounds
//! gives a convex upper bound on the total delay; the non-convex separation
//! constraint is replaced by its tangent half-space, which is an inner
//! approximation. Minimizing the surrogate and re-anchoring never increases
//! the true delay.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::Point2;
use crate::model::energy::max_affordable_speed;
use crate::model::eval::{evaluate, needs_fill};
use crate::model::radio::snr_at_unit_distance;
use crate::model::types::{Decision, Mode, Scenario};
use crate::report::{SolverReport, SolverStatus, TraceRecord};
use crate::scenario::SlotState;

/// Rate `theta B log2(1 + gamma / (s + h2))` of a link as a function of the
/// squared horizontal distance `s`, with its tangent at `s_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkAnchor {
    pub theta: f64,
    pub band_hz: f64,
    pub gamma: f64,
    pub offset_sq: f64,
    pub s_r: f64,
    pub rate_r: f64,
    pub grad_r: f64,
}

impl LinkAnchor {
    pub fn new(theta: f64, band_hz: f64, gamma: f64, offset_sq: f64, s_r: f64) -> Self {
        let mut a = Self {
            theta,
            band_hz,
            gamma,
            offset_sq,
            s_r,
            rate_r: 0.0,
            grad_r: 0.0,
        };
        a.rate_r = a.rate(s_r);
        a.grad_r = rate_gradient(theta, band_hz, gamma, offset_sq, s_r);
        a
    }

    pub fn rate(&self, s: f64) -> f64 {
        self.theta * self.band_hz * (self.gamma / (s + self.offset_sq)).ln_1p() / std::f64::consts::LN_2
    }
}

/// Derivative of the rate with respect to the squared horizontal distance.
pub fn rate_gradient(theta: f64, band_hz: f64, gamma: f64, offset_sq: f64, s: f64) -> f64 {
    let den = s + offset_sq;
    -theta * band_hz * gamma * std::f64::consts::LOG2_E / (den * (den + gamma))
}

/// Tangent lower bound of the anchored rate at squared distance `s`.
pub fn rate_lower_bound(anchor: &LinkAnchor, s: f64) -> f64 {
    anchor.rate_r + anchor.grad_r * (s - anchor.s_r)
}

/// `2 (a_u - a_v)^T (q_u - q_v) - |a_u - a_v|^2 - d_min^2`; nonnegative
/// implies `|q_u - q_v| >= d_min`.
pub fn linearized_separation(
    q_u: Point2,
    q_v: Point2,
    a_u: Point2,
    a_v: Point2,
    d_min: f64,
) -> Result<f64, ModelError> {
    let a = a_u - a_v;
    if a.norm_sq() == 0.0 {
        return Err(ModelError::InvalidArgument("coincident separation anchors".into()));
    }
    Ok(2.0 * a.dot(q_u - q_v) - a.norm_sq() - d_min * d_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sp3Params {
    pub max_outer: usize,
    pub max_inner: usize,
    pub eps: f64,
}

impl Default for Sp3Params {
    fn default() -> Self {
        Self {
            max_outer: 30,
            max_inner: 300,
            eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Far {
    Uav(usize),
    Fixed(Point2),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Link {
    uav: usize,
    far: Far,
    theta: f64,
    band_hz: f64,
    gamma: f64,
    offset_sq: f64,
}

impl Link {
    fn far_point(&self, q: &[Point2]) -> Point2 {
        match self.far {
            Far::Uav(v) => q[v],
            Far::Fixed(p) => p,
        }
    }

    fn s(&self, q: &[Point2]) -> f64 {
        q[self.uav].dist_sq(self.far_point(q))
    }

    fn anchor(&self, q: &[Point2]) -> LinkAnchor {
        LinkAnchor::new(self.theta, self.band_hz, self.gamma, self.offset_sq, self.s(q))
    }
}

/// Delay structure of one task: `fixed + sum bits / rate(link)`.
#[derive(Debug, Clone, PartialEq)]
struct TaskDelay {
    fixed_s: f64,
    hops: Vec<(usize, f64)>,
    deadline_s: f64,
}

/// Positions-only view of a slot with everything else fixed.
#[derive(Debug, Clone)]
pub struct TrajectoryProblem {
    links: Vec<Link>,
    tasks: Vec<TaskDelay>,
    /// Start-of-slot positions and reachable radius per UAV.
    centers: Vec<Point2>,
    radii: Vec<f64>,
    d_min: f64,
}

/// Separation target with a small margin so projected points stay clear of
/// the boundary after rounding.
fn separation_target(d_min: f64) -> f64 {
    let d = d_min + 1e-6;
    d * d
}

impl TrajectoryProblem {
    pub fn build(scenario: &Scenario, state: &SlotState, decision: &Decision) -> Result<Self, ModelError> {
        let cfg = &scenario.radio;
        let mut links = Vec::new();
        let mut tasks = Vec::new();
        for (k, (task, mode)) in state.tasks.iter().zip(&decision.modes).enumerate() {
            let (Some(task), Some(mode)) = (task, mode) else { continue };
            let h = scenario.home[k];
            if !mode.is_remote() {
                tasks.push(TaskDelay {
                    fixed_s: task.cycles() / scenario.isds[k].cpu_hz,
                    hops: Vec::new(),
                    deadline_s: task.deadline_s,
                });
                continue;
            }
            let mut hops = Vec::new();
            let isd = &scenario.isds[k];
            let uav = &scenario.uavs[h];
            links.push(Link {
                uav: h,
                far: Far::Fixed(isd.position_m),
                theta: decision.bandwidth.access[k],
                band_hz: cfg.bw_access_hz,
                gamma: snr_at_unit_distance(isd.tx_power_w, cfg),
                offset_sq: uav.altitude_m * uav.altitude_m,
            });
            hops.push((links.len() - 1, task.size_bits));
            match mode {
                Mode::PeerUav(v) => {
                    links.push(Link {
                        uav: h,
                        far: Far::Uav(*v),
                        theta: decision.bandwidth.inter_uav[h][*v],
                        band_hz: cfg.bw_inter_uav_hz,
                        gamma: snr_at_unit_distance(uav.tx_power_w, cfg),
                        offset_sq: 0.0,
                    });
                    hops.push((links.len() - 1, task.size_bits));
                }
                Mode::Mbs => {
                    let dh = uav.altitude_m - scenario.mbs.height_m;
                    links.push(Link {
                        uav: h,
                        far: Far::Fixed(scenario.mbs.position_m),
                        theta: decision.bandwidth.backhaul[h],
                        band_hz: cfg.bw_backhaul_hz,
                        gamma: snr_at_unit_distance(uav.tx_power_w, cfg),
                        offset_sq: dh * dh,
                    });
                    hops.push((links.len() - 1, task.size_bits));
                }
                _ => {}
            }
            let mut fixed_s = task.cycles() / decision.cpu_alloc_hz[k];
            if let Some(w) = mode.executing_uav(h) {
                if needs_fill(&state.prev_cache, w, task) {
                    fixed_s += cfg.cache_fill_delay_s();
                }
            }
            tasks.push(TaskDelay {
                fixed_s,
                hops,
                deadline_s: task.deadline_s,
            });
        }

        // Propulsion may use whatever the slot's compute and radio energy
        // leave of each UAV's budget.
        let eval = evaluate(scenario, state, decision)?;
        let tau = scenario.slot_len_s;
        let radii = scenario
            .uavs
            .iter()
            .zip(&eval.uav_energy)
            .map(|(u, e)| {
                let left = u.energy_budget_j - e.compute_j - e.transmit_j;
                // Shave the radius so points on the rim stay inside the budget.
                max_affordable_speed(left, tau, scenario.max_speed_mps, &u.propulsion) * tau * (1.0 - 1e-9)
            })
            .collect();
        Ok(Self {
            links,
            tasks,
            centers: state.uav_positions.clone(),
            radii,
            d_min: scenario.min_separation_m,
        })
    }

    /// True total delay at `q`.
    pub fn objective(&self, q: &[Point2]) -> f64 {
        let rates: Vec<f64> = self.links.iter().map(|l| l.anchor(q).rate_r).collect();
        self.tasks
            .iter()
            .map(|t| t.fixed_s + t.hops.iter().map(|&(l, bits)| bits / rates[l]).sum::<f64>())
            .sum()
    }

    fn anchors(&self, q: &[Point2]) -> Vec<LinkAnchor> {
        self.links.iter().map(|l| l.anchor(q)).collect()
    }

    /// Surrogate task delays; `None` outside the bound's positive region.
    fn surrogate_delays(&self, anchors: &[LinkAnchor], q: &[Point2]) -> Option<Vec<f64>> {
        let mut lb = Vec::with_capacity(self.links.len());
        for (l, a) in self.links.iter().zip(anchors) {
            let r = rate_lower_bound(a, l.s(q));
            if !(r > 0.0) {
                return None;
            }
            lb.push(r);
        }
        Some(
            self.tasks
                .iter()
                .map(|t| t.fixed_s + t.hops.iter().map(|&(l, bits)| bits / lb[l]).sum::<f64>())
                .collect(),
        )
    }

    fn gradient(&self, anchors: &[LinkAnchor], q: &[Point2]) -> Vec<Point2> {
        let mut coef = vec![0.0; self.links.len()];
        for t in &self.tasks {
            for &(l, bits) in &t.hops {
                coef[l] += bits;
            }
        }
        let mut g = vec![Point2::default(); q.len()];
        for (l, (link, a)) in self.links.iter().zip(anchors).enumerate() {
            if coef[l] == 0.0 {
                continue;
            }
            let r = rate_lower_bound(a, link.s(q));
            let ds = (q[link.uav] - link.far_point(q)) * 2.0;
            let scale = -coef[l] / (r * r) * a.grad_r;
            g[link.uav] = g[link.uav] + ds * scale;
            if let Far::Uav(v) = link.far {
                g[v] = g[v] - ds * scale;
            }
        }
        g
    }
}

/// Projection onto the reachable disks intersected with the separation
/// half-spaces linearized at `anchor`, by Dykstra's alternating scheme.
/// `None` when the intersection looks empty.
fn project(prob: &TrajectoryProblem, anchor: &[Point2], y: &[Point2]) -> Option<Vec<Point2>> {
    let n = y.len();
    let target = separation_target(prob.d_min);
    let mut halves = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let a = (anchor[u] - anchor[v]) * 2.0;
            if a.norm_sq() == 0.0 {
                return None;
            }
            halves.push((u, v, a, (anchor[u] - anchor[v]).norm_sq() + target));
        }
    }
    let disks = |x: &mut [Point2]| {
        for u in 0..n {
            x[u] = x[u].clamp_to_disk(prob.centers[u], prob.radii[u]);
        }
    };
    let mut x = y.to_vec();
    let mut inc: Vec<Vec<Point2>> = vec![vec![Point2::default(); n]; halves.len() + 1];
    for _ in 0..2000 {
        let before = x.clone();
        let mut z: Vec<Point2> = (0..n).map(|u| x[u] + inc[0][u]).collect();
        let mut p = z.clone();
        disks(&mut p);
        inc[0] = (0..n).map(|u| z[u] - p[u]).collect();
        x = p;
        for (i, &(u, v, a, b)) in halves.iter().enumerate() {
            z = (0..n).map(|w| x[w] + inc[i + 1][w]).collect();
            let mut p = z.clone();
            let gap = b - a.dot(z[u] - z[v]);
            if gap > 0.0 {
                let step = gap / (2.0 * a.norm_sq());
                p[u] = z[u] + a * step;
                p[v] = z[v] - a * step;
            }
            inc[i + 1] = (0..n).map(|w| z[w] - p[w]).collect();
            x = p;
        }
        let moved: f64 = x.iter().zip(&before).map(|(a, b)| a.dist_sq(*b)).sum();
        if moved < 1e-24 {
            break;
        }
    }
    disks(&mut x);
    let ok = halves.iter().all(|&(u, v, a, b)| a.dot(x[u] - x[v]) >= b - 1e-7);
    ok.then_some(x)
}

/// Whether `q` satisfies the true movement and separation constraints.
fn truly_feasible(prob: &TrajectoryProblem, q: &[Point2]) -> bool {
    let reach = q
        .iter()
        .zip(&prob.centers)
        .zip(&prob.radii)
        .all(|((p, c), r)| p.dist(*c) <= r + 1e-9);
    let d2 = prob.d_min * prob.d_min;
    let sep = (0..q.len()).all(|u| ((u + 1)..q.len()).all(|v| q[u].dist_sq(q[v]) >= d2 - 1e-9));
    reach && sep
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp3Solution {
    pub positions: Vec<Point2>,
    pub objective_s: f64,
    /// Positions after every accepted SCA iteration, starting point first.
    pub iterates: Vec<Vec<Point2>>,
    pub report: SolverReport,
}

/// Minimize the convex surrogate anchored at `anchor_q` from that point.
fn inner_solve(
    prob: &TrajectoryProblem,
    anchor_q: &[Point2],
    params: &Sp3Params,
) -> Option<(Vec<Point2>, f64)> {
    let anchors = prob.anchors(anchor_q);
    // Deadlines already met stay met: the surrogate bounds the true delay.
    let limits: Vec<f64> = prob
        .surrogate_delays(&anchors, anchor_q)?
        .iter()
        .zip(&prob.tasks)
        .map(|(&d, t)| if d <= t.deadline_s { t.deadline_s } else { f64::INFINITY })
        .collect();
    let value = |q: &[Point2]| -> f64 {
        match prob.surrogate_delays(&anchors, q) {
            Some(d) if d.iter().zip(&limits).all(|(x, l)| x <= l) => d.iter().sum(),
            _ => f64::INFINITY,
        }
    };
    let mut q = anchor_q.to_vec();
    let mut fq = value(&q);
    if !fq.is_finite() {
        return None;
    }
    let mut g = prob.gradient(&anchors, &q);
    let g_norm: f64 = g.iter().map(|p| p.norm_sq()).sum::<f64>().sqrt();
    if g_norm == 0.0 {
        return Some((q, fq));
    }
    let mut alpha = 1.0 / g_norm;
    for _ in 0..params.max_inner {
        let mut accepted = false;
        for _ in 0..60 {
            let y: Vec<Point2> = q.iter().zip(&g).map(|(p, d)| *p - *d * alpha).collect();
            let Some(trial) = project(prob, anchor_q, &y) else {
                alpha *= 0.5;
                continue;
            };
            let ft = value(&trial);
            let dec: f64 = trial.iter().zip(&q).zip(&g).map(|((t, p), d)| d.dot(*t - *p)).sum();
            if ft <= fq + 1e-4 * dec {
                let g_new = prob.gradient(&anchors, &trial);
                let (mut ss, mut sy) = (0.0, 0.0);
                for u in 0..q.len() {
                    let s = trial[u] - q[u];
                    ss += s.norm_sq();
                    sy += s.dot(g_new[u] - g[u]);
                }
                let done = ss < 1e-18 || (fq - ft) <= 1e-14 * fq.abs();
                q = trial;
                fq = ft;
                g = g_new;
                alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { alpha * 2.0 };
                accepted = true;
                if done {
                    return Some((q, fq));
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some((q, fq))
}

/// Positions for the slot, starting from `decision.positions`.
pub fn solve_sp3(
    scenario: &Scenario,
    state: &SlotState,
    decision: &Decision,
    params: &Sp3Params,
) -> Result<Sp3Solution, ModelError> {
    let prob = TrajectoryProblem::build(scenario, state, decision)?;
    let held = |status: SolverStatus| -> Sp3Solution {
        let start = if truly_feasible(&prob, &decision.positions) {
            decision.positions.clone()
        } else {
            state.uav_positions.clone()
        };
        let mut report = SolverReport::new(status);
        let g = prob.objective(&start);
        report.trace.push(TraceRecord::objective(0, g));
        Sp3Solution {
            objective_s: g,
            iterates: vec![start.clone()],
            positions: start,
            report,
        }
    };
    if prob.tasks.iter().any(|t| !t.fixed_s.is_finite()) {
        return Ok(held(SolverStatus::Held));
    }

    let mut q = decision.positions.clone();
    if !truly_feasible(&prob, &q) {
        match project(&prob, &q, &q) {
            Some(p) if truly_feasible(&prob, &p) => q = p,
            _ => return Ok(held(SolverStatus::Held)),
        }
    }
    let mut g = prob.objective(&q);
    if !g.is_finite() {
        return Ok(held(SolverStatus::Held));
    }
    let mut report = SolverReport::new(SolverStatus::Stalled);
    report.trace.push(TraceRecord::objective(0, g));
    let mut iterates = vec![q.clone()];
    if prob.links.is_empty() {
        report.status = SolverStatus::Converged;
        return Ok(Sp3Solution {
            positions: q,
            objective_s: g,
            iterates,
            report,
        });
    }
    for r in 1..=params.max_outer {
        let Some((next, _)) = inner_solve(&prob, &q, params) else {
            report.status = if r == 1 { SolverStatus::Held } else { SolverStatus::Converged };
            break;
        };
        let g_next = prob.objective(&next);
        if !(g_next <= g) || !truly_feasible(&prob, &next) {
            report.status = SolverStatus::Converged;
            break;
        }
        let change = g - g_next;
        q = next;
        g = g_next;
        iterates.push(q.clone());
        report.trace.push(TraceRecord::objective(r, g));
        report.iterations = r;
        if change < params.eps {
            report.status = SolverStatus::Converged;
            break;
        }
    }

    // The energy radius was set with the incumbent's radio energy; relays
    // that moved may draw slightly more, so check the real ledger.
    let mut moved = decision.clone();
    moved.positions = q.clone();
    let eval = evaluate(scenario, state, &moved)?;
    let over = eval
        .uav_energy
        .iter()
        .zip(&scenario.uavs)
        .any(|(e, u)| e.total() > u.energy_budget_j);
    if over {
        return Ok(held(SolverStatus::Held));
    }
    Ok(Sp3Solution {
        positions: q,
        objective_s: g,
        iterates,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::types::{Bandwidth, Task};
    use crate::scenario::{generate_scenario, ScenarioSpec};

    fn anchor() -> LinkAnchor {
        // ISD to UAV at 100 m altitude, 0.1 W, 15 MHz.
        LinkAnchor::new(0.7, 15e6, 0.1 * 1e-5 / 1e-12, 1e4, 200.0f64.powi(2))
    }

    #[test]
    fn bound_is_tight_at_anchor_and_below_elsewhere() {
        let a = anchor();
        assert!((rate_lower_bound(&a, a.s_r) - a.rate(a.s_r)).abs() <= 1e-9 * a.rate_r);
        for i in 0..200 {
            let s = (i as f64 * 5.0).powi(2);
            assert!(rate_lower_bound(&a, s) <= a.rate(s) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let a = anchor();
        let h = 1e-3 * a.s_r;
        let fd = (a.rate(a.s_r + h) - a.rate(a.s_r - h)) / (2.0 * h);
        assert!((a.grad_r - fd).abs() <= 1e-6 * fd.abs());
        assert!(a.grad_r < 0.0);
    }

    #[test]
    fn separation_hand_values() {
        let (u, v) = (Point2::new(0.0, 0.0), Point2::new(20.0, 0.0));
        assert_eq!(linearized_separation(u, v, u, v, 10.0).unwrap(), 300.0);
        let (u, v) = (Point2::new(0.0, 0.0), Point2::new(10.0, 0.0));
        assert_eq!(linearized_separation(u, v, u, v, 10.0).unwrap(), 0.0);
        assert!(linearized_separation(u, v, u, u, 10.0).is_err());
    }

    fn one_uav(isd_at: Point2) -> (Scenario, SlotState, Decision) {
        let spec = ScenarioSpec {
            isd_count: 1,
            uav_count: 1,
            ..ScenarioSpec::default()
        };
        let mut sc = generate_scenario(&spec).unwrap();
        sc.isds[0].position_m = isd_at;
        let task = Task {
            size_bits: 2e6,
            service_id: 0,
            density: 100.0,
            deadline_s: 10.0,
        };
        let mut state = SlotState::initial(&sc, vec![Some(task)]);
        state.prev_cache[0][0] = true;
        let mut bw = Bandwidth::zeros(1, 1);
        bw.access[0] = 1.0;
        let dec = Decision {
            modes: vec![Some(Mode::HomeUav)],
            cache: state.prev_cache.clone(),
            bandwidth: bw,
            cpu_alloc_hz: vec![sc.uavs[0].cpu_hz],
            positions: state.uav_positions.clone(),
        };
        (sc, state, dec)
    }

    #[test]
    fn single_uav_flies_over_a_near_isd() {
        let (sc, state, dec) = one_uav(Point2::default());
        let p0 = state.uav_positions[0];
        let (sc, state, dec) = {
            let mut sc = sc;
            sc.isds[0].position_m = p0 + Point2::new(30.0, -20.0);
            (sc, state, dec)
        };
        let params = Sp3Params::default();
        let sol = solve_sp3(&sc, &state, &dec, &params).unwrap();
        let prob = TrajectoryProblem::build(&sc, &state, &dec).unwrap();
        let above = prob.objective(&[sc.isds[0].position_m]);
        // Stops once an iteration gains less than eps.
        assert!(sol.objective_s <= above + params.eps, "{:?}", sol.positions);
        let before = p0.dist(sc.isds[0].position_m);
        assert!(sol.positions[0].dist(sc.isds[0].position_m) < 0.1 * before);
    }

    #[test]
    fn single_uav_matches_disk_grid_search() {
        let (sc, state, dec) = one_uav(Point2::default());
        let p0 = state.uav_positions[0];
        let mut sc = sc;
        sc.isds[0].position_m = p0 + Point2::new(300.0, 120.0);
        let params = Sp3Params { eps: 1e-12, ..Default::default() };
        let sol = solve_sp3(&sc, &state, &dec, &params).unwrap();
        let prob = TrajectoryProblem::build(&sc, &state, &dec).unwrap();
        let r = prob.radii[0];
        assert!(r < sc.step_radius_m(), "energy should bind at full speed");
        let mut best = (f64::INFINITY, p0);
        for i in -100..=100 {
            for j in -100..=100 {
                let q = p0 + Point2::new(i as f64, j as f64) * (r / 100.0);
                if q.dist(p0) <= r {
                    let g = prob.objective(&[q]);
                    if g < best.0 {
                        best = (g, q);
                    }
                }
            }
        }
        assert!(sol.objective_s <= best.0 + 1e-9, "{} vs {} at {:?} / {:?}, {:?}", sol.objective_s, best.0, sol.positions, best.1, sol.report);
        // The optimum sits on the rim, straight toward the ISD.
        let toward = sc.isds[0].position_m - p0;
        let rim = p0 + toward * (r / toward.norm());
        assert!(sol.positions[0].dist(rim) < 1e-3 * r, "{:?} vs {:?}", sol.positions[0], rim);
        assert!(best.1.dist(rim) < 0.05 * r);
        assert!(sol.positions[0].dist(p0) <= r + 1e-6);
    }

    #[test]
    fn no_offloading_holds_still() {
        let (sc, state, mut dec) = one_uav(Point2::default());
        dec.modes = vec![Some(Mode::Local)];
        dec.bandwidth = Bandwidth::zeros(1, 1);
        dec.cpu_alloc_hz = vec![0.0];
        let sol = solve_sp3(&sc, &state, &dec, &Sp3Params::default()).unwrap();
        assert_eq!(sol.positions, state.uav_positions);
    }

    #[test]
    fn crowded_uavs_keep_their_distance() {
        let spec = ScenarioSpec {
            isd_count: 2,
            uav_count: 2,
            ..ScenarioSpec::default()
        };
        let mut sc = generate_scenario(&spec).unwrap();
        let (a, b) = (Point2::new(500.0, 500.0), Point2::new(511.0, 500.0));
        sc.uavs[0].initial_position_m = a;
        sc.uavs[1].initial_position_m = b;
        // Both ISDs sit between the UAVs, pulling them together.
        sc.isds[0].position_m = Point2::new(505.5, 500.0);
        sc.isds[1].position_m = Point2::new(505.5, 500.0);
        sc.home = vec![0, 1];
        let task = Task {
            size_bits: 2e6,
            service_id: 0,
            density: 100.0,
            deadline_s: 10.0,
        };
        let mut state = SlotState::initial(&sc, vec![Some(task), Some(task)]);
        state.uav_positions = vec![a, b];
        state.prev_cache[0][0] = true;
        state.prev_cache[1][0] = true;
        let mut bw = Bandwidth::zeros(2, 2);
        bw.access = vec![1.0, 1.0];
        let dec = Decision {
            modes: vec![Some(Mode::HomeUav), Some(Mode::HomeUav)],
            cache: state.prev_cache.clone(),
            bandwidth: bw,
            cpu_alloc_hz: vec![sc.uavs[0].cpu_hz, sc.uavs[1].cpu_hz],
            positions: state.uav_positions.clone(),
        };
        let sol = solve_sp3(&sc, &state, &dec, &Sp3Params::default()).unwrap();
        let d = sol.positions[0].dist(sol.positions[1]);
        assert!(d >= sc.min_separation_m - 1e-6, "{d}");
        let g = sol.report.objectives();
        assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        assert!(g.last().unwrap() < &g[0]);
    }
}
