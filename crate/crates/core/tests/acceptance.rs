//! Acceptance suite. Runs every criterion in sequence, prints one line per
//! criterion and exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use amo::geometry::Point2;
use amo::harness::{compute_metrics, run_one, run_sweep, write_records, SweepParam, SweepPlan};
use amo::model::energy::{hover_power, propulsion_power};
use amo::model::{audit_constraints, link_rate, slot_energy, ConstraintFamily, Decision, Entity, HopRates, LinkEnds, LinkKind, Scenario};
use amo::orchestrator::{run_horizon, solve_slot, ApproachId, HorizonResult, OrchestratorParams};
use amo::scenario::{draw_tasks, generate_scenario, init_cache_matrix, task_rng, ScenarioSpec, SlotState};
use amo::sp1::{build_sp1, candidates, choices_to_modes, solve_sp1, Choice, Incumbent, Sp1Instance, Sp1Params};
use amo::sp2::{build_layout, sqrt_alloc, AllocGroup};
use amo::sp3::{rate_gradient, rate_lower_bound, LinkAnchor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

const STRUCTURAL: [ConstraintFamily; 3] =
    [ConstraintFamily::CacheImplication, ConstraintFamily::CacheCapacity, ConstraintFamily::ModeUniqueness];

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// A mid-horizon state: random slot index, UAV positions scattered over the
/// area at the minimum separation, random cache contents.
fn random_state(sc: &Scenario, rng: &mut ChaCha8Rng) -> SlotState {
    let slot = rng.gen_range(1..sc.slot_count);
    let mut task_stream = task_rng(sc);
    let mut tasks = draw_tasks(sc, 0, &mut task_stream);
    for n in 1..=slot {
        tasks = draw_tasks(sc, n, &mut task_stream);
    }
    let mut state = SlotState::initial(sc, tasks);
    state.slot = slot;
    let mut positions: Vec<Point2> = Vec::new();
    while positions.len() < sc.uav_count() {
        let p = Point2::new(rng.gen_range(0.0..sc.area_m), rng.gen_range(0.0..sc.area_m));
        if positions.iter().all(|q| q.dist(p) >= sc.min_separation_m) {
            positions.push(p);
        }
    }
    state.uav_positions = positions;
    state.prev_cache = sc
        .uavs
        .iter()
        .map(|u| {
            let mut row = vec![false; sc.service_count()];
            let mut placed = 0;
            while placed < u.cache_slots {
                let s = rng.gen_range(0..sc.service_count());
                if !row[s] {
                    row[s] = true;
                    placed += 1;
                }
            }
            row
        })
        .collect();
    state
}

fn criterion_1() -> Verdict {
    let params = OrchestratorParams::default();
    let mut worst_rise = 0.0f64;
    let mut iters = 0usize;
    for seed in 0..100u64 {
        let sc = generate_scenario(&ScenarioSpec { rng_seed: seed, ..ScenarioSpec::default() }).unwrap();
        let state = random_state(&sc, &mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_slot(&sc, &state, ApproachId::Jc5a, &params).unwrap();
        let trace = sol.reports.outer.objectives();
        iters += trace.len() - 1;
        for w in trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
    }
    verdict(
        worst_rise <= 1e-9,
        format!("100 slots, {iters} outer iterations, largest step-to-step rise {worst_rise:e} s (tol 1e-9)"),
    )
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sc = generate_scenario(&ScenarioSpec::default()).unwrap();
    let cfg = &sc.radio;
    let mut worst_bound = 0.0f64;
    let mut worst_anchor = 0.0f64;
    let mut worst_grad = 0.0f64;
    for _ in 0..10_000 {
        let kind = [LinkKind::IsdToUav, LinkKind::UavToUav, LinkKind::UavToMbs][rng.gen_range(0..3)];
        let (tx_h, rx_h) = match kind {
            LinkKind::IsdToUav => (0.0, sc.uavs[0].altitude_m),
            LinkKind::UavToUav => (sc.uavs[0].altitude_m, sc.uavs[0].altitude_m),
            LinkKind::UavToMbs => (sc.uavs[0].altitude_m, sc.mbs.height_m),
        };
        let power = rng.gen_range(0.05..1.0);
        let theta = rng.gen_range(0.01..=1.0);
        let base = Point2::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
        let dir = rng.gen_range(0.0..std::f64::consts::TAU);
        let unit = Point2::new(dir.cos(), dir.sin());
        // True rate at horizontal distance sqrt(s) from `base`.
        let rate = |s: f64| {
            let ends = LinkEnds::new(base, base + unit * s.sqrt(), tx_h, rx_h);
            link_rate(kind, &ends, theta, cfg, power).unwrap()
        };
        let gamma = power * cfg.beta0 / cfg.noise_w;
        let offset_sq = (tx_h - rx_h) * (tx_h - rx_h);
        let s_r = rng.gen_range(1.0f64..1500.0).powi(2);
        let anchor = LinkAnchor::new(theta, kind.band_hz(cfg), gamma, offset_sq, s_r);

        let r_anchor = rate(s_r);
        worst_anchor = worst_anchor.max((rate_lower_bound(&anchor, s_r) - r_anchor).abs() / r_anchor);
        for _ in 0..4 {
            let s = rng.gen_range(1.0f64..2000.0).powi(2);
            let r = rate(s);
            worst_bound = worst_bound.max((rate_lower_bound(&anchor, s) - r) / r);
        }
        // Five-point stencil in the squared distance.
        let h = 1e-3 * (s_r + offset_sq).min(s_r);
        let fd = (-rate(s_r + 2.0 * h) + 8.0 * rate(s_r + h) - 8.0 * rate(s_r - h) + rate(s_r - 2.0 * h)) / (12.0 * h);
        let g = rate_gradient(theta, kind.band_hz(cfg), gamma, offset_sq, s_r);
        worst_grad = worst_grad.max((g - fd).abs() / fd.abs());
    }
    verdict(
        worst_bound <= 1e-9 && worst_anchor <= 1e-9 && worst_grad <= 1e-6,
        format!(
            "10000 pairs, max (Rhat-R)/R {worst_bound:e}, anchor gap {worst_anchor:e} (tol 1e-9), gradient rel err {worst_grad:e} (tol 1e-6)"
        ),
    )
}

/// Minimize `sum w_i / x_i` over `sum x = c` by a zooming grid over the
/// first n-1 coordinates.
fn grid_minimum(w: &[f64], c: f64) -> f64 {
    let n = w.len();
    let f = |x: &[f64]| -> f64 {
        let last = c - x.iter().sum::<f64>();
        if last <= 0.0 || x.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        x.iter().zip(w).map(|(x, w)| w / x).sum::<f64>() + w[n - 1] / last
    };
    if n == 1 {
        return w[0] / c;
    }
    let m = 7usize;
    let mut center = vec![c / n as f64; n - 1];
    let mut radius = c / 2.0;
    let mut best = f(&center);
    let total = m.pow((n - 1) as u32);
    for _ in 0..60 {
        let mut next = center.clone();
        for idx in 0..total {
            let mut i = idx;
            let x: Vec<f64> = center
                .iter()
                .map(|&c0| {
                    let step = i % m;
                    i /= m;
                    c0 + radius * (2.0 * step as f64 / (m - 1) as f64 - 1.0)
                })
                .collect();
            let v = f(&x);
            if v < best {
                best = v;
                next = x;
            }
        }
        center = next;
        radius *= 0.6;
    }
    best
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_obj = 0.0f64;
    let mut worst_kkt = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let weights: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
        let capacity = rng.gen_range(0.5..10.0);
        let x = sqrt_alloc(&AllocGroup { capacity, weights: weights.clone() });
        let obj: f64 = weights.iter().zip(&x).map(|(w, x)| w / x).sum();
        let grid = grid_minimum(&weights, capacity);
        worst_obj = worst_obj.max((obj - grid).abs() / grid);
        let ratios: Vec<f64> = weights.iter().zip(&x).map(|(w, x)| w / (x * x)).collect();
        let r0 = ratios[0];
        for r in &ratios {
            worst_kkt = worst_kkt.max((r - r0).abs() / r0);
        }
    }
    verdict(
        worst_obj <= 1e-3 && worst_kkt <= 1e-6,
        format!("100 groups, objective rel gap to grid {worst_obj:e} (tol 1e-3), KKT ratio spread {worst_kkt:e} (tol 1e-6)"),
    )
}

/// Exhaustive minimum over binary offloading choices and cache matrices
/// that satisfy every row of the instance.
fn brute_force(inst: &Sp1Instance) -> Option<f64> {
    let p = &inst.problem;
    let t = inst.task_count();
    let options: Vec<Choice> = std::iter::once(Choice::Local)
        .filter(|_| p.allow_local)
        .chain((0..=p.uav_count).map(Choice::Remote))
        .collect();
    let cache_bits = p.uav_count * p.service_count;
    let mut best: Option<f64> = None;
    for mask in 0..(1usize << cache_bits) {
        let cache: Vec<Vec<bool>> = (0..p.uav_count)
            .map(|u| (0..p.service_count).map(|s| mask >> (u * p.service_count + s) & 1 == 1).collect())
            .collect();
        for code in 0..options.len().pow(t as u32) {
            let mut c = code;
            let choices: Vec<Choice> = (0..t)
                .map(|_| {
                    let o = options[c % options.len()];
                    c /= options.len();
                    o
                })
                .collect();
            let v = inst.encode(&choices, &cache);
            let feasible = inst.eq_values(&v).iter().all(|h| h.abs() <= 1e-9)
                && inst.ineq_values(&v).iter().all(|&g| g <= 1e-9);
            if feasible {
                let obj: f64 = choices.iter().zip(&p.tasks).map(|(&c, task)| task.delay(c)).sum();
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
    }
    best
}

fn criterion_4() -> Verdict {
    let mut worst = 0.0f64;
    let mut accepted = 0;
    let mut audit_failures = 0;
    let mut infeasible = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let spec = ScenarioSpec {
            isd_count: rng.gen_range(1..=3),
            uav_count: rng.gen_range(1..=2),
            service_count: rng.gen_range(2..=3),
            uav_cache_slots: [1, 2],
            arrival_prob: 1.0,
            rng_seed: seed,
            ..ScenarioSpec::default()
        };
        let sc = generate_scenario(&spec).unwrap();
        let mut state = SlotState::initial(&sc, draw_tasks(&sc, 0, &mut task_rng(&sc)));
        state.prev_cache = init_cache_matrix(&sc);
        let start = Decision::all_local(&state.tasks, state.prev_cache.clone(), state.uav_positions.clone());
        let inc = Incumbent { decision: &start, allocated: false, equal_split: false };
        let inst = build_sp1(candidates(&sc, &state, inc, true).unwrap());
        let sol = solve_sp1(&inst, &Sp1Params::default(), None, false).unwrap();
        let Some(opt) = brute_force(&inst) else {
            infeasible += 1;
            continue;
        };
        let got = sol.objective(&inst);
        worst = worst.max((got - opt) / opt);

        if sol.gap.xi == 1.0 {
            accepted += 1;
            let modes = choices_to_modes(&sc, &inst.problem, &sol.choices);
            let layout = build_layout(&sc, &state.tasks, &state.prev_cache, &modes, &state.uav_positions).unwrap();
            let (bandwidth, cpu_alloc_hz) = layout.to_allocation(&layout.equal_split(), sc.isd_count(), sc.uav_count());
            let d = Decision { modes, cache: sol.cache.clone(), bandwidth, cpu_alloc_hz, positions: state.uav_positions.clone() };
            let report = audit_constraints(&sc, &state, &d).unwrap();
            let rows_ok = inst.ineq_values(&inst.encode(&sol.choices, &sol.cache)).iter().all(|&g| g <= 1e-9);
            if !rows_ok || STRUCTURAL.iter().any(|&f| report.violation(f) > 0.0) {
                audit_failures += 1;
            }
        }
    }
    verdict(
        worst <= 0.05 && audit_failures == 0 && infeasible == 0,
        format!(
            "50 instances, worst excess over exhaustive optimum {:.3}% (tol 5%), {accepted} with gap 1, {audit_failures} with violations, {infeasible} without a feasible point",
            worst * 100.0
        ),
    )
}

fn horizons(approach: ApproachId, seeds: std::ops::Range<u64>) -> Vec<HorizonResult> {
    use rayon::prelude::*;
    let spec = ScenarioSpec::default();
    let params = OrchestratorParams::default();
    let seeds: Vec<u64> = seeds.collect();
    seeds.par_iter().map(|&s| run_one(&spec, s, approach, &params).unwrap().0).collect()
}

fn criterion_5() -> Verdict {
    let mut slots = 0;
    let mut ok = 0;
    let mut max_iters = 0;
    for h in horizons(ApproachId::Jc5a, 0..5) {
        for s in &h.slots {
            slots += 1;
            let t = &s.outer_trace;
            max_iters = max_iters.max(t.len() - 1);
            if t.len() <= 21 && (t.len() == 1 || t.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-3)) {
                ok += 1;
            }
        }
    }
    let share = ok as f64 / slots as f64;
    verdict(
        share >= 0.95,
        format!("{ok}/{slots} slots converged within 20 iterations ({:.1}%, need 95%), longest run {max_iters}", share * 100.0),
    )
}

fn criterion_6() -> Verdict {
    let seeds = 0..20u64;
    let mut by_approach = Vec::new();
    for a in ApproachId::ALL {
        let runs = horizons(a, seeds.clone());
        let ms: Vec<_> = runs.iter().map(compute_metrics).collect();
        let acd: Vec<f64> = ms.iter().map(|m| m.acd_s.unwrap()).collect();
        let apr: Vec<f64> = ms.iter().map(|m| m.apr_cps.unwrap()).collect();
        // Completed-only delay, shown for comparison with the alternative reading.
        let completed: Vec<f64> = runs
            .iter()
            .map(|h| {
                let d: f64 = h.slots.iter().flat_map(|s| &s.tasks).filter(|t| t.completed).map(|t| t.delay_s).sum();
                d / h.isd_count as f64 / h.slots.len() as f64
            })
            .collect();
        by_approach.push((a, mean_se(&acd), mean_se(&apr), mean_se(&completed).0));
    }
    let (_, j_acd, j_apr, _) = by_approach[0];
    let mut pass = true;
    let mut parts = Vec::new();
    for &(a, acd, apr, done) in &by_approach {
        let acd_slack = (j_acd.1.powi(2) + acd.1.powi(2)).sqrt();
        let apr_slack = (j_apr.1.powi(2) + apr.1.powi(2)).sqrt();
        if a != ApproachId::Jc5a {
            pass &= j_acd.0 <= acd.0 + acd_slack && j_apr.0 >= apr.0 - apr_slack;
        }
        parts.push(format!("{a} acd {:.4}+-{:.4} apr {:.3e}+-{:.1e} (completed-only acd {done:.4})", acd.0, acd.1, apr.0, apr.1));
    }
    verdict(pass, format!("20 seeds; {}", parts.join("; ")))
}

fn criterion_7() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;

    let p = generate_scenario(&ScenarioSpec::default()).unwrap().uavs[0].propulsion;
    let closed = p.theta1_w + p.theta2 * p.theta3.sqrt().sqrt();
    let hover_err = ((propulsion_power(0.0, &p).unwrap() - closed).abs() / closed).max((hover_power(&p) - closed).abs() / closed);
    pass &= hover_err <= 1e-9;
    notes.push(format!("hover rel err {hover_err:e}"));

    let sc = generate_scenario(&ScenarioSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lin_err = 0.0f64;
    for _ in 0..1000 {
        let ends = LinkEnds::new(
            Point2::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)),
            Point2::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)),
            0.0,
            100.0,
        );
        let theta = rng.gen_range(0.0..=1.0);
        let full = link_rate(LinkKind::IsdToUav, &ends, 1.0, &sc.radio, 0.1).unwrap();
        lin_err = lin_err.max((link_rate(LinkKind::IsdToUav, &ends, theta, &sc.radio, 0.1).unwrap() - theta * full).abs() / full);
    }
    pass &= lin_err <= 1e-12;
    notes.push(format!("link_rate linearity err {lin_err:e}"));

    let small = ScenarioSpec { isd_count: 12, slot_count: 8, ..ScenarioSpec::default() };
    let params = OrchestratorParams::default();
    let mut ledger_err = 0.0f64;
    let mut item_err = 0.0f64;
    let mut structural = 0;
    for a in ApproachId::ALL {
        let sc = generate_scenario(&small).unwrap();
        let h = run_horizon(&sc, a, &params).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
        for u in 0..sc.uav_count() {
            let sum: f64 = h.slots.iter().map(|s| s.energy.uav_j[u]).sum();
            ledger_err = ledger_err.max(rel(h.ledgers.uav_j[u], sum));
        }
        for k in 0..sc.isd_count() {
            let sum: f64 = h.slots.iter().map(|s| s.energy.isd_j[k]).sum();
            ledger_err = ledger_err.max(rel(h.ledgers.isd_j[k], sum));
        }
        ledger_err = ledger_err.max(rel(h.ledgers.mbs_j, h.slots.iter().map(|s| s.energy.mbs_j).sum()));
        structural += h.slots.iter().filter(|s| !s.structural_ok).count();

        let state = random_state(&sc, &mut ChaCha8Rng::seed_from_u64(70));
        let sol = solve_slot(&sc, &state, a, &params).unwrap();
        if STRUCTURAL.iter().any(|&f| sol.audit.violation(f) > 0.0) {
            structural += 1;
        }
        let ev = &sol.evaluation;
        let rates: Vec<HopRates> = ev.outcomes.iter().map(|o| o.map(|o| o.rates).unwrap_or_default()).collect();
        let entities = (0..sc.isd_count())
            .map(Entity::Isd)
            .chain((0..sc.uav_count()).map(Entity::Uav))
            .chain([Entity::Mbs]);
        for e in entities {
            let direct = slot_energy(&sc, e, &sol.decision, &state.tasks, &rates, &ev.speeds_mps).unwrap().total();
            let booked = match e {
                Entity::Isd(k) => ev.isd_energy[k].total(),
                Entity::Uav(u) => ev.uav_energy[u].total(),
                Entity::Mbs => ev.mbs_energy.total(),
            };
            item_err = item_err.max(rel(booked, direct));
        }
    }
    pass &= ledger_err <= 1e-9 && item_err <= 1e-9 && structural == 0;
    notes.push(format!("ledger imbalance {ledger_err:e}, itemization err {item_err:e}, structural violations {structural}"));
    verdict(pass, notes.join(", "))
}

fn criterion_8() -> Verdict {
    let plan = SweepPlan {
        base: ScenarioSpec { slot_count: 4, ..ScenarioSpec::default() },
        solver: OrchestratorParams::default(),
        param: SweepParam::IsdCount,
        values: vec![10.0, 20.0],
        approaches: vec![ApproachId::Jc5a, ApproachId::Ebcc],
        seeds: vec![0, 1],
        timing: false,
    };
    let csv = |threads: &str| {
        std::env::set_var("AMO_THREADS", threads);
        let mut buf = Vec::new();
        write_records(&mut buf, &run_sweep(&plan).unwrap()).unwrap();
        buf
    };
    let serial = csv("1");
    let threaded = csv("4");
    let again = csv("4");
    std::env::remove_var("AMO_THREADS");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario": {"isd_count": 10, "slot_count": 4}}"#).unwrap();
    let cli = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_amo"))
            .args(["run", "--seed", "5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        (std::fs::read(out.join("metrics.csv")).unwrap(), std::fs::read(out.join("slots.csv")).unwrap())
    };
    let same_cli = cli("a") == cli("b");
    verdict(
        serial == threaded && threaded == again && same_cli,
        format!(
            "sweep csv 1 thread vs 4 threads identical: {}, repeat identical: {}, CLI run outputs identical: {same_cli}",
            serial == threaded,
            threaded == again
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict, u64); 8] = [
        ("monotone outer descent", criterion_1, 300),
        ("rate bound and gradient", criterion_2, 30),
        ("closed-form allocation", criterion_3, 60),
        ("offloading/caching oracle", criterion_4, 120),
        ("outer convergence at scale", criterion_5, 600),
        ("baseline ordering", criterion_6, 1800),
        ("physics identities", criterion_7, 10),
        ("determinism", criterion_8, 120),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let v = run();
        let took = started.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} {name}: {} | {} | {:.1} s of {budget} s",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
