use crate::error::ModelError;
use crate::report::{SolverReport, SolverStatus, TraceRecord};
use crate::sp1::block::block_minimize;
use crate::sp1::instance::{Choice, Sp1Instance};
use crate::sp1::lagrangian::{lagrangian_value, primal_residual, update_multipliers, Multipliers, Sp1Params};
use crate::sp1::rounding::{measure_gap, polish, repair, round_and_gap, GapReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Solution {
    pub choices: Vec<Choice>,
    pub cache: Vec<Vec<bool>>,
    pub relaxed: Vec<f64>,
    pub gap: GapReport,
    /// Tasks left past their deadline after repair.
    pub flagged: Vec<usize>,
    /// Augmented Lagrangian after every block update, when requested.
    pub inner_values: Vec<Vec<f64>>,
    pub report: SolverReport,
}

impl Sp1Solution {
    /// Estimated total delay of the rounded choices.
    pub fn objective(&self, inst: &Sp1Instance) -> f64 {
        self.choices
            .iter()
            .zip(&inst.problem.tasks)
            .map(|(&c, t)| t.delay(c))
            .sum()
    }
}

/// Run the block method of multipliers from `start` (or the all-local point
/// with the carried-over cache), then round, repair and polish.
pub fn solve_sp1(
    inst: &Sp1Instance,
    params: &Sp1Params,
    start: Option<&[f64]>,
    record_inner: bool,
) -> Result<Sp1Solution, ModelError> {
    let p = &inst.problem;
    let sigma = params.penalty_sigma;
    let mut v: Vec<f64> = match start {
        Some(s) if s.len() == inst.n_vars => s.to_vec(),
        Some(_) => return Err(ModelError::DimensionMismatch("SP1 start point".into())),
        None => {
            let local = if p.allow_local { Choice::Local } else { Choice::Remote(p.uav_count) };
            inst.encode(&vec![local; inst.task_count()], &p.prev_cache)
        }
    };
    for i in 0..inst.n_vars {
        v[i] = v[i].clamp(inst.lower[i], inst.upper[i]);
    }

    let mut report = SolverReport::new(SolverStatus::Stalled);
    let mut inner_values = Vec::new();
    if inst.task_count() == 0 {
        report.status = SolverStatus::Converged;
        report.gap = Some(1.0);
        let cache = p.prev_cache.clone();
        return Ok(Sp1Solution {
            choices: Vec::new(),
            gap: measure_gap(inst, &[], &cache, 0.0, params.gap_weight),
            cache,
            relaxed: v,
            flagged: Vec::new(),
            inner_values,
            report,
        });
    }

    let mut mult = Multipliers::zeros(inst);
    let mut l_prev = lagrangian_value(inst, &v, &mult, sigma);
    let mut l_last = l_prev;
    for r in 1..=params.max_iters {
        let mut sweep = Vec::new();
        if record_inner {
            sweep.push(lagrangian_value(inst, &v, &mult, sigma));
        }
        let before = v.clone();
        for b in 0..inst.blocks.len() {
            let out = block_minimize(inst, b, &v, &mult, params)?;
            for (k, &i) in inst.blocks[b].vars.iter().enumerate() {
                v[i] = out.values[k];
            }
            if record_inner {
                sweep.push(lagrangian_value(inst, &v, &mult, sigma));
            }
        }
        if record_inner {
            inner_values.push(sweep);
        }
        let l = lagrangian_value(inst, &v, &mult, sigma);
        if !l.is_finite() {
            return Err(ModelError::Numerical("augmented Lagrangian diverged".into()));
        }
        mult = update_multipliers(&mult, &v, inst, sigma);
        let omega2 = primal_residual(&inst.eq_values(&v), &inst.ineq_values(&v), &mult.lambda, sigma);
        let omega1 = (l - l_prev).abs();
        report.trace.push(TraceRecord {
            iteration: r,
            objective: l,
            omega1: Some(omega1),
            omega2: Some(omega2),
        });
        report.iterations = r;
        l_prev = l;
        l_last = l;
        // A flat Lagrangian over one sweep can coincide with a point that is
        // still moving, so the iterate itself must have settled too.
        let moved = v.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if omega1 <= params.eps1 && omega2 <= params.eps2 && moved <= params.eps1 {
            report.status = SolverStatus::Converged;
            break;
        }
    }

    let rounded = round_and_gap(inst, &v, l_last, params);
    let (mut choices, mut cache, flagged) = if rounded.gap.xi < 1.0 {
        let fixed = repair(inst, &rounded);
        (fixed.choices, fixed.cache, fixed.flagged)
    } else {
        (rounded.choices, rounded.cache, Vec::new())
    };
    polish(inst, &mut choices, &mut cache);
    let gap = measure_gap(inst, &choices, &cache, l_last, params.gap_weight);
    report.gap = Some(gap.xi);
    Ok(Sp1Solution {
        choices,
        cache,
        relaxed: v,
        gap,
        flagged,
        inner_values,
        report,
    })
}
