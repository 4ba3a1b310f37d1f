//! Projected gradient minimization of the proximal augmented Lagrangian
//! over one variable block.

use crate::error::ModelError;
use crate::sp1::instance::{Row, Sp1Instance};
use crate::sp1::lagrangian::{eq_term, ineq_term, Multipliers, Sp1Params};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub values: Vec<f64>,
    /// Block-local objective at the anchor and at the returned values. Only
    /// terms that depend on the block are included.
    pub start_objective: f64,
    pub objective: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Variable seen from inside a block: one of its own, or a frozen value.
#[derive(Debug, Clone, Copy)]
enum Ref {
    Own(usize),
    Fixed(f64),
}

impl Ref {
    fn get(self, vals: &[f64]) -> f64 {
        match self {
            Ref::Own(k) => vals[k],
            Ref::Fixed(v) => v,
        }
    }
}

/// Row restricted to the block, with everything outside it folded in.
enum LocalRow {
    Linear { terms: Vec<(usize, f64)>, offset: f64 },
    XMinusMax { x: Ref, ys: Vec<Ref> },
}

impl LocalRow {
    fn restrict(row: &Row, local: &dyn Fn(usize) -> Option<usize>, point: &[f64]) -> Self {
        let as_ref = |i: usize| local(i).map_or(Ref::Fixed(point[i]), Ref::Own);
        match row {
            Row::Linear { terms, constant } => {
                let mut own = Vec::new();
                let mut offset = *constant;
                for &(i, c) in terms {
                    match local(i) {
                        Some(k) => own.push((k, c)),
                        None => offset += c * point[i],
                    }
                }
                LocalRow::Linear { terms: own, offset }
            }
            Row::XMinusMax { x, ys } => LocalRow::XMinusMax {
                x: as_ref(*x),
                ys: ys.iter().map(|&i| as_ref(i)).collect(),
            },
        }
    }

    /// Value, with the max taken at entry `pin` of `ys` when given.
    fn value(&self, vals: &[f64], pin: Option<usize>) -> f64 {
        match self {
            LocalRow::Linear { terms, offset } => terms.iter().map(|&(k, c)| c * vals[k]).sum::<f64>() + offset,
            LocalRow::XMinusMax { x, ys } => {
                let top = match pin {
                    Some(j) => ys[j].get(vals),
                    None => ys.iter().map(|r| r.get(vals)).fold(f64::NEG_INFINITY, f64::max),
                };
                x.get(vals) - top
            }
        }
    }

    fn add_gradient(&self, vals: &[f64], pin: Option<usize>, scale: f64, grad: &mut [f64]) {
        match self {
            LocalRow::Linear { terms, .. } => {
                for &(k, c) in terms {
                    grad[k] += scale * c;
                }
            }
            LocalRow::XMinusMax { x, ys } => {
                if let Ref::Own(k) = x {
                    grad[*k] += scale;
                }
                let best = pin.unwrap_or_else(|| {
                    (1..ys.len()).fold(0, |b, j| if ys[j].get(vals) > ys[b].get(vals) { j } else { b })
                });
                if let Ref::Own(k) = ys[best] {
                    grad[k] -= scale;
                }
            }
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            LocalRow::Linear { terms, .. } => terms.iter().map(|(_, c)| c * c).sum(),
            LocalRow::XMinusMax { x, ys } => {
                let own = std::iter::once(x).chain(ys).filter(|r| matches!(r, Ref::Own(_))).count();
                own.min(2) as f64
            }
        }
    }
}

struct BlockFn {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    anchor: Vec<f64>,
    eq: Vec<(LocalRow, f64)>,
    ineq: Vec<(LocalRow, f64)>,
    sigma: f64,
    sigma0: f64,
    /// Inequality row (local index) whose max is replaced by one fixed
    /// entry. That bounds the row from above and is exact where the entry
    /// is the largest.
    pin: Option<(usize, usize)>,
}

impl BlockFn {
    fn new(inst: &Sp1Instance, block: usize, point: &[f64], mult: &Multipliers, params: &Sp1Params) -> Self {
        let b = &inst.blocks[block];
        let local = |i: usize| b.vars.iter().position(|&v| v == i);
        BlockFn {
            cost: b.vars.iter().map(|&i| inst.cost[i]).collect(),
            lower: b.vars.iter().map(|&i| inst.lower[i]).collect(),
            upper: b.vars.iter().map(|&i| inst.upper[i]).collect(),
            anchor: b.vars.iter().map(|&i| point[i]).collect(),
            eq: b
                .eq_rows
                .iter()
                .map(|&r| (LocalRow::restrict(&inst.eq_rows[r], &local, point), mult.mu[r]))
                .collect(),
            ineq: b
                .ineq_rows
                .iter()
                .map(|&r| (LocalRow::restrict(&inst.ineq_rows[r], &local, point), mult.lambda[r]))
                .collect(),
            sigma: params.penalty_sigma,
            sigma0: params.prox_sigma0,
            pin: None,
        }
    }

    fn pin_of(&self, row: usize) -> Option<usize> {
        self.pin.filter(|&(r, _)| r == row).map(|(_, j)| j)
    }

    fn value(&self, vals: &[f64]) -> f64 {
        let mut f = 0.0;
        for k in 0..vals.len() {
            let d = vals[k] - self.anchor[k];
            f += self.cost[k] * vals[k] + 0.5 * self.sigma0 * d * d;
        }
        for (row, mu) in &self.eq {
            f += eq_term(*mu, row.value(vals, None), self.sigma);
        }
        for (r, (row, lambda)) in self.ineq.iter().enumerate() {
            f += ineq_term(*lambda, row.value(vals, self.pin_of(r)), self.sigma);
        }
        f
    }

    fn gradient(&self, vals: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = (0..vals.len())
            .map(|k| self.cost[k] + self.sigma0 * (vals[k] - self.anchor[k]))
            .collect();
        for (row, mu) in &self.eq {
            row.add_gradient(vals, None, mu + self.sigma * row.value(vals, None), &mut g);
        }
        for (r, (row, lambda)) in self.ineq.iter().enumerate() {
            let pin = self.pin_of(r);
            let scale = (lambda + self.sigma * row.value(vals, pin)).max(0.0);
            if scale > 0.0 {
                row.add_gradient(vals, pin, scale, &mut g);
            }
        }
        g
    }

    /// Curvature bound of the smooth part, used for the first step.
    fn lipschitz(&self) -> f64 {
        let rows = self.eq.iter().chain(&self.ineq);
        self.sigma0 + self.sigma * rows.map(|(r, _)| r.norm_sq()).sum::<f64>()
    }

    fn project(&self, vals: &mut [f64]) {
        for k in 0..vals.len() {
            vals[k] = vals[k].clamp(self.lower[k], self.upper[k]);
        }
    }

    /// Projected gradient with Barzilai-Borwein steps and Armijo
    /// backtracking, started from the projected anchor.
    fn minimize(&self, params: &Sp1Params) -> (Vec<f64>, f64, usize, bool) {
        let mut x = self.anchor.clone();
        self.project(&mut x);
        let mut fx = self.value(&x);
        let mut g = self.gradient(&x);
        let mut alpha = 1.0 / self.lipschitz();
        let mut trial = vec![0.0; x.len()];
        let mut steps = 0;
        while steps < params.inner_max_steps {
            let mut pg_sq = 0.0;
            for k in 0..x.len() {
                let p = (x[k] - g[k]).clamp(self.lower[k], self.upper[k]) - x[k];
                pg_sq += p * p;
            }
            if pg_sq.sqrt() <= params.inner_grad_tol {
                return (x, fx, steps, true);
            }
            let mut accepted = false;
            for _ in 0..60 {
                for k in 0..x.len() {
                    trial[k] = x[k] - alpha * g[k];
                }
                self.project(&mut trial);
                let ft = self.value(&trial);
                let decrease: f64 = (0..x.len()).map(|k| g[k] * (trial[k] - x[k])).sum();
                if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                    accepted = true;
                    let g_new = self.gradient(&trial);
                    let (mut ss, mut sy) = (0.0, 0.0);
                    for k in 0..x.len() {
                        let s = trial[k] - x[k];
                        ss += s * s;
                        sy += s * (g_new[k] - g[k]);
                    }
                    x.copy_from_slice(&trial);
                    fx = ft;
                    g = g_new;
                    alpha = if sy > 1e-300 { (ss / sy).clamp(1e-12, 1e12) } else { alpha * 2.0 };
                    break;
                }
                alpha *= 0.5;
            }
            steps += 1;
            if !accepted {
                // No representable descent left: stationary to working precision.
                return (x, fx, steps, true);
            }
        }
        (x, fx, steps, false)
    }
}

/// Minimize the block's proximal augmented Lagrangian, anchored at the
/// block's current values in `point`, over its box.
///
/// A max row whose entries all lie in the block makes the objective
/// non-smooth, and gradient steps stall at its kinks. The objective is the
/// pointwise minimum of the pieces where one entry stands in for the max,
/// so each piece is solved and the best one kept.
pub fn block_minimize(
    inst: &Sp1Instance,
    block: usize,
    point: &[f64],
    mult: &Multipliers,
    params: &Sp1Params,
) -> Result<BlockOutcome, ModelError> {
    let mut f = BlockFn::new(inst, block, point, mult, params);
    let start_objective = f.value(&f.anchor);
    if !start_objective.is_finite() {
        return Err(ModelError::Numerical(format!("block {block} objective is {start_objective}")));
    }
    let max_row = f.ineq.iter().position(|(row, _)| match row {
        LocalRow::XMinusMax { ys, .. } => ys.iter().all(|r| matches!(r, Ref::Own(_))),
        _ => false,
    });
    let pieces: Vec<Option<(usize, usize)>> = match max_row {
        Some(r) => {
            let LocalRow::XMinusMax { ys, .. } = &f.ineq[r].0 else { unreachable!() };
            let open = |j: &usize| match ys[*j] {
                Ref::Own(k) => f.upper[k] > 0.0,
                Ref::Fixed(_) => false,
            };
            let js: Vec<usize> = (0..ys.len()).filter(open).collect();
            if js.is_empty() {
                vec![None]
            } else {
                js.into_iter().map(|j| Some((r, j))).collect()
            }
        }
        None => vec![None],
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut steps = 0;
    let mut converged = true;
    for pin in pieces {
        f.pin = pin;
        let (x, _, n, ok) = f.minimize(params);
        steps += n;
        converged &= ok;
        f.pin = None;
        let fx = f.value(&x);
        if best.as_ref().is_none_or(|(_, b)| fx < *b) {
            best = Some((x, fx));
        }
    }
    let (values, objective) = best.expect("at least one piece");
    if objective > start_objective {
        // Projection of the anchor moved it; fall back to the anchor itself.
        return Ok(BlockOutcome {
            values: f.anchor.clone(),
            start_objective,
            objective: start_objective,
            steps,
            converged,
        });
    }
    Ok(BlockOutcome {
        values,
        start_objective,
        objective,
        steps,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp1::instance::Block;

    /// One free variable, objective `c v + sigma0/2 (v - a)^2`.
    fn scalar_instance(cost: f64) -> Sp1Instance {
        use crate::sp1::instance::Sp1Problem;
        Sp1Instance {
            problem: Sp1Problem {
                tasks: vec![],
                uav_count: 0,
                service_count: 0,
                cache_slots: vec![],
                prev_cache: vec![],
                popularity: vec![],
                allow_local: true,
            },
            n_vars: 1,
            lower: vec![0.0],
            upper: vec![1.0],
            cost: vec![cost],
            cost_constant: 0.0,
            eq_rows: vec![],
            ineq_rows: vec![],
            ineq_family: vec![],
            blocks: vec![Block {
                vars: vec![0],
                eq_rows: vec![],
                ineq_rows: vec![],
            }],
        }
    }

    #[test]
    fn interior_minimizer() {
        let inst = scalar_instance(-0.4);
        let m = Multipliers { mu: vec![], lambda: vec![] };
        let out = block_minimize(&inst, 0, &[0.0], &m, &Sp1Params::default()).unwrap();
        assert!((out.values[0] - 0.4).abs() < 1e-5);
        assert!(out.objective <= out.start_objective);
    }

    #[test]
    fn clamps_to_box() {
        let inst = scalar_instance(0.3);
        let m = Multipliers { mu: vec![], lambda: vec![] };
        let out = block_minimize(&inst, 0, &[0.0], &m, &Sp1Params::default()).unwrap();
        assert_eq!(out.values[0], 0.0);
    }

    #[test]
    fn optimal_anchor_is_a_fixed_point() {
        let inst = scalar_instance(-0.4);
        let m = Multipliers { mu: vec![], lambda: vec![] };
        // With sigma0 = 1 the proximal minimizer from anchor a is a + 0.4;
        // an equality pulls it back so that 0.4 is the fixed point.
        let mut inst = inst;
        inst.eq_rows = vec![Row::Linear { terms: vec![(0, 1.0)], constant: -0.4 }];
        inst.blocks[0].eq_rows = vec![0];
        let m = Multipliers { mu: vec![0.4], ..m };
        let out = block_minimize(&inst, 0, &[0.4], &m, &Sp1Params::default()).unwrap();
        assert!((out.values[0] - 0.4).abs() < 1e-9);
    }
}
