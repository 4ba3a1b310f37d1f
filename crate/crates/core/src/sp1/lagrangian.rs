use serde::{Deserialize, Serialize};

use crate::sp1::instance::Sp1Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sp1Params {
    pub prox_sigma0: f64,
    pub penalty_sigma: f64,
    pub round_delta: f64,
    pub gap_weight: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub max_iters: usize,
    pub inner_max_steps: usize,
    pub inner_grad_tol: f64,
}

impl Default for Sp1Params {
    fn default() -> Self {
        Self {
            prox_sigma0: 1.0,
            penalty_sigma: 10.0,
            round_delta: 0.5,
            gap_weight: 1.0,
            eps1: 1e-3,
            eps2: 1e-3,
            max_iters: 200,
            inner_max_steps: 500,
            inner_grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(inst: &Sp1Instance) -> Self {
        Self {
            mu: vec![0.0; inst.eq_rows.len()],
            lambda: vec![0.0; inst.ineq_rows.len()],
        }
    }
}

pub(crate) fn eq_term(mu: f64, h: f64, sigma: f64) -> f64 {
    mu * h + 0.5 * sigma * h * h
}

pub(crate) fn ineq_term(lambda: f64, g: f64, sigma: f64) -> f64 {
    let a = (lambda + sigma * g).max(0.0);
    (a * a - lambda * lambda) / (2.0 * sigma)
}

/// Augmented Lagrangian without the proximal term.
pub fn lagrangian_value(inst: &Sp1Instance, point: &[f64], mult: &Multipliers, sigma: f64) -> f64 {
    let eq: f64 = inst
        .eq_rows
        .iter()
        .zip(&mult.mu)
        .map(|(r, &mu)| eq_term(mu, r.value(point), sigma))
        .sum();
    let ineq: f64 = inst
        .ineq_rows
        .iter()
        .zip(&mult.lambda)
        .map(|(r, &l)| ineq_term(l, r.value(point), sigma))
        .sum();
    inst.objective(point) + eq + ineq
}

/// Proximal upper bound plus multiplier terms at `point`, expanded around `anchor`.
pub fn augmented_lagrangian(
    inst: &Sp1Instance,
    point: &[f64],
    anchor: &[f64],
    mult: &Multipliers,
    params: &Sp1Params,
) -> f64 {
    let prox: f64 = point.iter().zip(anchor).map(|(p, a)| (p - a) * (p - a)).sum();
    lagrangian_value(inst, point, mult, params.penalty_sigma) + 0.5 * params.prox_sigma0 * prox
}

/// Dual ascent step; inequality multipliers are clamped at zero.
pub fn update_multipliers(mult: &Multipliers, point: &[f64], inst: &Sp1Instance, sigma: f64) -> Multipliers {
    Multipliers {
        mu: inst
            .eq_rows
            .iter()
            .zip(&mult.mu)
            .map(|(r, &mu)| mu + sigma * r.value(point))
            .collect(),
        lambda: inst
            .ineq_rows
            .iter()
            .zip(&mult.lambda)
            .map(|(r, &l)| (l + sigma * r.value(point)).max(0.0))
            .collect(),
    }
}

/// Primal residual from equality values `h`, inequality values `g` and the
/// current inequality multipliers.
pub fn primal_residual(h: &[f64], g: &[f64], lambda: &[f64], sigma: f64) -> f64 {
    let eq: f64 = h.iter().map(|x| x * x).sum();
    let ineq: f64 = g
        .iter()
        .zip(lambda)
        .map(|(&g, &l)| {
            let m = g.max(-l / sigma);
            m * m
        })
        .sum();
    (eq + ineq).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sp1::instance::{build_sp1, Choice, Row};

    fn inst() -> Sp1Instance {
        use crate::sp1::instance::{Sp1Problem, TaskCandidates};
        build_sp1(Sp1Problem {
            tasks: vec![TaskCandidates {
                isd: 0,
                home: 0,
                service: 0,
                deadline_s: 1.0,
                local_delay_s: 0.8,
                remote_delay_s: vec![0.2, 0.5],
                access_footprint: 1.0,
                relay_footprint: vec![0.0, 1.0],
                cpu_footprint: vec![1.0, 1.0],
            }],
            uav_count: 1,
            service_count: 2,
            cache_slots: vec![2],
            prev_cache: vec![vec![true, false]],
            popularity: vec![0.6, 0.4],
            allow_local: true,
        })
    }

    #[test]
    fn value_at_anchor_with_zero_multipliers_is_objective() {
        let inst = inst();
        let mut v = inst.encode(&[Choice::Local], &[vec![false, false]]);
        v[inst.x(0)] = 0.2;
        v[inst.y(0, 0)] = 0.2;
        v[inst.z(0, 0)] = 0.5;
        assert!(inst.eq_values(&v).iter().all(|&h| h == 0.0));
        assert!(inst.ineq_values(&v).iter().all(|&g| g <= 0.0));
        let m = Multipliers::zeros(&inst);
        let l = augmented_lagrangian(&inst, &v, &v, &m, &Sp1Params::default());
        assert_eq!(l, inst.objective(&v));
    }

    #[test]
    fn single_equality_penalty_adds_one() {
        let mut inst = inst();
        inst.eq_rows = vec![Row::Linear { terms: vec![], constant: 1.0 }];
        inst.ineq_rows.clear();
        let m = Multipliers { mu: vec![0.0], lambda: vec![] };
        let v = vec![0.0; inst.n_vars];
        let with = lagrangian_value(&inst, &v, &m, 2.0);
        assert!((with - inst.objective(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn multiplier_updates() {
        let mut inst = inst();
        inst.eq_rows = vec![Row::Linear { terms: vec![], constant: 0.2 }];
        inst.ineq_rows = vec![Row::Linear { terms: vec![], constant: -5.0 }];
        let v = vec![0.0; inst.n_vars];
        let m = update_multipliers(&Multipliers { mu: vec![0.0], lambda: vec![1.0] }, &v, &inst, 10.0);
        assert!((m.mu[0] - 2.0).abs() < 1e-15);
        assert_eq!(m.lambda[0], 0.0);
        let m = update_multipliers(&Multipliers { mu: vec![0.0], lambda: vec![1.0] }, &v, &inst, 1.0);
        assert_eq!(m.lambda[0], 0.0);
    }
}
