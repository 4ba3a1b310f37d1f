//! Parameter sweeps over approaches and seeds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, ModelError};
use crate::harness::metrics::{compute_metrics, Metrics};
use crate::harness::record::{MetricsRecord, SeedField};
use crate::model::types::UniformRange;
use crate::orchestrator::{run_horizon, ApproachId, HorizonResult, OrchestratorParams};
use crate::scenario::{generate_scenario, ScenarioSpec};

/// Contents of a `--config` file. Both parts default to the Table 1 setup.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub solver: OrchestratorParams,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.scenario.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    /// Mean UAV CPU frequency in GHz; the draw range keeps a 5 GHz width.
    UavCpu,
    IsdCount,
    /// Mean UAV cache size in slots; the draw range is `v-2..=v+2`.
    CacheSlots,
}

impl SweepParam {
    pub const ALL: [SweepParam; 3] = [SweepParam::UavCpu, SweepParam::IsdCount, SweepParam::CacheSlots];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::UavCpu => "uav_cpu",
            SweepParam::IsdCount => "isd_count",
            SweepParam::CacheSlots => "cache_slots",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::UavCpu => vec![10.0, 12.5, 15.0, 17.5, 20.0],
            SweepParam::IsdCount => vec![10.0, 20.0, 30.0, 40.0, 50.0],
            SweepParam::CacheSlots => vec![3.0, 5.0, 7.0, 9.0],
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec, ModelError> {
        let mut spec = base.clone();
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ModelError::InvalidArgument(format!("{} needs a positive integer, got {v}", self.as_str())))
            }
        };
        match self {
            SweepParam::UavCpu => {
                if !(value > 2.5 && value.is_finite()) {
                    return Err(ModelError::InvalidArgument(format!("uav_cpu must exceed 2.5 GHz, got {value}")));
                }
                spec.uav_cpu_ghz = UniformRange::new(value - 2.5, value + 2.5);
            }
            SweepParam::IsdCount => spec.isd_count = count(value)?,
            SweepParam::CacheSlots => {
                let c = count(value)?;
                spec.uav_cache_slots = [c.saturating_sub(2).max(1), c + 2];
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown sweep parameter `{s}`; expected uav_cpu, isd_count or cache_slots"))
    }
}

/// Build the scenario for `seed` and simulate it.
pub fn run_one(
    spec: &ScenarioSpec,
    seed: u64,
    approach: ApproachId,
    params: &OrchestratorParams,
) -> Result<(HorizonResult, Metrics), ModelError> {
    let spec = ScenarioSpec { rng_seed: seed, ..spec.clone() };
    let scenario = generate_scenario(&spec)?;
    let horizon = run_horizon(&scenario, approach, params)?;
    let metrics = compute_metrics(&horizon);
    Ok((horizon, metrics))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub base: ScenarioSpec,
    pub solver: OrchestratorParams,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub approaches: Vec<ApproachId>,
    pub seeds: Vec<u64>,
    /// Fill the wall-clock column. Off by default so that reruns are
    /// byte-identical.
    pub timing: bool,
}

/// Worker count: `AMO_THREADS` when set to a positive integer, else the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("AMO_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Mean and standard error of the mean; the error is 0 for one sample.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Aggregate row for the successful detail rows of one (approach, value).
pub fn aggregate(rows: &[MetricsRecord]) -> Option<MetricsRecord> {
    let ok: Vec<&MetricsRecord> = rows.iter().filter(|r| r.is_ok()).collect();
    let first = ok.first()?;
    let column = |f: fn(&MetricsRecord) -> Option<f64>| {
        let xs: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
        mean_stderr(&xs)
    };
    let acd = column(|r| r.acd_s);
    let apr = column(|r| r.apr_cps);
    let aschr = column(|r| r.aschr);
    let fail = column(|r| r.fail_rate);
    let ms = column(|r| r.slot_ms);
    let se = |c: Option<(f64, f64)>| c.map(|(_, s)| s.to_string()).unwrap_or_default();
    Some(MetricsRecord {
        approach: first.approach.clone(),
        sweep_param: first.sweep_param.clone(),
        sweep_value: first.sweep_value,
        seed: SeedField::Agg,
        acd_s: acd.map(|c| c.0),
        apr_cps: apr.map(|c| c.0),
        aschr: aschr.map(|c| c.0),
        fail_rate: fail.map(|c| c.0),
        slot_ms: ms.map(|c| c.0),
        status: format!(
            "se:acd={};apr={};aschr={};fail={};n={}",
            se(acd),
            se(apr),
            se(aschr),
            se(fail),
            ok.len()
        ),
    })
}

/// Run the full cross product. Rows come out grouped by approach, then
/// value, in the plan's order, seeds ascending, each group followed by its
/// aggregate row. Failed runs become rows with an error status.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<MetricsRecord>, HarnessError> {
    if plan.values.is_empty() || plan.approaches.is_empty() || plan.seeds.is_empty() {
        return Err(HarnessError::Usage("sweep needs at least one value, approach and seed".into()));
    }
    let specs: Vec<ScenarioSpec> = plan
        .values
        .iter()
        .map(|&v| plan.param.apply(&plan.base, v))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let mut seeds = plan.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let mut jobs = Vec::new();
    for &a in &plan.approaches {
        for (vi, &v) in plan.values.iter().enumerate() {
            for &seed in &seeds {
                jobs.push((a, vi, v, seed));
            }
        }
    }
    let param = plan.param.as_str();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
    let detail: Vec<MetricsRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, vi, v, seed)| match run_one(&specs[vi], seed, a, &plan.solver) {
                Ok((_, m)) => MetricsRecord::from_metrics(a.as_str(), param, Some(v), seed, &m, plan.timing),
                Err(e) => MetricsRecord::failed(a.as_str(), param, Some(v), seed, &e.to_string()),
            })
            .collect()
    });

    let mut out = Vec::with_capacity(detail.len() + detail.len() / seeds.len());
    for group in detail.chunks(seeds.len()) {
        out.extend_from_slice(group);
        if let Some(agg) = aggregate(group) {
            out.push(agg);
        }
    }
    Ok(out)
}
