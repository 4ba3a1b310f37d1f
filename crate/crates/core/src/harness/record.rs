//! CSV rows of the experiment harness.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::HarnessError;
use crate::harness::metrics::Metrics;
use crate::orchestrator::HorizonResult;

pub const CSV_HEADER: [&str; 10] = [
    "approach",
    "sweep_param",
    "sweep_value",
    "seed",
    "acd_s",
    "apr_cps",
    "aschr",
    "fail_rate",
    "slot_ms",
    "status",
];

/// Seed column: a concrete seed, or the aggregate over all seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeedField {
    Seed(u64),
    Agg,
}

impl fmt::Display for SeedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedField::Seed(s) => write!(f, "{s}"),
            SeedField::Agg => f.write_str("agg"),
        }
    }
}

impl FromStr for SeedField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "agg" {
            return Ok(SeedField::Agg);
        }
        s.parse().map(SeedField::Seed).map_err(|_| format!("bad seed field `{s}`"))
    }
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub approach: String,
    pub sweep_param: String,
    pub sweep_value: Option<f64>,
    pub seed: SeedField,
    pub acd_s: Option<f64>,
    pub apr_cps: Option<f64>,
    pub aschr: Option<f64>,
    pub fail_rate: Option<f64>,
    pub slot_ms: Option<f64>,
    /// `ok`, `error: <message>`, or the standard errors of an aggregate row.
    pub status: String,
}

impl MetricsRecord {
    pub fn from_metrics(
        approach: &str,
        sweep_param: &str,
        sweep_value: Option<f64>,
        seed: u64,
        m: &Metrics,
        timing: bool,
    ) -> Self {
        Self {
            approach: approach.into(),
            sweep_param: sweep_param.into(),
            sweep_value,
            seed: SeedField::Seed(seed),
            acd_s: m.acd_s,
            apr_cps: m.apr_cps,
            aschr: Some(m.aschr),
            fail_rate: Some(m.fail_rate),
            slot_ms: timing.then_some(m.slot_ms),
            status: "ok".into(),
        }
    }

    pub fn failed(approach: &str, sweep_param: &str, sweep_value: Option<f64>, seed: u64, msg: &str) -> Self {
        Self {
            approach: approach.into(),
            sweep_param: sweep_param.into(),
            sweep_value,
            seed: SeedField::Seed(seed),
            acd_s: None,
            apr_cps: None,
            aschr: None,
            fail_rate: None,
            slot_ms: None,
            status: format!("error: {}", msg.replace(['\n', '\r'], " ")),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn fields(&self) -> [String; 10] {
        let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.approach.clone(),
            self.sweep_param.clone(),
            num(self.sweep_value),
            self.seed.to_string(),
            num(self.acd_s),
            num(self.apr_cps),
            num(self.aschr),
            num(self.fail_rate),
            num(self.slot_ms),
            self.status.clone(),
        ]
    }

    fn parse(row: &csv::StringRecord) -> Result<Self, HarnessError> {
        if row.len() != CSV_HEADER.len() {
            return Err(HarnessError::Usage(format!("expected {} columns, found {}", CSV_HEADER.len(), row.len())));
        }
        let num = |i: usize| -> Result<Option<f64>, HarnessError> {
            let s = &row[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse()
                .map(Some)
                .map_err(|_| HarnessError::Usage(format!("column {} is not a number: `{s}`", CSV_HEADER[i])))
        };
        Ok(Self {
            approach: row[0].to_string(),
            sweep_param: row[1].to_string(),
            sweep_value: num(2)?,
            seed: row[3].parse().map_err(HarnessError::Usage)?,
            acd_s: num(4)?,
            apr_cps: num(5)?,
            aschr: num(6)?,
            fail_rate: num(7)?,
            slot_ms: num(8)?,
            status: row[9].to_string(),
        })
    }
}

pub fn write_records<W: Write>(out: W, records: &[MetricsRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a results CSV, checking the header.
pub fn read_records<R: Read>(input: R) -> Result<Vec<MetricsRecord>, HarnessError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Usage(format!(
            "unexpected CSV header; expected `{}`",
            CSV_HEADER.join(",")
        )));
    }
    r.records().map(|row| MetricsRecord::parse(&row?)).collect()
}

pub const SLOT_HEADER: [&str; 13] = [
    "slot",
    "arrived",
    "completed",
    "home_hits",
    "delay_sum_s",
    "objective_s",
    "outer_iters",
    "converged",
    "isd_energy_j",
    "uav_energy_j",
    "mbs_energy_j",
    "energy_overruns",
    "solve_ms",
];

/// Per-slot breakdown of one horizon. `solve_ms` stays blank unless
/// `timing` is set.
pub fn write_slot_rows<W: Write>(out: W, h: &HorizonResult, timing: bool) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOT_HEADER)?;
    for s in &h.slots {
        let completed = s.tasks.iter().filter(|t| t.completed).count();
        let delay: f64 = s.tasks.iter().map(|t| t.delay_s).sum();
        w.write_record([
            s.slot.to_string(),
            s.tasks.len().to_string(),
            completed.to_string(),
            s.home_hits.to_string(),
            delay.to_string(),
            s.objective_s.to_string(),
            s.outer_trace.len().saturating_sub(1).to_string(),
            s.converged.to_string(),
            s.energy.isd_j.iter().sum::<f64>().to_string(),
            s.energy.uav_j.iter().sum::<f64>().to_string(),
            s.energy.mbs_j.to_string(),
            s.energy_overruns.to_string(),
            if timing { s.solve_ms.to_string() } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}
