use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Converged,
    /// Iteration cap reached before the stopping rule fired.
    Stalled,
    /// Trajectory kept at the current positions.
    Held,
    /// Finished, but some task cannot meet its deadline.
    InfeasibleDeadline,
    NumericalFailure,
    /// Stage not run for this approach.
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
}

impl TraceRecord {
    pub fn objective(iteration: usize, objective: f64) -> Self {
        Self {
            iteration,
            objective,
            omega1: None,
            omega2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: SolverStatus,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Integrality gap of the rounded offloading solution, when applicable.
    pub gap: Option<f64>,
}

impl SolverReport {
    pub fn new(status: SolverStatus) -> Self {
        Self {
            status,
            iterations: 0,
            trace: Vec::new(),
            gap: None,
        }
    }

    pub fn skipped() -> Self {
        Self::new(SolverStatus::Skipped)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.objective).collect()
    }
}
