//! Per-iteration solver history.

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub total_power_w: f64,
    /// `||phi - varphi||_2` for ADMM; zero for single-copy methods.
    pub consensus_residual: f64,
    /// Smallest rate slack (bits/s/Hz) over all users at this iterate.
    pub min_slack: f64,
    /// Wall-clock time since the solver started.
    pub wall_ms: f64,
    /// Per-cluster edge-beamformer branch tags (ZF only).
    pub branch: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    /// Iteration cap reached or the final audit failed.
    NotConverged,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::NotConverged => "not_converged",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    /// Free-form notes (fallbacks taken, restarts).
    pub events: Vec<String>,
}

impl SolverTrace {
    pub fn new() -> Self {
        SolverTrace {
            rows: Vec::new(),
            status: RunStatus::NotConverged,
            events: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iteration)
    }

    pub fn powers(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.total_power_w).collect()
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.rows.last().map(|r| r.consensus_residual)
    }
}

impl Default for SolverTrace {
    fn default() -> Self {
        Self::new()
    }
}
