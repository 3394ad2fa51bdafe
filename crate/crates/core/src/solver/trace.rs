use alloc::string::String;
use alloc::vec::Vec;

/// One record per outer epoch (or per logging interval for SGD).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub epoch: u64,
    /// Cumulative oracle queries (see `OracleLedger::query_total`).
    pub oracle_calls: u64,
    pub objective: f64,
    pub objective_gap: Option<f64>,
    pub bregman_gap: Option<f64>,
    pub feasibility: f64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub run_id: String,
    pub algorithm: String,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(run_id: impl Into<String>, algorithm: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            algorithm: algorithm.into(),
            rows: Vec::new(),
        }
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Epochs and oracle counts strictly increase row over row.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].epoch > w[0].epoch && w[1].oracle_calls > w[0].oracle_calls)
    }

    /// Oracle calls at the first row whose objective gap is at or below
    /// `target`.
    pub fn calls_to_gap(&self, target: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.objective_gap.is_some_and(|g| g <= target))
            .map(|r| r.oracle_calls)
    }
}
