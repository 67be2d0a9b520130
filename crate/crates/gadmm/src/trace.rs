//! Per-iteration trace files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use gadmm_core::metrics::{IterationTrace, MetricsSink};
use serde::{Deserialize, Serialize};

/// One CSV row. An empty `lyapunov` field means it was not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective_error: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub lyapunov: Option<f64>,
    pub contraction: f64,
    pub tc_cumulative: f64,
    pub acv: f64,
    pub wall_ms: f64,
}

pub const HEADER: [&str; 9] =
    ["iter", "objective_error", "primal_res", "dual_res", "lyapunov", "contraction", "tc_cumulative", "acv", "wall_ms"];

/// Streams rows to CSV as a run records them. Write errors are held until
/// [`TraceWriter::finish`].
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
    start: Instant,
    rows: usize,
    error: Option<csv::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W) -> csv::Result<Self> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record(HEADER)?;
        Ok(Self { out, start: Instant::now(), rows: 0, error: None })
    }

    /// Flushes and returns the number of rows written.
    pub fn finish(mut self) -> csv::Result<usize> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.rows)
    }
}

impl TraceWriter<std::fs::File> {
    pub fn create(path: impl AsRef<Path>) -> csv::Result<Self> {
        Self::new(std::fs::File::create(path)?)
    }
}

impl<W: Write> MetricsSink for TraceWriter<W> {
    fn record(&mut self, row: &IterationTrace) {
        if self.error.is_some() {
            return;
        }
        let row = TraceRow {
            iter: row.iter,
            objective_error: row.objective_error,
            primal_res: row.primal_residual_norm,
            dual_res: row.dual_residual_norm,
            lyapunov: row.lyapunov,
            contraction: row.contraction,
            tc_cumulative: row.cumulative_tc,
            acv: row.acv,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        match self.out.serialize(row) {
            Ok(()) => self.rows += 1,
            Err(e) => self.error = Some(e),
        }
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> csv::Result<Vec<TraceRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}
