//! Objective error, communication cost, consensus violation, and the
//! per-iteration trace record.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{LocalObjective, ModelVector};
use crate::netsim::Transmission;
use crate::topology::CommCostMatrix;

/// `|Σ_n f_n(θ_n) − f*|`
pub fn objective_error(objs: &[LocalObjective], thetas: &[ModelVector], f_star: f64) -> Result<f64> {
    if objs.len() != thetas.len() {
        return Err(Error::DimensionMismatch { expected: objs.len(), found: thetas.len() });
    }
    let total: f64 = objs.iter().zip(thetas).map(|(o, t)| o.eval_loss(t)).sum::<Result<f64>>()?;
    Ok((total - f_star).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TcMode {
    #[default]
    Decentralized,
    /// Multi-receiver transmissions are server broadcasts, charged at the
    /// farthest receiver regardless of attribution.
    Centralized,
}

/// How a local broadcast reaching two neighbours is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    #[default]
    MaxOverReceivers,
    SumOverReceivers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TcPolicy {
    pub mode: TcMode,
    pub attribution: Attribution,
}

impl TcPolicy {
    pub fn centralized() -> Self {
        Self { mode: TcMode::Centralized, attribution: Attribution::MaxOverReceivers }
    }
}

/// Sum of per-sender, per-round link costs over `log`.
pub fn total_comm_cost(log: &[Transmission], cost: &CommCostMatrix, policy: TcPolicy) -> Result<f64> {
    let n = cost.len();
    let mut total = 0.0;
    for t in log {
        if t.sender >= n {
            return Err(Error::UnknownWorker(t.sender));
        }
        if let Some(&bad) = t.receivers.iter().find(|&&r| r >= n) {
            return Err(Error::UnknownWorker(bad));
        }
        let links = t.receivers.iter().map(|&r| cost.get(t.sender, r));
        let sum_mode = policy.mode == TcMode::Decentralized && policy.attribution == Attribution::SumOverReceivers;
        total += if sum_mode { links.sum() } else { links.fold(0.0, f64::max) };
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcvNorm {
    /// Entrywise absolute difference summed over coordinates.
    #[default]
    L1,
    L2,
}

/// Average consensus violation `Σ_edges ‖θ_p − θ_{p+1}‖ / N` over models
/// listed in chain order.
pub fn acv<T: AsRef<[f64]>>(ordered: &[T], norm: AcvNorm) -> f64 {
    if ordered.is_empty() {
        return 0.0;
    }
    let total: f64 = ordered
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].as_ref(), w[1].as_ref());
            match norm {
                AcvNorm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
                AcvNorm::L2 => libm::sqrt(linalg::dist_sq(a, b)),
            }
        })
        .sum();
    total / ordered.len() as f64
}

/// One row of a run's history.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// 1-based iteration count (row `k` holds the state after `k` updates).
    pub iter: usize,
    pub objective_error: f64,
    pub primal_residual_norm: f64,
    pub dual_residual_norm: f64,
    pub lyapunov: Option<f64>,
    pub contraction: f64,
    pub acv: f64,
    pub transmissions: Vec<Transmission>,
    /// Communication rounds used this iteration, including any rebuild rounds.
    pub rounds: usize,
    pub iteration_tc: f64,
    pub cumulative_tc: f64,
}

/// Receiver of trace rows as a run progresses.
pub trait MetricsSink {
    fn record(&mut self, row: &IterationTrace);
}

impl MetricsSink for Vec<IterationTrace> {
    fn record(&mut self, row: &IterationTrace) {
        self.push(row.clone());
    }
}

/// Discards every row.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl MetricsSink for NullSink {
    fn record(&mut self, _row: &IterationTrace) {}
}
