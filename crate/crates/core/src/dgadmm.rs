//! Dynamic GADMM: the logical chain is rebuilt every `tau` iterations from
//! the current physical link costs, then GADMM continues on the new chain.

use alloc::vec::Vec;

use crate::chain::{build_chain, generate_head_set, Chain};
use crate::error::{Error, Result};
use crate::gadmm::{drive, GadmmConfig, GadmmState, Prelude, RunOutcome};
use crate::metrics::MetricsSink;
use crate::model::{DualVector, LocalObjective, ReferenceOptimum};
use crate::netsim::{Bus, FlushedRound, LinkPolicy, Payload};
use crate::topology::{CommCostMatrix, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefreshPolicy {
    /// Iterations between chain rebuilds.
    pub tau: usize,
    /// Each worker forwards its right dual to its new right neighbour. When
    /// off, duals stay attached to chain positions.
    pub handover_duals: bool,
    /// Communication rounds charged per rebuild (pilots, cost vectors and
    /// model exchange with the new neighbours).
    pub rebuild_cost_rounds: usize,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self { tau: 15, handover_duals: true, rebuild_cost_rounds: 4 }
    }
}

/// Re-keys the duals of `state` onto `new_chain`.
///
/// With `handover`, the dual a worker held on its old right edge becomes the
/// dual on its new right edge. Without it, edge `p` keeps its value.
pub fn dual_handover(state: &GadmmState, new_chain: Chain, handover: bool) -> Result<GadmmState> {
    let old = state.chain();
    if new_chain.len() != old.len() {
        return Err(Error::InvalidChain("chains differ in length"));
    }
    let lambdas: Vec<DualVector> = if handover {
        (0..new_chain.edges()).map(|q| state.lambdas()[old.position_of(new_chain.worker(q))].clone()).collect()
    } else {
        state.lambdas().to_vec()
    };
    let mut next = state.clone();
    next.replace_chain(new_chain, lambdas);
    Ok(next)
}

struct Refresher {
    policy: RefreshPolicy,
    seed: u64,
}

impl Prelude for Refresher {
    fn before_step(&mut self, k: usize, state: &mut GadmmState, costs: &CommCostMatrix, bus: &mut Bus) -> Result<Vec<FlushedRound>> {
        let mut rounds = Vec::new();
        if k == 0 || !k.is_multiple_of(self.policy.tau) {
            return Ok(rounds);
        }
        let n = state.chain().len();
        let epoch = (k / self.policy.tau) as u64;
        let heads = generate_head_set(self.seed, epoch, n)?;
        let chain = build_chain(costs, &heads)?;
        bus.set_policy(LinkPolicy::Chain(chain.clone()));

        for _ in 0..self.policy.rebuild_cost_rounds {
            for w in 0..n {
                bus.send(w, chain.neighbor_list(w), Payload::Control)?;
            }
            rounds.push(bus.flush_round());
        }
        if self.policy.handover_duals {
            for p in 0..chain.edges() {
                let w = chain.worker(p);
                let old_edge = state.chain().position_of(w);
                bus.send(w, alloc::vec![chain.worker(p + 1)], Payload::Dual(state.lambdas()[old_edge].clone()))?;
            }
            rounds.push(bus.flush_round());
        }
        *state = dual_handover(state, chain, self.policy.handover_duals)?;
        Ok(rounds)
    }
}

/// Runs D-GADMM from zero, starting on the identity chain. Rebuilds happen
/// before iterations `tau, 2·tau, ...`; each uses a fresh shared-seed head
/// set and the greedy chain over the costs in force at that iteration.
pub fn run_dgadmm(
    objs: &[LocalObjective],
    cfg: &GadmmConfig,
    policy: RefreshPolicy,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
) -> Result<RunOutcome> {
    if policy.tau == 0 {
        return Err(Error::InvalidArgument("tau must be at least 1"));
    }
    if objs.len() % 2 == 1 {
        return Err(Error::OddWorkerCount(objs.len()));
    }
    let chain = Chain::identity(objs.len())?;
    drive(chain, objs, cfg, reference, topology, sink, &mut Refresher { policy, seed: cfg.seed })
}
