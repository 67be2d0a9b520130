//! Group ADMM over a chain.
//!
//! One iteration:
//! 1. every head solves its subproblem against its tail neighbours'
//!    iteration-`k` models and duals;
//! 2. heads transmit to their neighbours (one round);
//! 3. every tail solves against the freshly received head models;
//! 4. tails transmit (second round);
//! 5. every edge dual moves by `ρ (θ_left − θ_right)`.
//!
//! Duals live on edges and are indexed by chain position: edge `p` joins the
//! workers at positions `p` and `p + 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{Chain, Role};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{self, AcvNorm, IterationTrace, MetricsSink, TcPolicy};
use crate::model::{
    solve_local_subproblem_cached, DualVector, LocalObjective, ModelVector, NeighborContext, PenaltyParam,
    ReferenceOptimum, SubproblemCache, DEFAULT_INNER_TOL,
};
use crate::netsim::{Bus, FlushedRound, LinkPolicy, Payload, Transmission};
use crate::topology::{CommCostMatrix, PhysicalTopology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadmmConfig {
    pub rho: PenaltyParam,
    pub max_iters: usize,
    /// Stop once the objective error reaches this value. Zero disables it.
    pub target_error: f64,
    pub inner_tol: f64,
    /// Seed shared by all workers (head-set draws in the dynamic variant).
    pub seed: u64,
    /// Also stop once both residual norms are at or below this value.
    pub residual_tol: f64,
    /// Accept an odd worker count; the last worker is then a head.
    pub allow_odd: bool,
    pub tc_policy: TcPolicy,
    pub acv_norm: AcvNorm,
}

impl GadmmConfig {
    pub fn new(rho: f64) -> Result<Self> {
        Ok(Self {
            rho: PenaltyParam::new(rho)?,
            max_iters: 10_000,
            target_error: 1e-4,
            inner_tol: DEFAULT_INNER_TOL,
            seed: 0,
            residual_tol: 1e-10,
            allow_odd: false,
            tc_policy: TcPolicy::default(),
            acv_norm: AcvNorm::L1,
        })
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_target_error(mut self, target_error: f64) -> Self {
        self.target_error = target_error;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1"));
        }
        if !(self.target_error >= 0.0) || !(self.residual_tol >= 0.0) {
            return Err(Error::InvalidArgument("stopping tolerances must be non-negative"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument("inner tolerance must be positive"));
        }
        Ok(())
    }
}

/// Per-worker view of a [`GadmmState`].
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerState {
    pub id: usize,
    pub role: Role,
    pub theta: ModelVector,
    /// Dual on the edge to the right neighbour; `None` for the last worker.
    pub lambda_right: Option<DualVector>,
}

/// Models by worker id and duals by chain edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GadmmState {
    chain: Chain,
    thetas: Vec<ModelVector>,
    lambdas: Vec<DualVector>,
}

impl GadmmState {
    /// All models and duals at zero.
    pub fn zeros(chain: Chain, dim: usize) -> Self {
        let n = chain.len();
        Self { thetas: vec![ModelVector::zeros(dim); n], lambdas: vec![ModelVector::zeros(dim); n - 1], chain }
    }

    pub fn from_parts(chain: Chain, thetas: Vec<ModelVector>, lambdas: Vec<DualVector>) -> Result<Self> {
        if thetas.len() != chain.len() {
            return Err(Error::DimensionMismatch { expected: chain.len(), found: thetas.len() });
        }
        if lambdas.len() != chain.edges() {
            return Err(Error::DimensionMismatch { expected: chain.edges(), found: lambdas.len() });
        }
        let d = thetas[0].dim();
        if let Some(bad) = thetas.iter().chain(&lambdas).find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        Ok(Self { chain, thetas, lambdas })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn dim(&self) -> usize {
        self.thetas[0].dim()
    }

    /// Models indexed by worker id.
    pub fn thetas(&self) -> &[ModelVector] {
        &self.thetas
    }

    /// Duals indexed by chain edge.
    pub fn lambdas(&self) -> &[DualVector] {
        &self.lambdas
    }

    pub fn theta(&self, worker: usize) -> &ModelVector {
        &self.thetas[worker]
    }

    /// Models in chain order.
    pub fn ordered_thetas(&self) -> Vec<&[f64]> {
        self.chain.order().iter().map(|&w| &*self.thetas[w]).collect()
    }

    pub fn workers(&self) -> Vec<WorkerState> {
        (0..self.chain.len())
            .map(|p| {
                let id = self.chain.worker(p);
                WorkerState {
                    id,
                    role: self.chain.role_at(p),
                    theta: self.thetas[id].clone(),
                    lambda_right: self.lambdas.get(p).cloned(),
                }
            })
            .collect()
    }

    pub(crate) fn replace_chain(&mut self, chain: Chain, lambdas: Vec<DualVector>) {
        debug_assert_eq!(chain.len(), self.chain.len());
        debug_assert_eq!(lambdas.len(), self.lambdas.len());
        self.chain = chain;
        self.lambdas = lambdas;
    }

    /// Subproblem context for the worker at chain position `p`, reading
    /// neighbour models through `neighbor`.
    fn context<'s>(&'s self, p: usize, neighbor: impl Fn(usize) -> Result<&'s [f64]>) -> Result<NeighborContext<'s>> {
        let n = self.chain.len();
        let left = if p > 0 { Some((&*self.lambdas[p - 1], neighbor(self.chain.worker(p - 1))?)) } else { None };
        let right = if p + 1 < n { Some((&*self.lambdas[p], neighbor(self.chain.worker(p + 1))?)) } else { None };
        NeighborContext::chain(left, right)
    }
}

/// Head updates must read only iteration-`k` tails; the order in which heads
/// are visited must not matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UpdateOrder {
    Forward,
    #[cfg_attr(not(test), allow(dead_code))]
    Reverse,
}

/// Stateful stepper holding per-worker factorization caches.
#[derive(Debug)]
pub struct GadmmEngine<'a> {
    objs: &'a [LocalObjective],
    cfg: GadmmConfig,
    caches: Vec<SubproblemCache>,
}

impl<'a> GadmmEngine<'a> {
    pub fn new(objs: &'a [LocalObjective], cfg: GadmmConfig) -> Result<Self> {
        cfg.validate()?;
        let n = objs.len();
        if n < 2 {
            return Err(Error::TooFewWorkers(n));
        }
        if n % 2 == 1 && !cfg.allow_odd {
            return Err(Error::OddWorkerCount(n));
        }
        let d = objs[0].dim();
        if let Some(o) = objs.iter().find(|o| o.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: o.dim() });
        }
        Ok(Self { objs, cfg, caches: vec![SubproblemCache::new(); n] })
    }

    pub fn config(&self) -> &GadmmConfig {
        &self.cfg
    }

    pub fn objectives(&self) -> &'a [LocalObjective] {
        self.objs
    }

    fn check_state(&self, state: &GadmmState) -> Result<()> {
        if state.chain.len() != self.objs.len() {
            return Err(Error::DimensionMismatch { expected: self.objs.len(), found: state.chain.len() });
        }
        if state.dim() != self.objs[0].dim() {
            return Err(Error::DimensionMismatch { expected: self.objs[0].dim(), found: state.dim() });
        }
        Ok(())
    }

    /// One full iteration. With a bus, each phase's models travel through it
    /// and the two flushed rounds are returned; tails read head models from
    /// their inbox.
    pub fn step(&mut self, state: &mut GadmmState, bus: Option<&mut Bus>) -> Result<Vec<FlushedRound>> {
        self.step_ordered(state, bus, UpdateOrder::Forward)
    }

    fn step_ordered(&mut self, state: &mut GadmmState, mut bus: Option<&mut Bus>, order: UpdateOrder) -> Result<Vec<FlushedRound>> {
        self.check_state(state)?;
        let mut rounds = Vec::new();

        let heads: Vec<usize> = state.chain.head_positions().collect();
        let updated = self.solve_group(state, &heads, order, None)?;
        self.commit(state, updated, bus.as_deref_mut(), &mut rounds)?;

        let tails: Vec<usize> = state.chain.tail_positions().collect();
        let updated = self.solve_group(state, &tails, order, rounds.first())?;
        self.commit(state, updated, bus, &mut rounds)?;

        let rho = self.cfg.rho.get();
        for p in 0..state.chain.edges() {
            let (a, b) = (state.chain.worker(p), state.chain.worker(p + 1));
            for ((l, x), y) in state.lambdas[p].iter_mut().zip(&*state.thetas[a]).zip(&*state.thetas[b]) {
                *l += rho * (x - y);
            }
        }
        Ok(rounds)
    }

    /// Solves every worker at `positions` against the current state; nothing
    /// is written back until the whole group is done.
    fn solve_group(
        &mut self,
        state: &GadmmState,
        positions: &[usize],
        order: UpdateOrder,
        inbox: Option<&FlushedRound>,
    ) -> Result<Vec<(usize, ModelVector)>> {
        let mut out: Vec<(usize, ModelVector)> = Vec::with_capacity(positions.len());
        let visit: Vec<usize> = match order {
            UpdateOrder::Forward => positions.to_vec(),
            UpdateOrder::Reverse => positions.iter().rev().copied().collect(),
        };
        for p in visit {
            let w = state.chain.worker(p);
            let ctx = state.context(p, |nbr| match inbox {
                Some(round) => round
                    .model_from(nbr, w)
                    .map(|m| &**m)
                    .ok_or(Error::InvalidChain("neighbour model missing from inbox")),
                None => Ok(&*state.thetas[nbr]),
            })?;
            let theta = solve_local_subproblem_cached(&self.objs[w], self.cfg.rho, &ctx, self.cfg.inner_tol, &mut self.caches[w])?;
            if !theta.is_finite() {
                return Err(Error::NonFinite { worker: w });
            }
            out.push((w, theta));
        }
        out.sort_by_key(|(w, _)| state.chain.position_of(*w));
        Ok(out)
    }

    fn commit(
        &self,
        state: &mut GadmmState,
        updated: Vec<(usize, ModelVector)>,
        bus: Option<&mut Bus>,
        rounds: &mut Vec<FlushedRound>,
    ) -> Result<()> {
        if let Some(bus) = bus {
            for (w, theta) in &updated {
                bus.send(*w, state.chain.neighbor_list(*w), Payload::Model(theta.clone()))?;
            }
            rounds.push(bus.flush_round());
        }
        for (w, theta) in updated {
            state.thetas[w] = theta;
        }
        Ok(())
    }
}

/// One iteration on a copy of `state`, without a bus.
pub fn gadmm_step(state: &GadmmState, objs: &[LocalObjective], cfg: &GadmmConfig) -> Result<GadmmState> {
    let mut next = state.clone();
    GadmmEngine::new(objs, *cfg)?.step(&mut next, None)?;
    Ok(next)
}

/// `θ_p − θ_{p+1}` for every edge, in chain order.
pub fn primal_residuals(state: &GadmmState) -> Vec<ModelVector> {
    let ordered = state.ordered_thetas();
    ordered.windows(2).map(|w| w[0].iter().zip(w[1]).map(|(a, b)| a - b).collect::<Vec<_>>().into()).collect()
}

/// Dual residual of every head: `ρ Σ_{tail neighbours} (θ^{k+1} − θ^k)`.
/// Both snapshots must share a chain.
pub fn dual_residuals(prev: &GadmmState, cur: &GadmmState, rho: PenaltyParam) -> Vec<(usize, ModelVector)> {
    debug_assert_eq!(prev.chain, cur.chain);
    let rho = rho.get();
    cur.chain
        .head_positions()
        .map(|p| {
            let w = cur.chain.worker(p);
            let mut s = vec![0.0; cur.dim()];
            for nbr in cur.chain.neighbor_list(w) {
                for ((si, a), b) in s.iter_mut().zip(&*cur.thetas[nbr]).zip(&*prev.thetas[nbr]) {
                    *si += rho * (a - b);
                }
            }
            (w, s.into())
        })
        .collect()
}

/// Optimal duals for `chain` at `theta_star`, from the stationarity recursion
/// `λ_p = λ_{p−1} − ∇f_{w_p}(θ*)`, `λ_{−1} = 0`.
pub fn reference_duals(objs: &[LocalObjective], chain: &Chain, theta_star: &[f64]) -> Result<Vec<DualVector>> {
    let mut acc = vec![0.0; theta_star.len()];
    let mut out = Vec::with_capacity(chain.edges());
    for p in 0..chain.edges() {
        let g = objs[chain.worker(p)].eval_grad(theta_star)?;
        linalg::axpy(-1.0, &g, &mut acc);
        out.push(acc.clone().into());
    }
    Ok(out)
}

/// `V = (1/ρ) Σ_edges ‖λ − λ*‖² + ρ Σ_tails deg·‖θ − θ*‖²`, which is the
/// head-indexed sum over each head's tail neighbours.
pub fn lyapunov(state: &GadmmState, theta_star: &[f64], lambda_star: Option<&[DualVector]>, rho: PenaltyParam) -> Result<f64> {
    let lambda_star = lambda_star.ok_or(Error::MissingReference)?;
    if lambda_star.len() != state.lambdas.len() {
        return Err(Error::DimensionMismatch { expected: state.lambdas.len(), found: lambda_star.len() });
    }
    let rho = rho.get();
    let dual: f64 = state.lambdas.iter().zip(lambda_star).map(|(l, s)| linalg::dist_sq(l, s)).sum();
    let mut primal = 0.0;
    for p in state.chain.head_positions() {
        for nbr in state.chain.neighbor_list(state.chain.worker(p)) {
            primal += linalg::dist_sq(&state.thetas[nbr], theta_star);
        }
    }
    Ok(dual / rho + rho * primal)
}

/// `(1/ρ) Σ_edges ‖Δλ‖² + ρ Σ_tails deg·‖Δθ‖²` between consecutive iterates.
pub fn contraction_measure(prev: &GadmmState, cur: &GadmmState, rho: PenaltyParam) -> f64 {
    let rho = rho.get();
    let dual: f64 = prev.lambdas.iter().zip(&cur.lambdas).map(|(a, b)| linalg::dist_sq(a, b)).sum();
    let primal: f64 = cur
        .chain
        .tail_positions()
        .map(|p| {
            let w = cur.chain.worker(p);
            cur.chain.degree(w) as f64 * linalg::dist_sq(&cur.thetas[w], &prev.thetas[w])
        })
        .sum();
    dual / rho + rho * primal
}

fn stacked_norm(vs: impl Iterator<Item = ModelVector>) -> f64 {
    libm::sqrt(vs.map(|v| linalg::norm_sq(&v)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetError,
    Residuals,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<IterationTrace>,
    pub converged: bool,
    pub stop: StopReason,
    pub state: GadmmState,
}

impl RunOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn total_tc(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.cumulative_tc)
    }
}

/// Work done before an iteration's model updates (chain refreshes).
pub(crate) trait Prelude {
    fn before_step(&mut self, k: usize, state: &mut GadmmState, costs: &CommCostMatrix, bus: &mut Bus) -> Result<Vec<FlushedRound>>;
}

struct NoPrelude;

impl Prelude for NoPrelude {
    fn before_step(&mut self, _: usize, _: &mut GadmmState, _: &CommCostMatrix, _: &mut Bus) -> Result<Vec<FlushedRound>> {
        Ok(Vec::new())
    }
}

/// Runs GADMM from zero on the identity chain.
pub fn run_gadmm(
    objs: &[LocalObjective],
    cfg: &GadmmConfig,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
) -> Result<RunOutcome> {
    run_gadmm_on(Chain::identity(objs.len())?, objs, cfg, reference, topology, sink)
}

/// Runs GADMM from zero on a fixed logical chain.
pub fn run_gadmm_on(
    chain: Chain,
    objs: &[LocalObjective],
    cfg: &GadmmConfig,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
) -> Result<RunOutcome> {
    drive(chain, objs, cfg, reference, topology, sink, &mut NoPrelude)
}

pub(crate) fn drive(
    chain: Chain,
    objs: &[LocalObjective],
    cfg: &GadmmConfig,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
    prelude: &mut dyn Prelude,
) -> Result<RunOutcome> {
    let mut engine = GadmmEngine::new(objs, *cfg)?;
    if chain.len() != objs.len() {
        return Err(Error::DimensionMismatch { expected: objs.len(), found: chain.len() });
    }
    let rho = cfg.rho;
    let theta_star = &reference.theta;
    let mut state = GadmmState::zeros(chain, objs[0].dim());
    let mut bus = Bus::new(LinkPolicy::Chain(state.chain.clone()));
    let mut lambda_star: Option<(Chain, Vec<DualVector>)> = None;
    let mut trace = Vec::new();
    let mut cumulative_tc = 0.0;
    let mut stop = StopReason::MaxIters;

    for k in 0..cfg.max_iters {
        let costs = topology.costs_at(k).clone();
        let mut rounds = prelude.before_step(k, &mut state, &costs, &mut bus)?;
        let prev = state.clone();
        rounds.extend(engine.step(&mut state, Some(&mut bus))?);

        if lambda_star.as_ref().is_none_or(|(c, _)| *c != state.chain) {
            lambda_star = Some((state.chain.clone(), reference_duals(objs, &state.chain, theta_star)?));
        }
        let star_duals = lambda_star.as_ref().map(|(_, l)| l.as_slice());

        let transmissions: Vec<Transmission> = rounds.iter().flat_map(|r| r.transmissions.iter().cloned()).collect();
        let iteration_tc = metrics::total_comm_cost(&transmissions, &costs, cfg.tc_policy)?;
        cumulative_tc += iteration_tc;
        let objective_error = metrics::objective_error(objs, &state.thetas, reference.f_star)?;
        let primal = stacked_norm(primal_residuals(&state).into_iter());
        let dual = stacked_norm(dual_residuals(&prev, &state, rho).into_iter().map(|(_, s)| s));
        let row = IterationTrace {
            iter: k + 1,
            objective_error,
            primal_residual_norm: primal,
            dual_residual_norm: dual,
            lyapunov: lyapunov(&state, theta_star, star_duals, rho).ok(),
            contraction: contraction_measure(&prev, &state, rho),
            acv: metrics::acv(&state.ordered_thetas(), cfg.acv_norm),
            rounds: rounds.len(),
            transmissions,
            iteration_tc,
            cumulative_tc,
        };
        sink.record(&row);
        trace.push(row);

        if cfg.target_error > 0.0 && objective_error <= cfg.target_error {
            stop = StopReason::TargetError;
            break;
        }
        if primal <= cfg.residual_tol && dual <= cfg.residual_tol {
            stop = StopReason::Residuals;
            break;
        }
    }
    Ok(RunOutcome { trace, converged: stop != StopReason::MaxIters, stop, state })
}
