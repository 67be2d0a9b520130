//! Centralized baselines: parameter-server ADMM and batch gradient descent.
//!
//! Both talk through a star: workers are `0..N`, the server is node `N`.
//! Each iteration uses two rounds, `N` uplink unicasts then one broadcast.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gadmm::StopReason;
use crate::linalg::{self, Matrix};
use crate::metrics::{self, AcvNorm, IterationTrace, MetricsSink, TcPolicy};
use crate::model::{
    solve_local_subproblem_cached, DualVector, LocalObjective, LossKind, ModelVector, NeighborContext, NeighborTerm,
    DualSign, PenaltyParam, ReferenceOptimum, SubproblemCache, DEFAULT_INNER_TOL,
};
use crate::netsim::{Bus, FlushedRound, LinkPolicy, Payload, Transmission};
use crate::topology::PhysicalTopology;

#[derive(Debug, Clone, PartialEq)]
pub struct PsAdmmState {
    pub thetas: Vec<ModelVector>,
    pub global: ModelVector,
    pub lambdas: Vec<DualVector>,
}

impl PsAdmmState {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { thetas: vec![ModelVector::zeros(dim); n], global: ModelVector::zeros(dim), lambdas: vec![ModelVector::zeros(dim); n] }
    }
}

/// One parameter-server ADMM iteration:
/// 1. `θ_n ← argmin f_n(θ) + ⟨λ_n, θ − Θ⟩ + (ρ/2)‖θ − Θ‖²`
/// 2. `Θ ← (1/N) Σ (θ_n + λ_n/ρ)`
/// 3. `λ_n ← λ_n + ρ(θ_n − Θ)`
pub fn admm_ps_step(state: &PsAdmmState, objs: &[LocalObjective], rho: PenaltyParam, inner_tol: f64) -> Result<PsAdmmState> {
    let mut caches = vec![SubproblemCache::new(); objs.len()];
    ps_step(state, objs, rho, inner_tol, &mut caches, None).map(|(s, _)| s)
}

fn ps_step(
    state: &PsAdmmState,
    objs: &[LocalObjective],
    rho: PenaltyParam,
    inner_tol: f64,
    caches: &mut [SubproblemCache],
    mut bus: Option<&mut Bus>,
) -> Result<(PsAdmmState, Vec<FlushedRound>)> {
    let n = objs.len();
    if state.thetas.len() != n || state.lambdas.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: state.thetas.len() });
    }
    let r = rho.get();
    let mut thetas = Vec::with_capacity(n);
    for (w, obj) in objs.iter().enumerate() {
        let ctx = NeighborContext::new(vec![NeighborTerm {
            dual: &state.lambdas[w],
            sign: DualSign::Right,
            neighbor_theta: &state.global,
        }])?;
        let theta = solve_local_subproblem_cached(obj, rho, &ctx, inner_tol, &mut caches[w])?;
        if !theta.is_finite() {
            return Err(Error::NonFinite { worker: w });
        }
        thetas.push(theta);
    }
    let mut rounds = Vec::new();
    if let Some(bus) = bus.as_deref_mut() {
        for (w, t) in thetas.iter().enumerate() {
            bus.send(w, vec![n], Payload::Model(t.clone()))?;
            bus.send(w, vec![n], Payload::Dual(state.lambdas[w].clone()))?;
        }
        rounds.push(bus.flush_round());
    }
    let mut global = vec![0.0; state.global.dim()];
    for (t, l) in thetas.iter().zip(&state.lambdas) {
        for ((g, ti), li) in global.iter_mut().zip(&**t).zip(&**l) {
            *g += ti + li / r;
        }
    }
    global.iter_mut().for_each(|g| *g /= n as f64);
    let global: ModelVector = global.into();
    if let Some(bus) = bus {
        bus.send(n, (0..n).collect(), Payload::Model(global.clone()))?;
        rounds.push(bus.flush_round());
    }
    let lambdas = thetas
        .iter()
        .zip(&state.lambdas)
        .map(|(t, l)| l.iter().zip(&**t).zip(&*global).map(|((li, ti), gi)| li + r * (ti - gi)).collect::<Vec<_>>().into())
        .collect();
    Ok((PsAdmmState { thetas, global, lambdas }, rounds))
}

/// `Θ ← Θ − step · Σ_n ∇f_n(Θ)`
pub fn gd_step(global: &[f64], objs: &[LocalObjective], step_size: f64) -> Result<ModelVector> {
    if !(step_size > 0.0) {
        return Err(Error::InvalidArgument("step size must be positive"));
    }
    let g = total_grad(global, objs)?;
    Ok(global.iter().zip(&g).map(|(t, gi)| t - step_size * gi).collect::<Vec<_>>().into())
}

fn total_grad(theta: &[f64], objs: &[LocalObjective]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; theta.len()];
    for o in objs {
        linalg::axpy(1.0, &o.eval_grad(theta)?, &mut g);
    }
    Ok(g)
}

/// `1/L` with `L` the largest eigenvalue of `Σ XᵀX` (quartered for the
/// logistic loss, whose curvature is at most a quarter of that).
pub fn default_step_size(objs: &[LocalObjective]) -> Result<f64> {
    let first = objs.first().ok_or(Error::InvalidArgument("no objectives"))?;
    let d = first.dim();
    let mut g = Matrix::zeros(d, d);
    for o in objs {
        g.add_assign(&o.features().gram());
    }
    let mut l = linalg::power_iteration(&g, 1e-12, 100_000);
    if first.kind() == LossKind::Logistic {
        l *= 0.25;
    }
    if !(l > 0.0) {
        return Err(Error::InvalidArgument("objective has no curvature"));
    }
    Ok(1.0 / l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub max_iters: usize,
    pub target_error: f64,
    pub residual_tol: f64,
    pub inner_tol: f64,
    pub tc_policy: TcPolicy,
    pub acv_norm: AcvNorm,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            target_error: 1e-4,
            residual_tol: 1e-10,
            inner_tol: DEFAULT_INNER_TOL,
            tc_policy: TcPolicy::centralized(),
            acv_norm: AcvNorm::L1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub trace: Vec<IterationTrace>,
    pub converged: bool,
    pub stop: StopReason,
    pub thetas: Vec<ModelVector>,
    pub global: ModelVector,
}

impl BaselineOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn total_tc(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.cumulative_tc)
    }
}

struct Recorder<'s> {
    cfg: BaselineConfig,
    f_star: f64,
    cumulative_tc: f64,
    trace: Vec<IterationTrace>,
    sink: &'s mut dyn MetricsSink,
}

impl Recorder<'_> {
    /// Records one row; returns the stop reason if the run should end.
    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        k: usize,
        objs: &[LocalObjective],
        thetas: &[ModelVector],
        rounds: Vec<FlushedRound>,
        costs: &crate::topology::CommCostMatrix,
        primal: f64,
        dual: f64,
        contraction: f64,
    ) -> Result<Option<StopReason>> {
        let transmissions: Vec<Transmission> = rounds.iter().flat_map(|r| r.transmissions.iter().cloned()).collect();
        let iteration_tc = metrics::total_comm_cost(&transmissions, costs, self.cfg.tc_policy)?;
        self.cumulative_tc += iteration_tc;
        let objective_error = metrics::objective_error(objs, thetas, self.f_star)?;
        let row = IterationTrace {
            iter: k + 1,
            objective_error,
            primal_residual_norm: primal,
            dual_residual_norm: dual,
            lyapunov: None,
            contraction,
            acv: metrics::acv(thetas, self.cfg.acv_norm),
            rounds: rounds.len(),
            transmissions,
            iteration_tc,
            cumulative_tc: self.cumulative_tc,
        };
        self.sink.record(&row);
        self.trace.push(row);
        Ok(if self.cfg.target_error > 0.0 && objective_error <= self.cfg.target_error {
            Some(StopReason::TargetError)
        } else if primal <= self.cfg.residual_tol && dual <= self.cfg.residual_tol {
            Some(StopReason::Residuals)
        } else {
            None
        })
    }
}

fn validate(objs: &[LocalObjective], cfg: &BaselineConfig) -> Result<usize> {
    if objs.is_empty() {
        return Err(Error::TooFewWorkers(0));
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1"));
    }
    let d = objs[0].dim();
    if let Some(o) = objs.iter().find(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: o.dim() });
    }
    Ok(d)
}

/// Runs parameter-server ADMM from zero. `topology` must cover `N + 1`
/// nodes, the last being the server.
pub fn run_admm_ps(
    objs: &[LocalObjective],
    rho: PenaltyParam,
    cfg: &BaselineConfig,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
) -> Result<BaselineOutcome> {
    let d = validate(objs, cfg)?;
    let n = objs.len();
    let r = rho.get();
    let mut caches = vec![SubproblemCache::new(); n];
    let mut state = PsAdmmState::zeros(n, d);
    let mut bus = Bus::new(LinkPolicy::Star { workers: n });
    let mut rec = Recorder { cfg: *cfg, f_star: reference.f_star, cumulative_tc: 0.0, trace: Vec::new(), sink };
    let mut stop = StopReason::MaxIters;
    for k in 0..cfg.max_iters {
        let costs = topology.costs_at(k).clone();
        let (next, rounds) = ps_step(&state, objs, rho, cfg.inner_tol, &mut caches, Some(&mut bus))?;
        let primal = libm::sqrt(next.thetas.iter().map(|t| linalg::dist_sq(t, &next.global)).sum());
        let moved = linalg::dist_sq(&next.global, &state.global);
        let dual = r * libm::sqrt(n as f64 * moved);
        let dl: f64 = next.lambdas.iter().zip(&state.lambdas).map(|(a, b)| linalg::dist_sq(a, b)).sum();
        let contraction = dl / r + r * n as f64 * moved;
        state = next;
        if let Some(s) = rec.record(k, objs, &state.thetas, rounds, &costs, primal, dual, contraction)? {
            stop = s;
            break;
        }
    }
    Ok(BaselineOutcome { trace: rec.trace, converged: stop != StopReason::MaxIters, stop, thetas: state.thetas, global: state.global })
}

/// Runs batch gradient descent from zero over the same star as
/// [`run_admm_ps`].
pub fn run_gd(
    objs: &[LocalObjective],
    step_size: f64,
    cfg: &BaselineConfig,
    reference: &ReferenceOptimum,
    topology: &mut dyn PhysicalTopology,
    sink: &mut dyn MetricsSink,
) -> Result<BaselineOutcome> {
    let d = validate(objs, cfg)?;
    if !(step_size > 0.0) {
        return Err(Error::InvalidArgument("step size must be positive"));
    }
    let n = objs.len();
    let mut global = ModelVector::zeros(d);
    let mut bus = Bus::new(LinkPolicy::Star { workers: n });
    let mut rec = Recorder { cfg: *cfg, f_star: reference.f_star, cumulative_tc: 0.0, trace: Vec::new(), sink };
    let mut stop = StopReason::MaxIters;
    for k in 0..cfg.max_iters {
        let costs = topology.costs_at(k).clone();
        let mut rounds = Vec::with_capacity(2);
        for (w, o) in objs.iter().enumerate() {
            bus.send(w, vec![n], Payload::Model(o.eval_grad(&global)?))?;
        }
        rounds.push(bus.flush_round());
        let next = gd_step(&global, objs, step_size)?;
        if !next.is_finite() {
            return Err(Error::NonFinite { worker: n });
        }
        bus.send(n, (0..n).collect(), Payload::Model(next.clone()))?;
        rounds.push(bus.flush_round());
        let moved = linalg::dist_sq(&next, &global);
        global = next;
        let thetas = vec![global.clone(); n];
        let grad_norm = libm::sqrt(moved) / step_size;
        if let Some(s) = rec.record(k, objs, &thetas, rounds, &costs, 0.0, grad_norm, moved)? {
            stop = s;
            break;
        }
    }
    Ok(BaselineOutcome { trace: rec.trace, converged: stop != StopReason::MaxIters, stop, thetas: vec![global.clone(); n], global })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_reference_optimum;
    use crate::topology::StaticTopology;

    fn quad(y: f64) -> LocalObjective {
        LocalObjective::linear(Matrix::from_rows(&[[1.0]]).unwrap(), vec![y]).unwrap()
    }

    fn rho(v: f64) -> PenaltyParam {
        PenaltyParam::new(v).unwrap()
    }

    #[test]
    fn ps_admm_fixed_point() {
        let objs = [quad(0.0), quad(0.0)];
        let s = PsAdmmState::zeros(2, 1);
        assert_eq!(admm_ps_step(&s, &objs, rho(1.0), 1e-10).unwrap(), s);
    }

    #[test]
    fn ps_admm_hand_trace() {
        let objs = [quad(1.0), quad(3.0)];
        let s = admm_ps_step(&PsAdmmState::zeros(2, 1), &objs, rho(1.0), 1e-10).unwrap();
        assert!((s.thetas[0][0] - 0.5).abs() < 1e-12 && (s.thetas[1][0] - 1.5).abs() < 1e-12);
        assert!((s.global[0] - 1.0).abs() < 1e-12);
        assert!((s.lambdas[0][0] + 0.5).abs() < 1e-12 && (s.lambdas[1][0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ps_admm_dual_sum_stays_zero() {
        let objs = [quad(1.0), quad(3.0), quad(-2.0), quad(7.5)];
        let mut s = PsAdmmState::zeros(4, 1);
        for _ in 0..50 {
            s = admm_ps_step(&s, &objs, rho(0.7), 1e-10).unwrap();
            let sum: f64 = s.lambdas.iter().map(|l| l[0]).sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn ps_admm_converges_to_pooled_optimum() {
        let objs = [quad(1.0), quad(3.0)];
        let r = compute_reference_optimum(&objs, 1e-12).unwrap();
        let cfg = BaselineConfig { target_error: 0.0, ..Default::default() };
        let out = run_admm_ps(&objs, rho(1.0), &cfg, &r, &mut StaticTopology::unit(3), &mut metrics::NullSink).unwrap();
        assert!(out.converged);
        assert!(out.thetas.iter().all(|t| (t[0] - 2.0).abs() < 1e-6));
        assert!(out.trace.iter().all(|row| row.iteration_tc == 3.0));
    }

    #[test]
    fn gd_steps() {
        let objs = [quad(0.0)];
        // zero gradient
        assert_eq!(&*gd_step(&[0.0], &objs, 0.3).unwrap(), &[0.0]);
        // unit curvature, unit step: lands on the optimum
        assert_eq!(&*gd_step(&[4.2], &objs, 1.0).unwrap(), &[0.0]);
        assert!(gd_step(&[1.0], &objs, 0.0).is_err());
    }

    #[test]
    fn gd_unit_cost_is_n_plus_one_per_iteration() {
        let objs = [quad(1.0), quad(2.0), quad(6.0)];
        let r = compute_reference_optimum(&objs, 1e-12).unwrap();
        let step = default_step_size(&objs).unwrap();
        assert!((step - 1.0 / 3.0).abs() < 1e-12);
        let cfg = BaselineConfig { target_error: 1e-10, ..Default::default() };
        let out = run_gd(&objs, step, &cfg, &r, &mut StaticTopology::unit(4), &mut metrics::NullSink).unwrap();
        assert!(out.converged);
        assert_eq!(out.total_tc(), 4.0 * out.iterations() as f64);
    }
}
