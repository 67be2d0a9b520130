//! Runs configured experiments: single runs, topology sweeps, and
//! side-by-side comparisons.

use std::time::Instant;

use gadmm_core::baselines::{default_step_size, run_admm_ps, run_gd, BaselineConfig, BaselineOutcome};
use gadmm_core::chain::{build_chain, generate_head_set, Chain};
use gadmm_core::dgadmm::{run_dgadmm, RefreshPolicy};
use gadmm_core::gadmm::{run_gadmm_on, GadmmConfig, RunOutcome, StopReason};
use gadmm_core::metrics::{IterationTrace, MetricsSink, TcMode, TcPolicy};
use gadmm_core::model::{compute_reference_optimum, LocalObjective, PenaltyParam, ReferenceOptimum};
use gadmm_core::topology::{
    center_worker, cost_matrix, random_placement, star_cost_matrix, CostModel, EnergyModel, MovingTopology,
    PhysicalTopology, StaticTopology,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Algorithm, CostKind, DatasetSource, ExperimentConfig};
use crate::data::{gen_synthetic, load_csv, partition_even, DataError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("solver: {0}")]
    Core(#[from] gadmm_core::Error),
    #[error("{0}")]
    Mismatch(String),
}

/// Sharded objectives plus the pooled optimum they are scored against.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objectives: Vec<LocalObjective>,
    pub reference: ReferenceOptimum,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem, ExperimentError> {
    let task = cfg.task.into();
    let mut ds = match &cfg.dataset {
        DatasetSource::Synthetic { samples, features, .. } => gen_synthetic(task, *samples, *features, cfg.data_seed())?,
        DatasetSource::Csv { path } => load_csv(path, task)?,
    };
    if cfg.standardize {
        ds.standardize();
    }
    let objectives = partition_even(&ds, cfg.n_workers)?;
    let reference = compute_reference_optimum(&objectives, 1e-12)?;
    Ok(Problem { objectives, reference })
}

/// Independent sub-seed `stream` of `seed`.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

const TOPOLOGY_STREAM: u64 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub algorithm: &'static str,
    pub converged: bool,
    pub stop: &'static str,
    pub iterations: usize,
    pub iterations_to_target: Option<usize>,
    pub total_tc: f64,
    pub final_objective_error: f64,
    pub final_acv: f64,
    pub f_star: f64,
    pub wall_ms: f64,
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::TargetError => "target_error",
        StopReason::Residuals => "residuals",
        StopReason::MaxIters => "max_iters",
    }
}

fn energy() -> CostModel {
    CostModel::Energy(EnergyModel::default())
}

fn topology(cfg: &ExperimentConfig, seed: u64) -> Result<Box<dyn PhysicalTopology>, ExperimentError> {
    let n = cfg.n_workers;
    let seed = sub_seed(seed, TOPOLOGY_STREAM);
    Ok(match (cfg.cost_model, cfg.algorithm.is_centralized(), cfg.mobility_period) {
        (CostKind::Unit, true, _) => Box::new(StaticTopology::unit(n + 1)),
        (CostKind::Unit, false, _) => Box::new(StaticTopology::unit(n)),
        (CostKind::Energy, true, _) => {
            let p = random_placement(n, cfg.area_side, seed)?;
            Box::new(StaticTopology::new(star_cost_matrix(&p, energy(), center_worker(&p))))
        }
        (CostKind::Energy, false, None) => {
            let p = random_placement(n, cfg.area_side, seed)?;
            Box::new(StaticTopology::new(cost_matrix(&p, energy())))
        }
        (CostKind::Energy, false, Some(period)) => Box::new(MovingTopology::new(n, cfg.area_side, energy(), period, seed)?),
    })
}

/// Records rows into an outer sink while remembering the first iteration
/// that met the target.
struct Tap<'a> {
    inner: &'a mut dyn MetricsSink,
    target: f64,
    hit: Option<usize>,
}

impl MetricsSink for Tap<'_> {
    fn record(&mut self, row: &IterationTrace) {
        if self.hit.is_none() && self.target > 0.0 && row.objective_error <= self.target {
            self.hit = Some(row.iter);
        }
        self.inner.record(row);
    }
}

/// Runs one configured experiment on a prepared problem. `seed` drives the
/// placement, head-set draws and chain refreshes.
pub fn run_with(
    cfg: &ExperimentConfig,
    problem: &Problem,
    seed: u64,
    sink: &mut dyn MetricsSink,
) -> Result<Summary, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let objs = &problem.objectives;
    let reference = &problem.reference;
    let mut topo = topology(cfg, seed)?;
    let mut tap = Tap { inner: sink, target: cfg.target_error, hit: None };
    let tc_policy = TcPolicy { mode: TcMode::Decentralized, attribution: cfg.attribution.into() };

    let gadmm_cfg = |rho: f64| -> Result<GadmmConfig, ExperimentError> {
        let mut g = GadmmConfig::new(rho)?.with_max_iters(cfg.max_iters).with_target_error(cfg.target_error).with_seed(seed);
        g.tc_policy = tc_policy;
        g.acv_norm = cfg.acv_norm.into();
        Ok(g)
    };
    let base_cfg = BaselineConfig {
        max_iters: cfg.max_iters,
        target_error: cfg.target_error,
        acv_norm: cfg.acv_norm.into(),
        ..Default::default()
    };
    let rho = cfg.rho.unwrap_or(1.0);

    let (trace, converged, stop): (Vec<IterationTrace>, bool, StopReason) = match cfg.algorithm {
        Algorithm::Gadmm => {
            let chain = match cfg.cost_model {
                CostKind::Unit => Chain::identity(objs.len())?,
                CostKind::Energy => build_chain(topo.costs_at(0), &generate_head_set(seed, 0, objs.len())?)?,
            };
            let RunOutcome { trace, converged, stop, .. } =
                run_gadmm_on(chain, objs, &gadmm_cfg(rho)?, reference, topo.as_mut(), &mut tap)?;
            (trace, converged, stop)
        }
        Algorithm::Dgadmm => {
            let defaults = RefreshPolicy::default();
            let policy = RefreshPolicy {
                tau: cfg.tau.unwrap_or(defaults.tau),
                handover_duals: cfg.handover_duals.unwrap_or(defaults.handover_duals),
                rebuild_cost_rounds: cfg.rebuild_cost_rounds.unwrap_or(defaults.rebuild_cost_rounds),
            };
            let RunOutcome { trace, converged, stop, .. } =
                run_dgadmm(objs, &gadmm_cfg(rho)?, policy, reference, topo.as_mut(), &mut tap)?;
            (trace, converged, stop)
        }
        Algorithm::AdmmPs => {
            let BaselineOutcome { trace, converged, stop, .. } =
                run_admm_ps(objs, PenaltyParam::new(rho)?, &base_cfg, reference, topo.as_mut(), &mut tap)?;
            (trace, converged, stop)
        }
        Algorithm::Gd => {
            let step = match cfg.step_size {
                Some(s) => s,
                None => default_step_size(objs)?,
            };
            let BaselineOutcome { trace, converged, stop, .. } =
                run_gd(objs, step, &base_cfg, reference, topo.as_mut(), &mut tap)?;
            (trace, converged, stop)
        }
    };
    let last = trace.last().expect("runs record at least one iteration");
    Ok(Summary {
        algorithm: cfg.algorithm.name(),
        converged,
        stop: stop_name(stop),
        iterations: trace.len(),
        iterations_to_target: tap.hit,
        total_tc: last.cumulative_tc,
        final_objective_error: last.objective_error,
        final_acv: last.acv,
        f_star: reference.f_star,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig, sink: &mut dyn MetricsSink) -> Result<Summary, ExperimentError> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    run_with(cfg, &problem, cfg.seed, sink)
}

#[derive(Debug, Clone, Serialize)]
pub struct CdfRow {
    pub trial: usize,
    pub seed: u64,
    pub algorithm: &'static str,
    pub iterations: usize,
    pub total_tc: f64,
    pub converged: bool,
}

/// Runs `trials` independent placements under the energy cost model on one
/// dataset. Rows come back in trial order.
pub fn run_cdf(cfg: &ExperimentConfig, trials: usize) -> Result<Vec<CdfRow>, ExperimentError> {
    cfg.validate()?;
    if trials == 0 {
        return Err(ExperimentError::Mismatch("trials must be at least 1".into()));
    }
    if cfg.cost_model != CostKind::Energy {
        return Err(crate::config::ConfigError::Field { field: "cost_model", message: "cdf needs the energy model".into() }.into());
    }
    let problem = build_problem(cfg)?;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = sub_seed(cfg.seed, 1000 + trial as u64);
            let s = run_with(cfg, &problem, seed, &mut gadmm_core::metrics::NullSink)?;
            Ok(CdfRow {
                trial,
                seed,
                algorithm: s.algorithm,
                iterations: s.iterations,
                total_tc: s.total_tc,
                converged: s.converged,
            })
        })
        .collect()
}

/// Runs each config on the same data and returns one summary per config.
pub fn run_compare(cfgs: &[ExperimentConfig]) -> Result<Vec<Summary>, ExperimentError> {
    if cfgs.len() < 2 {
        return Err(ExperimentError::Mismatch("compare needs at least two configs".into()));
    }
    let first = &cfgs[0];
    for c in &cfgs[1..] {
        if c.task != first.task {
            return Err(ExperimentError::Mismatch("configs use different tasks".into()));
        }
        if c.dataset != first.dataset || c.data_seed() != first.data_seed() || c.standardize != first.standardize {
            return Err(ExperimentError::Mismatch("configs use different datasets".into()));
        }
        if c.n_workers != first.n_workers {
            return Err(ExperimentError::Mismatch("configs use different worker counts".into()));
        }
    }
    cfgs.iter().map(|c| run_experiment(c, &mut gadmm_core::metrics::NullSink)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(0, 1), sub_seed(0, 2));
        assert_ne!(sub_seed(0, 1), sub_seed(1, 1));
        assert_eq!(sub_seed(5, 3), sub_seed(5, 3));
    }

    #[test]
    fn small_gadmm_run() {
        let c = cfg(
            r#"{"algorithm":"gadmm","task":"linear","n_workers":4,"rho":5,
                "dataset":{"synthetic":{"samples":80,"features":3}}}"#,
        );
        let mut rows = Vec::new();
        let s = run_experiment(&c, &mut rows).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, rows.len());
        assert_eq!(s.iterations_to_target, Some(s.iterations));
        assert_eq!(s.total_tc, 4.0 * s.iterations as f64);
    }

    #[test]
    fn compare_rejects_mismatched_tasks() {
        let a = cfg(
            r#"{"algorithm":"gadmm","task":"linear","n_workers":4,"rho":5,
                "dataset":{"synthetic":{"samples":80,"features":3}}}"#,
        );
        let mut b = a.clone();
        b.task = crate::config::Task::Logistic;
        assert!(matches!(run_compare(&[a.clone(), b]), Err(ExperimentError::Mismatch(_))));
        assert!(matches!(run_compare(&[a]), Err(ExperimentError::Mismatch(_))));
    }
}
