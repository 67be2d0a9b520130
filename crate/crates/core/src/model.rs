//! Local objectives and the penalized subproblems every algorithm solves.
//!
//! A worker's subproblem is
//!
//! ```text
//! h(θ) = f(θ) + Σ_terms sign·⟨λ, θ⟩ + (ρ/2) Σ_terms ‖θ − θ_nbr‖²
//! ```
//!
//! where `sign` is `-1` for the dual on the edge to the left neighbour and
//! `+1` for the dual on the edge to the right neighbour. The linear kind has a
//! closed form; the logistic kind is solved by damped Newton.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Matrix};

/// A worker's local model parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelVector(Vec<f64>);

/// Multiplier attached to a chain edge; same shape as a model.
pub type DualVector = ModelVector;

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ModelVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ModelVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for ModelVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ModelVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AsRef<[f64]> for ModelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Quadratic-penalty weight ρ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PenaltyParam(f64);

impl PenaltyParam {
    pub fn new(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho.is_finite() {
            Ok(Self(rho))
        } else {
            Err(Error::InvalidPenalty(rho))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Linear,
    Logistic,
}

/// Loss of one worker over its data shard. Linear: `½‖Xθ − y‖²`. Logistic:
/// `Σ log(1 + exp(−(2y−1)·xᵀθ))` with labels in `{0, 1}`. No averaging.
#[derive(Debug, Clone)]
pub struct LocalObjective {
    kind: LossKind,
    features: Matrix,
    targets: Vec<f64>,
    // cached normal-equation pieces, only meaningful for the linear kind
    gram: Matrix,
    xty: Vec<f64>,
}

impl LocalObjective {
    pub fn new(kind: LossKind, features: Matrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::InvalidObjective("objective needs at least one sample"));
        }
        if features.cols() == 0 {
            return Err(Error::InvalidObjective("objective needs at least one feature"));
        }
        if targets.len() != features.rows() {
            return Err(Error::DimensionMismatch { expected: features.rows(), found: targets.len() });
        }
        if features.as_slice().iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidObjective("non-finite data"));
        }
        if kind == LossKind::Logistic && targets.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::InvalidObjective("logistic targets must be 0 or 1"));
        }
        let (gram, xty) = match kind {
            LossKind::Linear => (features.gram(), features.tr_mul_vec(&targets)),
            LossKind::Logistic => (Matrix::zeros(0, 0), Vec::new()),
        };
        Ok(Self { kind, features, targets, gram, xty })
    }

    pub fn linear(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::Linear, features, targets)
    }

    pub fn logistic(features: Matrix, targets: Vec<f64>) -> Result<Self> {
        Self::new(LossKind::Logistic, features, targets)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn check_dim(&self, theta: &[f64]) -> Result<()> {
        if theta.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim(), found: theta.len() })
        }
    }

    pub fn eval_loss(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim(theta)?;
        let z = self.features.mul_vec(theta);
        Ok(match self.kind {
            LossKind::Linear => {
                0.5 * z.iter().zip(&self.targets).map(|(p, y)| (p - y) * (p - y)).sum::<f64>()
            }
            LossKind::Logistic => z
                .iter()
                .zip(&self.targets)
                .map(|(&zi, &y)| softplus(-label_sign(y) * zi))
                .sum(),
        })
    }

    pub fn eval_grad(&self, theta: &[f64]) -> Result<ModelVector> {
        self.check_dim(theta)?;
        Ok(match self.kind {
            LossKind::Linear => {
                let mut g = self.gram.mul_vec(theta);
                linalg::axpy(-1.0, &self.xty, &mut g);
                g.into()
            }
            LossKind::Logistic => {
                let z = self.features.mul_vec(theta);
                let w: Vec<f64> = z
                    .iter()
                    .zip(&self.targets)
                    .map(|(&zi, &y)| {
                        let s = label_sign(y);
                        -s * sigmoid(-s * zi)
                    })
                    .collect();
                self.features.tr_mul_vec(&w).into()
            }
        })
    }

    /// Hessian of the loss at `theta`.
    pub fn hessian(&self, theta: &[f64]) -> Result<Matrix> {
        self.check_dim(theta)?;
        Ok(match self.kind {
            LossKind::Linear => self.gram.clone(),
            LossKind::Logistic => {
                let d = self.dim();
                let z = self.features.mul_vec(theta);
                let mut h = Matrix::zeros(d, d);
                for (i, zi) in z.iter().enumerate() {
                    let p = sigmoid(*zi);
                    let w = p * (1.0 - p);
                    if w == 0.0 {
                        continue;
                    }
                    let x = self.features.row(i);
                    for a in 0..d {
                        let wa = w * x[a];
                        for b in a..d {
                            h[(a, b)] += wa * x[b];
                        }
                    }
                }
                for a in 0..d {
                    for b in 0..a {
                        h[(a, b)] = h[(b, a)];
                    }
                }
                h
            }
        })
    }
}

fn label_sign(y: f64) -> f64 {
    2.0 * y - 1.0
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log1p(libm::exp(-z.abs()))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Which side of the worker the dual's edge sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualSign {
    /// `λ_{n−1}` enters as `⟨λ, θ_prev − θ⟩`.
    Left,
    /// `λ_n` enters as `⟨λ, θ − θ_next⟩`.
    Right,
}

impl DualSign {
    pub fn value(self) -> f64 {
        match self {
            DualSign::Left => -1.0,
            DualSign::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NeighborTerm<'a> {
    pub dual: &'a [f64],
    pub sign: DualSign,
    pub neighbor_theta: &'a [f64],
}

/// The one or two neighbour couplings entering a worker's subproblem.
#[derive(Debug, Clone)]
pub struct NeighborContext<'a> {
    terms: Vec<NeighborTerm<'a>>,
}

impl<'a> NeighborContext<'a> {
    pub fn new(terms: Vec<NeighborTerm<'a>>) -> Result<Self> {
        if terms.is_empty() || terms.len() > 2 {
            return Err(Error::InvalidArgument("a worker has one or two neighbours"));
        }
        let d = terms[0].dual.len();
        for t in &terms {
            for len in [t.dual.len(), t.neighbor_theta.len()] {
                if len != d {
                    return Err(Error::DimensionMismatch { expected: d, found: len });
                }
            }
        }
        Ok(Self { terms })
    }

    /// Context for a worker with an optional left and right neighbour, each
    /// given as `(dual on that edge, neighbour model)`.
    pub fn chain(left: Option<(&'a [f64], &'a [f64])>, right: Option<(&'a [f64], &'a [f64])>) -> Result<Self> {
        let mut terms = Vec::with_capacity(2);
        if let Some((dual, nbr)) = left {
            terms.push(NeighborTerm { dual, sign: DualSign::Left, neighbor_theta: nbr });
        }
        if let Some((dual, nbr)) = right {
            terms.push(NeighborTerm { dual, sign: DualSign::Right, neighbor_theta: nbr });
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[NeighborTerm<'a>] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dual.len()
    }

    /// `Σ sign·λ − ρ Σ θ_nbr`, the constant part of the penalty gradient.
    fn linear_part(&self, rho: f64) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for t in &self.terms {
            linalg::axpy(t.sign.value(), t.dual, &mut c);
            linalg::axpy(-rho, t.neighbor_theta, &mut c);
        }
        c
    }

    /// Value of the coupling part of the subproblem at `theta`.
    pub fn penalty_value(&self, rho: f64, theta: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.sign.value() * linalg::dot(t.dual, theta) + 0.5 * rho * linalg::dist_sq(theta, t.neighbor_theta))
            .sum()
    }
}

/// Subproblem objective `h(θ)`.
pub fn subproblem_value(obj: &LocalObjective, rho: PenaltyParam, ctx: &NeighborContext<'_>, theta: &[f64]) -> Result<f64> {
    Ok(obj.eval_loss(theta)? + ctx.penalty_value(rho.get(), theta))
}

/// Gradient of the subproblem objective.
pub fn subproblem_grad(obj: &LocalObjective, rho: PenaltyParam, ctx: &NeighborContext<'_>, theta: &[f64]) -> Result<ModelVector> {
    let mut g = obj.eval_grad(theta)?;
    let c = ctx.linear_part(rho.get());
    let deg = ctx.degree() as f64;
    for ((gi, ci), ti) in g.iter_mut().zip(&c).zip(theta) {
        *gi += ci + rho.get() * deg * ti;
    }
    Ok(g)
}

pub const NEWTON_MAX_ITERS: usize = 100;
pub const DEFAULT_INNER_TOL: f64 = 1e-10;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK_FACTOR: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Cholesky factors of `XᵀX + ρ·deg·I` for the two possible chain degrees,
/// so repeated linear solves skip refactoring.
#[derive(Debug, Clone, Default)]
pub struct SubproblemCache {
    rho: Option<f64>,
    factors: [Option<Cholesky>; 2],
}

impl SubproblemCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn factor(&mut self, obj: &LocalObjective, rho: f64, deg: usize) -> Result<&Cholesky> {
        if self.rho != Some(rho) {
            self.rho = Some(rho);
            self.factors = [None, None];
        }
        let slot = &mut self.factors[deg - 1];
        if slot.is_none() {
            let mut a = obj.gram.clone();
            a.add_diagonal(rho * deg as f64);
            *slot = Some(Cholesky::factor(&a).ok_or(Error::SingularSystem)?);
        }
        Ok(slot.as_ref().expect("factor just populated"))
    }
}

/// Exact minimiser of the worker subproblem (see module docs).
pub fn solve_local_subproblem(obj: &LocalObjective, rho: PenaltyParam, ctx: &NeighborContext<'_>, tol: f64) -> Result<ModelVector> {
    solve_local_subproblem_cached(obj, rho, ctx, tol, &mut SubproblemCache::new())
}

/// As [`solve_local_subproblem`], reusing factorizations held in `cache`.
/// A cache must only ever be used with a single objective.
pub fn solve_local_subproblem_cached(
    obj: &LocalObjective,
    rho: PenaltyParam,
    ctx: &NeighborContext<'_>,
    tol: f64,
    cache: &mut SubproblemCache,
) -> Result<ModelVector> {
    if ctx.dim() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: ctx.dim() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("inner tolerance must be positive"));
    }
    match obj.kind {
        LossKind::Linear => {
            let c = ctx.linear_part(rho.get());
            let rhs: Vec<f64> = obj.xty.iter().zip(&c).map(|(b, c)| b - c).collect();
            let factor = cache.factor(obj, rho.get(), ctx.degree())?;
            Ok(factor.solve(&rhs).into())
        }
        LossKind::Logistic => newton_subproblem(obj, rho, ctx, tol),
    }
}

fn newton_subproblem(obj: &LocalObjective, rho: PenaltyParam, ctx: &NeighborContext<'_>, tol: f64) -> Result<ModelVector> {
    let d = obj.dim();
    let deg = ctx.degree();
    // start at the neighbours' mean
    let mut theta = vec![0.0; d];
    for t in ctx.terms() {
        linalg::axpy(1.0 / deg as f64, t.neighbor_theta, &mut theta);
    }
    let shift = rho.get() * deg as f64;
    damped_newton(
        theta,
        |t| subproblem_value(obj, rho, ctx, t),
        |t| subproblem_grad(obj, rho, ctx, t).map(ModelVector::into_inner),
        |t| {
            let mut h = obj.hessian(t)?;
            h.add_diagonal(shift);
            Ok(h)
        },
        tol,
        NEWTON_MAX_ITERS,
    )
    .map(Into::into)
}

/// Newton's method with Armijo backtracking, stopping once `‖∇‖ ≤ tol`.
/// When the predicted decrease is at round-off level of the value the full
/// step is taken, since the sufficient-decrease test can no longer tell
/// progress from noise there.
fn damped_newton(
    mut theta: Vec<f64>,
    value_at: impl Fn(&[f64]) -> Result<f64>,
    grad_at: impl Fn(&[f64]) -> Result<Vec<f64>>,
    hessian_at: impl Fn(&[f64]) -> Result<Matrix>,
    tol: f64,
    cap: usize,
) -> Result<Vec<f64>> {
    let mut value = value_at(&theta)?;
    let mut grad = grad_at(&theta)?;
    for _ in 0..cap {
        let gnorm = linalg::norm(&grad);
        if gnorm <= tol {
            return Ok(theta);
        }
        let h = hessian_at(&theta)?;
        let step: Vec<f64> = match Cholesky::factor(&h) {
            Some(ch) => ch.solve(&grad),
            None => linalg::psd_pinv_solve(&h, &grad).0,
        }
        .into_iter()
        .map(|v| -v)
        .collect();
        let slope = linalg::dot(&grad, &step);
        if !(slope < 0.0) {
            return Err(Error::InnerSolverCap { iterations: cap, grad_norm: gnorm, last: theta.into() });
        }

        let at = |t: f64| -> Vec<f64> { theta.iter().zip(&step).map(|(x, s)| x + t * s).collect() };
        let next = if -slope <= 64.0 * f64::EPSILON * value.abs().max(1.0) {
            let trial = at(1.0);
            let g = grad_at(&trial)?;
            if linalg::norm(&g) >= gnorm {
                return Err(Error::InnerSolverCap { iterations: cap, grad_norm: gnorm, last: theta.into() });
            }
            value = value_at(&trial)?;
            grad = g;
            trial
        } else {
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial = at(t);
                let v = value_at(&trial)?;
                if v <= value + ARMIJO_C * t * slope {
                    accepted = Some((trial, v));
                    break;
                }
                t *= BACKTRACK_FACTOR;
            }
            let (trial, v) = accepted.ok_or(Error::InnerSolverCap { iterations: cap, grad_norm: gnorm, last: theta.clone().into() })?;
            value = v;
            grad = grad_at(&trial)?;
            trial
        };
        theta = next;
    }
    let grad_norm = linalg::norm(&grad);
    if grad_norm <= tol {
        Ok(theta)
    } else {
        Err(Error::InnerSolverCap { iterations: cap, grad_norm, last: theta.into() })
    }
}

/// Centralized optimum of `Σ_n f_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum {
    pub theta: ModelVector,
    pub f_star: f64,
    /// The pooled linear system was singular; `theta` is the least-norm solution.
    pub rank_deficient: bool,
}

pub fn total_loss(objs: &[LocalObjective], theta: &[f64]) -> Result<f64> {
    objs.iter().map(|o| o.eval_loss(theta)).sum()
}

/// Pools every shard and solves the centralized problem.
pub fn compute_reference_optimum(objs: &[LocalObjective], tol: f64) -> Result<ReferenceOptimum> {
    let first = objs.first().ok_or(Error::InvalidArgument("no objectives"))?;
    let d = first.dim();
    let kind = first.kind;
    for o in objs {
        if o.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: o.dim() });
        }
        if o.kind != kind {
            return Err(Error::InvalidArgument("objectives mix loss kinds"));
        }
    }
    let (theta, rank_deficient) = match kind {
        LossKind::Linear => {
            let mut g = Matrix::zeros(d, d);
            let mut b = vec![0.0; d];
            for o in objs {
                g.add_assign(&o.gram);
                linalg::axpy(1.0, &o.xty, &mut b);
            }
            match Cholesky::factor(&g) {
                Some(ch) if well_conditioned(&g) => (ch.solve(&b), false),
                _ => linalg::psd_pinv_solve(&g, &b),
            }
        }
        LossKind::Logistic => (pooled_newton(objs, d, tol)?, false),
    };
    let f_star = total_loss(objs, &theta)?;
    Ok(ReferenceOptimum { theta: theta.into(), f_star, rank_deficient })
}

fn well_conditioned(g: &Matrix) -> bool {
    let (vals, _) = linalg::symmetric_eigen(g);
    let max = vals.iter().cloned().fold(0.0f64, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    min > max * 1e-12 * g.rows() as f64
}

fn pooled_newton(objs: &[LocalObjective], d: usize, tol: f64) -> Result<Vec<f64>> {
    damped_newton(
        vec![0.0; d],
        |t| total_loss(objs, t),
        |t| {
            let mut g = vec![0.0; d];
            for o in objs {
                linalg::axpy(1.0, &o.eval_grad(t)?, &mut g);
            }
            Ok(g)
        },
        |t| {
            let mut h = Matrix::zeros(d, d);
            for o in objs {
                h.add_assign(&o.hessian(t)?);
            }
            Ok(h)
        },
        tol,
        10 * NEWTON_MAX_ITERS,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(rows: &[&[f64]], y: &[f64]) -> LocalObjective {
        LocalObjective::linear(Matrix::from_rows(rows).unwrap(), y.to_vec()).unwrap()
    }

    fn rho(v: f64) -> PenaltyParam {
        PenaltyParam::new(v).unwrap()
    }

    #[test]
    fn linear_loss_values() {
        assert_eq!(lin(&[&[1.0]], &[0.0]).eval_loss(&[0.0]).unwrap(), 0.0);
        assert_eq!(lin(&[&[1.0]], &[2.0]).eval_loss(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn logistic_loss_at_zero_is_m_log2() {
        let obj = LocalObjective::logistic(
            Matrix::from_rows(&[[0.3, -1.0], [2.0, 0.5], [-1.5, 4.0]]).unwrap(),
            vec![1.0, 0.0, 1.0],
        )
        .unwrap();
        let v = obj.eval_loss(&[0.0, 0.0]).unwrap();
        assert!((v - 3.0 * core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradients_at_hand_points() {
        assert_eq!(&*lin(&[&[1.0]], &[2.0]).eval_grad(&[0.0]).unwrap(), &[-2.0]);
        let obj = LocalObjective::logistic(Matrix::from_rows(&[[1.0]]).unwrap(), vec![1.0]).unwrap();
        assert!((obj.eval_grad(&[0.0]).unwrap()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let obj = lin(&[&[1.0, 2.0]], &[1.0]);
        assert_eq!(obj.eval_loss(&[0.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 }));
        assert!(obj.eval_grad(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn objective_validation() {
        assert!(LocalObjective::logistic(Matrix::from_rows(&[[1.0]]).unwrap(), vec![0.5]).is_err());
        assert!(LocalObjective::linear(Matrix::zeros(0, 2), vec![]).is_err());
        assert!(LocalObjective::linear(Matrix::from_rows(&[[1.0]]).unwrap(), vec![1.0, 2.0]).is_err());
        assert!(PenaltyParam::new(0.0).is_err());
        assert!(PenaltyParam::new(f64::NAN).is_err());
    }

    #[test]
    fn linear_subproblem_hand_solve() {
        let obj = lin(&[&[1.0]], &[1.0]);
        let ctx = NeighborContext::chain(None, Some((&[0.0], &[3.0]))).unwrap();
        let th = solve_local_subproblem(&obj, rho(1.0), &ctx, 1e-10).unwrap();
        assert!((th[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_fixed_point_at_origin() {
        let obj = lin(&[&[1.0]], &[0.0]);
        for r in [0.1, 1.0, 17.0] {
            let ctx = NeighborContext::chain(None, Some((&[0.0], &[0.0]))).unwrap();
            assert_eq!(&*solve_local_subproblem(&obj, rho(r), &ctx, 1e-10).unwrap(), &[0.0]);
        }
    }

    #[test]
    fn context_shape_is_validated() {
        assert!(NeighborContext::new(Vec::new()).is_err());
        let a = [0.0];
        let b = [0.0, 1.0];
        assert!(NeighborContext::chain(Some((&a, &b)), None).is_err());
    }

    #[test]
    fn logistic_subproblem_meets_gradient_tolerance() {
        let obj = LocalObjective::logistic(
            Matrix::from_rows(&[[1.0, 0.2], [-0.5, 1.0], [2.0, -1.0], [0.3, 0.3]]).unwrap(),
            vec![1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let (l, nl, r, nr) = ([0.4, -0.2], [1.0, 2.0], [-0.3, 0.1], [0.5, -1.0]);
        let ctx = NeighborContext::chain(Some((&l, &nl)), Some((&r, &nr))).unwrap();
        let th = solve_local_subproblem(&obj, rho(0.7), &ctx, 1e-10).unwrap();
        // independent gradient: f' + (−λ_l) + λ_r + ρ(θ − nl) + ρ(θ − nr)
        let mut g = obj.eval_grad(&th).unwrap().into_inner();
        for i in 0..2 {
            g[i] += -l[i] + r[i] + 0.7 * (th[i] - nl[i]) + 0.7 * (th[i] - nr[i]);
        }
        assert!(linalg::norm(&g) <= 1e-10);
    }

    #[test]
    fn reference_optimum_pools_shards() {
        let objs = [lin(&[&[1.0]], &[1.0]), lin(&[&[1.0]], &[3.0])];
        let r = compute_reference_optimum(&objs, 1e-12).unwrap();
        assert!((r.theta[0] - 2.0).abs() < 1e-15);
        assert!((r.f_star - 1.0).abs() < 1e-15);
        assert!(!r.rank_deficient);

        let r = compute_reference_optimum(&[lin(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0])], 1e-12).unwrap();
        assert_eq!(&*r.theta, &[0.0, 0.0]);
        assert_eq!(r.f_star, 0.0);
    }

    #[test]
    fn reference_optimum_flags_rank_deficiency() {
        // both features identical: least-norm splits the weight evenly
        let objs = [lin(&[&[1.0, 1.0]], &[2.0]), lin(&[&[2.0, 2.0]], &[4.0])];
        let r = compute_reference_optimum(&objs, 1e-12).unwrap();
        assert!(r.rank_deficient);
        assert!((r.theta[0] - 1.0).abs() < 1e-10 && (r.theta[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn logistic_symmetric_data_has_zero_optimum() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [-1.0, -2.0], [0.5, -1.0], [-0.5, 1.0]]).unwrap();
        // each direction appears with both signs under the same label
        let obj = LocalObjective::logistic(x, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let objs = [obj];
        let r = compute_reference_optimum(&objs, 1e-12).unwrap();
        assert!(linalg::norm(&r.theta) < 1e-12, "{:?}", r.theta);
    }

    #[test]
    fn mixed_kinds_are_rejected() {
        let a = lin(&[&[1.0]], &[1.0]);
        let b = LocalObjective::logistic(Matrix::from_rows(&[[1.0]]).unwrap(), vec![1.0]).unwrap();
        assert!(compute_reference_optimum(&[a, b], 1e-10).is_err());
    }
}
